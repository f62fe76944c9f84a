//! Acceptance summary assembled from whatever stage outputs exist.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::stages::{
    literate_name, CensusSummary, CircuitSummary, EncodeSummary, RsaSummary, Selection, Timing, TrainSummary,
    VismaxSummary, ILLITERATE,
};
use super::{write_bytes, write_json, Pipeline, Stage};
use crate::cornet::Layer;
use crate::error::Result;
use crate::probelab::{Scheme, UnitClass};
use crate::stimgen::Script;

/// Responses this close are treated as unchanged.
pub const WINDOW_TOLERANCE: f64 = 1e-6;
pub const TRAINING_BUDGET_SECONDS: f64 = 1800.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
}

impl Cmp {
    fn holds(self, v: f64, t: f64) -> bool {
        match self {
            Cmp::Gt => v > t,
            Cmp::Ge => v >= t,
            Cmp::Lt => v < t,
            Cmp::Le => v <= t,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
        }
    }
}

/// One measured quantity against its threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub what: String,
    pub measured: Option<f64>,
    pub cmp: Cmp,
    pub threshold: f64,
    /// Reported but not counted toward the verdict.
    pub advisory: bool,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(what: impl Into<String>, measured: Option<f64>, cmp: Cmp, threshold: f64) -> Self {
        let verdict = match measured {
            Some(v) if v.is_finite() || v.is_infinite() => {
                if cmp.holds(v, threshold) {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                }
            }
            _ => Verdict::Unknown,
        };
        Check {
            what: what.into(),
            measured: measured.filter(|v| !v.is_nan()),
            cmp,
            threshold,
            advisory: false,
            verdict,
        }
    }

    /// A strict-majority check over a population: fails when the population
    /// is known to be empty, unknown when its input is missing.
    fn majority(what: impl Into<String>, counts: Option<(usize, usize)>) -> Self {
        let mut c = Check::new(what, counts.and_then(|(n, d)| ratio(n, d)), Cmp::Gt, 0.5);
        if counts.is_some_and(|(_, d)| d == 0) {
            c.verdict = Verdict::Fail;
        }
        c
    }

    pub fn line(&self) -> String {
        let m = match (self.measured, self.verdict) {
            (Some(v), _) => v.to_string(),
            (None, Verdict::Fail) => "no units".to_string(),
            (None, _) => "missing".to_string(),
        };
        let tag = if self.advisory { " (advisory)" } else { "" };
        format!("{:<7} {}: {} {} {}{tag}", self.verdict.to_string(), self.what, m, self.cmp.symbol(), self.threshold)
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: u32,
    pub name: String,
    pub checks: Vec<Check>,
    /// Measured by the acceptance test suite rather than from run outputs.
    pub suite: bool,
    pub note: Option<String>,
    pub verdict: Verdict,
}

impl Criterion {
    fn new(id: u32, name: &str, checks: Vec<Check>) -> Self {
        let counted: Vec<Verdict> = checks.iter().filter(|c| !c.advisory).map(|c| c.verdict).collect();
        let verdict = combine(&counted);
        Criterion {
            id,
            name: name.into(),
            checks,
            suite: false,
            note: None,
            verdict,
        }
    }

    fn suite(id: u32, name: &str, note: &str) -> Self {
        Criterion {
            id,
            name: name.into(),
            checks: Vec::new(),
            suite: true,
            note: Some(note.into()),
            verdict: Verdict::Unknown,
        }
    }

    fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn combine(vs: &[Verdict]) -> Verdict {
    if vs.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if vs.is_empty() || vs.contains(&Verdict::Unknown) {
        Verdict::Unknown
    } else {
        Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config_hash: String,
    pub criteria: Vec<Criterion>,
    /// FAIL if any run-measured criterion fails, UNKNOWN if any is
    /// missing, PASS otherwise.
    pub overall: Verdict,
}

impl Report {
    pub fn criterion(&self, id: u32) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "acceptance report (config {})", &self.config_hash[..12.min(self.config_hash.len())]);
        for c in &self.criteria {
            let _ = writeln!(s, "\n[{}] {:>2}. {}", c.verdict, c.id, c.name);
            if let Some(n) = &c.note {
                let _ = writeln!(s, "      note: {n}");
            }
            for k in &c.checks {
                let _ = writeln!(s, "      {}", k.line());
            }
        }
        let _ = writeln!(s, "\noverall: {}", self.overall);
        s
    }
}

fn load<T: DeserializeOwned>(path: &Path) -> Option<T> {
    super::read_json(path).ok()
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

const DEEP: [Layer; 3] = [Layer::V4, Layer::IT, Layer::H];

pub(crate) fn build(p: &Pipeline) -> Report {
    let cfg = &p.config;
    let dir = |s: Stage| p.stage_dir(s);
    let illiterate: Option<TrainSummary> = load(&dir(Stage::TrainIlliterate).join("summary.json"));
    let literate: Option<Vec<TrainSummary>> = load(&dir(Stage::TrainLiterate).join("summary.json"));
    let primary = literate_name(cfg.primary_script());
    let sel = |net: &str| load::<Selection>(&super::stages::selection_path(p, net));
    let rsa: Option<RsaSummary> = load(&dir(Stage::Rsa).join("summary.json"));
    let enc: Option<EncodeSummary> = load(&dir(Stage::Encode).join("summary.json"));
    let census: Option<CensusSummary> = load(&dir(Stage::Census).join("summary.json"));
    let circuit: Option<CircuitSummary> = load(&dir(Stage::Circuit).join("summary.json"));
    let vismax: Option<VismaxSummary> = load(&dir(Stage::Vismax).join("summary.json"));

    let mut criteria = vec![Criterion::suite(
        1,
        "gradient correctness",
        "finite-difference adjoint checks run in the acceptance test suite",
    )];

    // 2
    let phase1 = illiterate.as_ref().and_then(|s| s.final_accuracy.get("objects").copied());
    let mut c2 = vec![Check::new("phase-1 object accuracy", phase1, Cmp::Gt, 0.8)];
    for s in &cfg.scripts {
        let name = literate_name(*s);
        let run = literate.as_ref().and_then(|v| v.iter().find(|t| t.network == name));
        let words = run.and_then(|r| r.final_accuracy.get("words").copied());
        let objects = run.and_then(|r| r.final_accuracy.get("objects").copied());
        c2.push(Check::new(format!("{name} word accuracy"), words, Cmp::Ge, 0.8));
        c2.push(Check::new(
            format!("{name} object accuracy drop from phase 1"),
            objects.zip(phase1).map(|(o, p1)| p1 - o),
            Cmp::Le,
            0.05,
        ));
    }
    criteria.push(
        Criterion::new(2, "training works", c2).with_note("training time is checked separately in timing.json"),
    );

    // 3
    let lit_h = sel(&primary).map(|s| s.count(Layer::H));
    let ill_h = sel(ILLITERATE).map(|s| s.count(Layer::H));
    criteria.push(Criterion::new(
        3,
        "literacy increases word selectivity",
        vec![
            Check::new("literate word-selective H units", lit_h.map(|v| v as f64), Cmp::Gt, 0.0),
            Check::new(
                "literate minus 5x illiterate H units",
                lit_h.zip(ill_h).map(|(l, i)| l as f64 - 5.0 * i as f64),
                Cmp::Ge,
                0.0,
            ),
        ],
    ));

    // 4, 5
    let md = |net: &str, s: Script, l: Layer| {
        rsa.as_ref().and_then(|r| r.get(net)?.get(&s)?.get(&l)?.mean)
    };
    let ps = cfg.primary_script();
    criteria.push(Criterion::new(
        4,
        "literacy increases bigram dissimilarity",
        DEEP.iter()
            .map(|&l| {
                let d = md(&primary, ps, l).zip(md(ILLITERATE, ps, l)).map(|(a, b)| a - b);
                Check::new(format!("{l}: literate minus illiterate"), d, Cmp::Gt, 0.0)
            })
            .collect(),
    ));
    let mut c5 = Vec::new();
    if cfg.scripts.contains(&Script::A) && cfg.scripts.contains(&Script::B) {
        for (own, other) in [(Script::A, Script::B), (Script::B, Script::A)] {
            let net = literate_name(own);
            for &l in &DEEP {
                let d = md(&net, own, l).zip(md(&net, other, l)).map(|(a, b)| a - b);
                c5.push(Check::new(format!("{net} {l}: own minus other script"), d, Cmp::Gt, 0.0));
            }
        }
    } else {
        c5.push(Check::new("both scripts trained", None, Cmp::Gt, 0.0));
    }
    criteria.push(Criterion::new(5, "script-specific dissimilarity", c5));

    // 6, 7
    let mr = |s: Scheme| enc.as_ref().and_then(|e| e.mean_r.get(&s).copied());
    let edge_best = enc.as_ref().map(|e| e.best.get("edge").copied().unwrap_or(0));
    criteria.push(Criterion::new(
        6,
        "edge-aligned position scheme fits best",
        vec![
            Check::new("mean r_cv edge minus left", mr(Scheme::Edge).zip(mr(Scheme::Left)).map(|(a, b)| a - b), Cmp::Ge, 0.0),
            Check::new(
                "mean r_cv edge minus center",
                mr(Scheme::Edge).zip(mr(Scheme::Center)).map(|(a, b)| a - b),
                Cmp::Ge,
                0.0,
            ),
            Check::majority("fraction of units best fit by edge", enc.as_ref().map(|e| (edge_best.unwrap(), e.n_fitted))),
        ],
    ));
    criteria.push(Criterion::new(
        7,
        "position tuning is sharper at the edges",
        vec![Check::new(
            "FWHM groups 1,2,7,8 minus groups 4,5",
            enc.as_ref().and_then(|e| e.edge_width.zip(e.middle_width)).map(|(a, b)| a - b),
            Cmp::Lt,
            0.0,
        )],
    ));

    // 8
    let v1 = census.as_ref().and_then(|c| c.rows.iter().find(|r| r.layer == Layer::V1).cloned());
    criteria.push(Criterion::new(
        8,
        "layer gradient from retinotopic to ordinal codes",
        vec![
            Check::new("V1 retinotopic fraction of classified units", v1.as_ref().and_then(|r| r.fraction(UnitClass::Retinotopic)), Cmp::Ge, 1.0),
            Check::new("retinotopic share vs layer, Spearman", census.as_ref().and_then(|c| c.retinotopic_trend), Cmp::Lt, 0.0),
            Check::new("ordinal share vs layer, Spearman", census.as_ref().and_then(|c| c.ordinal_trend), Cmp::Gt, 0.0),
            Check::majority(
                "V2/V4 ordinal candidates relabelled space",
                census.as_ref().map(|c| (c.early_space, c.early_candidates)),
            ),
            Check::majority(
                "IT/H ordinal candidates staying ordinal",
                census.as_ref().map(|c| (c.late_ordinal, c.late_candidates)),
            ),
        ],
    ));

    criteria.push(Criterion::suite(
        9,
        "lasso oracle equivalence",
        "closed-form and proximal-gradient oracles run in the acceptance test suite",
    ));

    // 10
    criteria.push(
        Criterion::new(
            10,
            "circuit dissection sanity",
            vec![
                Check::new("IT units probed", circuit.as_ref().map(|c| c.it_units as f64), Cmp::Gt, 0.0),
                Check::new(
                    "largest IT change after zeroing V4 outside the window",
                    circuit.as_ref().map(|c| c.window_max_diff),
                    Cmp::Le,
                    WINDOW_TOLERANCE,
                ),
                Check::new(
                    "ordinal IT units fed by space and retinotopic V4 channels",
                    circuit.as_ref().map(|c| c.replicating_units.len() as f64),
                    Cmp::Ge,
                    1.0,
                )
                .advisory(),
            ],
        )
        .with_note("fixture rankings are asserted in the acceptance test suite"),
    );

    // 11
    let runs = vismax.as_ref().map(|v| &v.runs);
    let h_ratio = runs.and_then(|rs| {
        rs.iter()
            .filter(|r| r.word.is_none())
            .map(|r| if r.initial > 0.0 { (r.last / r.initial) as f64 } else if r.last > 0.0 { f64::INFINITY } else { 0.0 })
            .reduce(f64::min)
    });
    criteria.push(
        Criterion::new(
            11,
            "activation maximization",
            vec![
                Check::new(
                    "non-monotone traces",
                    runs.map(|rs| rs.iter().filter(|r| !r.monotone).count() as f64),
                    Cmp::Le,
                    0.0,
                ),
                Check::new("smallest H final/initial activation", h_ratio, Cmp::Ge, 5.0),
            ],
        )
        .with_note("the pixel-gradient finite-difference check runs in the acceptance test suite"),
    );

    criteria.push(Criterion::suite(
        12,
        "reproducibility",
        "two end-to-end runs are compared byte for byte in the acceptance test suite",
    ));

    let counted: Vec<Verdict> = criteria.iter().filter(|c| !c.suite).map(|c| c.verdict).collect();
    Report {
        config_hash: cfg.hash(),
        overall: combine(&counted),
        criteria,
    }
}

/// Wall-clock checks, kept apart from the report so that reruns of the
/// same configuration produce identical reports.
pub fn timing_checks(p: &Pipeline) -> Vec<Check> {
    let dir = |s: Stage| p.stage_dir(s);
    let t_ill: Option<Timing> = load(&dir(Stage::TrainIlliterate).join(super::TIMING));
    let t_lit: Option<Timing> = load(&dir(Stage::TrainLiterate).join(super::TIMING));
    let primary = literate_name(p.config.primary_script());
    let mut checks = Vec::new();
    let secs = |t: &Option<Timing>, k: &str| t.as_ref().and_then(|t| t.seconds.get(k).copied());
    checks.push(Check::new(
        "training seconds, illiterate plus primary literate",
        secs(&t_ill, ILLITERATE).zip(secs(&t_lit, &primary)).map(|(a, b)| a + b),
        Cmp::Lt,
        TRAINING_BUDGET_SECONDS,
    ));
    let all_secs = t_ill
        .iter()
        .chain(t_lit.iter())
        .flat_map(|t| t.seconds.values())
        .sum::<f64>();
    checks.push(Check::new("training seconds, every network", (t_lit.is_some()).then_some(all_secs), Cmp::Lt, TRAINING_BUDGET_SECONDS).advisory());
    checks
}

pub(crate) fn emit(p: &Pipeline) -> Result<()> {
    let report = build(p);
    let dir = p.stage_dir(Stage::Report);
    write_json(&dir.join("report.json"), &report)?;
    write_bytes(&dir.join("report.txt"), report.to_text().as_bytes())?;
    write_json(&dir.join(super::TIMING), &timing_checks(p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_distinguishes_missing_from_empty() {
        assert_eq!(Check::majority("m", None).verdict, Verdict::Unknown);
        let empty = Check::majority("m", Some((0, 0)));
        assert_eq!((empty.verdict, empty.measured), (Verdict::Fail, None));
        assert!(empty.line().contains("no units"));
        assert_eq!(Check::majority("m", Some((2, 4))).verdict, Verdict::Fail);
        assert_eq!(Check::majority("m", Some((3, 4))).verdict, Verdict::Pass);
    }
}
