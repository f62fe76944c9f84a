use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::figures::{render_curves, render_heatmap};
use super::{read_json, write_bytes, write_json, Pipeline, Stage, TIMING};
use crate::circuit::output::{pgm_bytes, write_drive_csv};
use crate::circuit::{
    activation_maximize, center_unit, single_letter_profiles, upstream_drive, upstream_window, v1_filter_images,
    v1_to_v2_dissection, DriveRanking, Eligible, LetterMap, MaximizeConfig, V1Dissection,
};
use crate::cornet::{
    load_checkpoint, save_checkpoint, train, Checkpoint, EpochRecord, EvalSet, Layer, Network, Phase, PhaseRecord,
    Stream,
};
use crate::error::{Error, Result};
use crate::probelab::census::CensusRow;
use crate::probelab::output::{write_census_csv, write_encoding_csv, write_rdm_csv, write_units_csv};
use crate::probelab::stats::spearman;
use crate::probelab::{
    all_pairs, mean_dissimilarity, position_tuning_curves, probe_units, rdm, scheme_comparison, select_units_in,
    EncodingFit, Scheme, TuningCurves, UnitClass, UnitProfile, UnitRef,
};
use crate::stimgen::glyphs::N_STYLES;
use crate::stimgen::objects::N_OBJECT_CLASSES;
use crate::stimgen::probes::{bigram_images, centered_word, factorial_probe, random_word_images};
use crate::stimgen::{build_object_dataset, build_word_dataset, nonword_groups, GlyphSet, LabeledDataset, Script, Split};
use crate::tensor::{lxt, Tensor};

pub(crate) const HIDDEN: [Layer; 5] = [Layer::V1, Layer::V2, Layer::V4, Layer::IT, Layer::H];

pub(crate) fn run(p: &Pipeline, stage: Stage) -> Result<()> {
    match stage {
        Stage::Gen => gen(p),
        Stage::TrainIlliterate => train_illiterate(p),
        Stage::TrainLiterate => train_literate(p),
        Stage::Select => select(p),
        Stage::Rsa => rsa(p),
        Stage::Encode => encode(p),
        Stage::Probe => probe(p),
        Stage::Census => census(p),
        Stage::Circuit => circuit(p),
        Stage::Vismax => vismax(p),
        Stage::Report => super::report::emit(p),
    }
}

pub(crate) const ILLITERATE: &str = "illiterate";

pub(crate) fn literate_name(script: Script) -> String {
    format!("literate-{}", script.name())
}

fn data_path(p: &Pipeline, name: &str) -> PathBuf {
    p.stage_dir(Stage::Gen).join(format!("{name}.lxds"))
}

fn words_name(script: Script, split: Split) -> String {
    let s = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    format!("words-{}-{s}", script.name())
}

fn checkpoint_dir(p: &Pipeline, network: &str) -> PathBuf {
    if network == ILLITERATE {
        p.stage_dir(Stage::TrainIlliterate).join("checkpoint")
    } else {
        p.stage_dir(Stage::TrainLiterate).join(network)
    }
}

/// Every trained network with the script its words are drawn from.
pub(crate) fn networks(p: &Pipeline) -> Vec<(String, Script)> {
    let mut out = vec![(ILLITERATE.to_string(), p.config.primary_script())];
    out.extend(p.config.scripts.iter().map(|&s| (literate_name(s), s)));
    out
}

fn load_net(p: &Pipeline, network: &str) -> Result<Network> {
    Ok(load_checkpoint(checkpoint_dir(p, network))?.network)
}

fn primary(p: &Pipeline) -> (String, Script) {
    let s = p.config.primary_script();
    (literate_name(s), s)
}

fn pgm(path: &Path, values: &[f64], width: usize, height: usize, scale: usize) -> Result<()> {
    write_bytes(path, &pgm_bytes(values, width, height, scale)?)
}

fn column(acts: &[f32], n_units: usize, unit: usize) -> Vec<f64> {
    acts.iter().skip(unit).step_by(n_units).map(|&v| v as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct Timing {
    pub seconds: BTreeMap<String, f64>,
}

// ---- gen ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct GenSummary {
    pub datasets: BTreeMap<String, usize>,
}

fn gen(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Gen);
    let mut datasets = BTreeMap::new();
    let mut save = |name: String, d: &LabeledDataset| -> Result<()> {
        d.save(data_path(p, &name))?;
        datasets.insert(name, d.len());
        Ok(())
    };
    save("objects-train".into(), &build_object_dataset(N_OBJECT_CLASSES, cfg.objects_train_per_class, cfg.seed, Split::Train)?)?;
    save("objects-test".into(), &build_object_dataset(N_OBJECT_CLASSES, cfg.objects_test_per_class, cfg.seed, Split::Test)?)?;
    for &s in &cfg.scripts {
        let glyphs = GlyphSet::new(s);
        let (tr, te) = build_word_dataset(&glyphs, &cfg.lexicon(), cfg.words_train_per_word, cfg.words_test_per_word, cfg.seed)?;
        save(words_name(s, Split::Train), &tr)?;
        save(words_name(s, Split::Test), &te)?;
        for style in 0..N_STYLES {
            write_bytes(&dir.join(format!("glyphs-{}-style{style}.pgm", s.name())), &glyphs.sheet_pgm(style, false))?;
        }
    }
    write_json(&dir.join("summary.json"), &GenSummary { datasets })
}

// ---- training ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct TrainSummary {
    pub network: String,
    pub epochs: usize,
    /// Held-out accuracy after the last epoch, by evaluation set.
    pub final_accuracy: BTreeMap<String, f64>,
    pub initial_accuracy: BTreeMap<String, f64>,
}

fn progress<'a>(p: &'a Pipeline, tag: &str) -> impl FnMut(&EpochRecord) + 'a {
    let tag = tag.to_string();
    move |r: &EpochRecord| {
        p.log(format!(
            "[{tag}] epoch {} lr {:.4} loss {:.4} acc {:.3} eval {:?}",
            r.epoch + 1,
            r.lr,
            r.train_loss,
            r.train_acc,
            r.eval_acc
        ))
    }
}

fn summary_of(network: &str, report: &crate::cornet::TrainReport) -> TrainSummary {
    TrainSummary {
        network: network.into(),
        epochs: report.epochs.len(),
        final_accuracy: report.epochs.last().map(|e| e.eval_acc.clone()).unwrap_or_default(),
        initial_accuracy: report.initial_eval_acc.clone(),
    }
}

fn train_illiterate(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::TrainIlliterate);
    let start = Instant::now();
    let otr = LabeledDataset::load(data_path(p, "objects-train"))?;
    let ote = LabeledDataset::load(data_path(p, "objects-test"))?;
    let mut net = Network::init(cfg.network(), cfg.seed)?;
    let tc = cfg.train_config(cfg.illiterate_epochs);
    let report = train(
        &mut net,
        &[Stream { data: &otr, label_offset: 0 }],
        &[EvalSet { name: "objects".into(), data: &ote, label_offset: 0 }],
        &tc,
        cfg.seed,
        ILLITERATE,
        progress(p, "train-illiterate"),
    )?;
    let summary = summary_of(ILLITERATE, &report);
    let history = vec![PhaseRecord { phase: Phase::Illiterate, train: tc, report }];
    save_checkpoint(&Checkpoint::new(net, Phase::Illiterate, cfg.seed, None, history), checkpoint_dir(p, ILLITERATE))?;
    write_json(&dir.join("summary.json"), &summary)?;
    let seconds = BTreeMap::from([(ILLITERATE.to_string(), start.elapsed().as_secs_f64())]);
    write_json(&dir.join(TIMING), &Timing { seconds })
}

fn train_literate(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::TrainLiterate);
    let otr = LabeledDataset::load(data_path(p, "objects-train"))?;
    let ote = LabeledDataset::load(data_path(p, "objects-test"))?;
    let mut summaries = Vec::new();
    let mut seconds = BTreeMap::new();
    for &s in &cfg.scripts {
        let start = Instant::now();
        let name = literate_name(s);
        let wtr = LabeledDataset::load(data_path(p, &words_name(s, Split::Train)))?;
        let wte = LabeledDataset::load(data_path(p, &words_name(s, Split::Test)))?;
        let base = load_checkpoint(checkpoint_dir(p, ILLITERATE))?;
        let mut net = base.network;
        net.extend_output(wtr.class_names.len(), cfg.seed)?;
        let offset = N_OBJECT_CLASSES as u32;
        let tc = cfg.train_config(cfg.literate_epochs);
        let report = train(
            &mut net,
            &[Stream { data: &otr, label_offset: 0 }, Stream { data: &wtr, label_offset: offset }],
            &[
                EvalSet { name: "objects".into(), data: &ote, label_offset: 0 },
                EvalSet { name: "words".into(), data: &wte, label_offset: offset },
            ],
            &tc,
            cfg.seed,
            &name,
            progress(p, &format!("train-literate {}", s.name())),
        )?;
        summaries.push(summary_of(&name, &report));
        let mut history = base.manifest.history;
        history.push(PhaseRecord { phase: Phase::Literate, train: tc, report });
        let ckpt = Checkpoint::new(net, Phase::Literate, cfg.seed, Some(s.name().into()), history);
        save_checkpoint(&ckpt, checkpoint_dir(p, &name))?;
        seconds.insert(name, start.elapsed().as_secs_f64());
    }
    write_json(&dir.join("summary.json"), &summaries)?;
    write_json(&dir.join(TIMING), &Timing { seconds })
}

// ---- select ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct Selection {
    pub network: String,
    pub script: Script,
    pub n_units: BTreeMap<Layer, usize>,
    pub units: BTreeMap<Layer, Vec<UnitRef>>,
}

impl Selection {
    pub fn count(&self, layer: Layer) -> usize {
        self.units.get(&layer).map_or(0, Vec::len)
    }

    pub fn of(&self, layer: Layer) -> &[UnitRef] {
        self.units.get(&layer).map_or(&[], Vec::as_slice)
    }
}

pub(crate) fn selection_path(p: &Pipeline, network: &str) -> PathBuf {
    p.stage_dir(Stage::Select).join(format!("{network}.json"))
}

fn select(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let groups = nonword_groups(cfg.nonword_per_group, cfg.seed)?;
    for (name, script) in networks(p) {
        let net = load_net(p, &name)?;
        let words = random_word_images(&GlyphSet::new(script), &cfg.lexicon(), cfg.selection_words, cfg.seed)?;
        let mut units = BTreeMap::new();
        let mut n_units = BTreeMap::new();
        for layer in HIDDEN {
            let sel = select_units_in(&net, layer, &words, &groups, cfg.k_sd)?;
            p.log(format!("[select] {name} {layer}: {} of {}", sel.len(), net.layer_len(layer)));
            units.insert(layer, sel);
            n_units.insert(layer, net.layer_len(layer));
        }
        write_json(&selection_path(p, &name), &Selection { network: name.clone(), script, n_units, units })?;
    }
    Ok(())
}

// ---- rsa ----

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub(crate) struct RsaEntry {
    pub mean: Option<f64>,
    pub n_pairs: usize,
    pub n_undefined: usize,
}

/// network -> bigram script -> layer -> mean dissimilarity
pub(crate) type RsaSummary = BTreeMap<String, BTreeMap<Script, BTreeMap<Layer, RsaEntry>>>;

fn rsa(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Rsa);
    let scripts: BTreeSet<Script> = cfg.scripts.iter().copied().collect();
    let pairs = all_pairs(cfg.bigrams.len());
    let mut summary: RsaSummary = BTreeMap::new();
    for (name, _) in networks(p) {
        let net = load_net(p, &name)?;
        for &s in &scripts {
            let images = bigram_images(&GlyphSet::new(s), &cfg.bigrams)?;
            let acts = net.capture_images(&images, &HIDDEN)?;
            for layer in HIDDEN {
                let m = rdm(&acts[&layer], net.layer_len(layer))?;
                let md = mean_dissimilarity(&m, &pairs)?;
                write_rdm_csv(&dir.join(format!("rdm-{name}-{}-{layer}.csv", s.name())), &m, &cfg.bigrams)?;
                summary.entry(name.clone()).or_default().entry(s).or_default().insert(
                    layer,
                    RsaEntry {
                        mean: md.mean.is_finite().then_some(md.mean),
                        n_pairs: md.n_pairs,
                        n_undefined: md.n_undefined,
                    },
                );
            }
        }
    }
    write_json(&dir.join("summary.json"), &summary)
}

// ---- encode ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct UnitFits {
    pub unit: UnitRef,
    pub fits: Vec<EncodingFit>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct EncodeSummary {
    pub network: String,
    pub n_units: usize,
    pub n_fitted: usize,
    pub mean_r: BTreeMap<Scheme, f64>,
    /// Units whose edge fit beats both others strictly, and so on.
    pub best: BTreeMap<String, usize>,
    pub tuning: TuningCurves,
    /// Mean width of the groups peaking at slots 1, 2, 7, 8 and at 4, 5.
    pub edge_width: Option<f64>,
    pub middle_width: Option<f64>,
}

fn best_scheme(fits: &[EncodingFit]) -> &'static str {
    let r = |s: Scheme| fits.iter().find(|f| f.scheme == s).map_or(f64::NEG_INFINITY, |f| f.r_cv);
    let (l, c, e) = (r(Scheme::Left), r(Scheme::Center), r(Scheme::Edge));
    if e > l && e > c {
        "edge"
    } else if c > l && c > e {
        "center"
    } else if l > c && l > e {
        "left"
    } else {
        "tie"
    }
}

fn mean_width(t: &TuningCurves, groups: &[usize]) -> Option<f64> {
    let w: Vec<f64> = groups.iter().filter_map(|&g| t.fwhm[g]).collect();
    (!w.is_empty()).then(|| w.iter().sum::<f64>() / w.len() as f64)
}

fn encode(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Encode);
    let (name, script) = primary(p);
    let net = load_net(p, &name)?;
    let sel: Selection = read_json(&selection_path(p, &name))?;
    let units = sel.of(Layer::H).to_vec();
    let words = cfg.lexicon();
    let glyphs = GlyphSet::new(script);
    let images: Vec<Tensor> = words.iter().map(|w| centered_word(&glyphs, w)).collect::<Result<_>>()?;
    let acts = net.capture_images(&images, &[Layer::H])?.remove(&Layer::H).unwrap();
    let n = net.layer_len(Layer::H);
    let ys: Vec<Vec<f64>> = units.iter().map(|u| column(&acts, n, u.channel)).collect();
    let fits = scheme_comparison(&words, &ys, &cfg.cv())?;
    let rows: Vec<(UnitRef, Vec<EncodingFit>)> = units.iter().copied().zip(fits.into_iter().map(Vec::from)).collect();
    write_encoding_csv(&dir.join("encoding.csv"), &rows)?;

    let fitted: Vec<&Vec<EncodingFit>> = rows.iter().map(|(_, f)| f).filter(|f| !f[0].degenerate).collect();
    let mut mean_r = BTreeMap::new();
    if !fitted.is_empty() {
        for s in Scheme::ALL {
            let sum: f64 = fitted.iter().map(|f| f.iter().find(|x| x.scheme == s).unwrap().r_cv).sum();
            mean_r.insert(s, sum / fitted.len() as f64);
        }
    }
    let mut best: BTreeMap<String, usize> = ["left", "center", "edge", "tie"].iter().map(|k| (k.to_string(), 0)).collect();
    for f in &fitted {
        *best.get_mut(best_scheme(f)).unwrap() += 1;
    }
    let edge: Vec<EncodingFit> =
        fitted.iter().map(|f| f.iter().find(|x| x.scheme == Scheme::Edge).unwrap().clone()).collect();
    let tuning = position_tuning_curves(&edge);
    write_bytes(
        &dir.join("tuning.svg"),
        render_curves(&tuning.curves.iter().map(|c| c.map(|c| c.to_vec())).collect::<Vec<_>>(), "edge-scheme position tuning").as_bytes(),
    )?;
    let mut ranked: Vec<&EncodingFit> = edge.iter().collect();
    ranked.sort_by(|a, b| b.r_cv.total_cmp(&a.r_cv));
    let letters: Vec<String> = (0..26).map(|i| GlyphSet::symbol_char(i).to_string()).collect();
    let slots: Vec<String> = (1..=8).map(|i| i.to_string()).collect();
    for (k, f) in ranked.iter().take(3).enumerate() {
        let svg = render_heatmap(&f.coef, 26, 8, &letters, &slots, &format!("edge coefficients, r_cv {:.3}", f.r_cv))?;
        write_bytes(&dir.join(format!("coef-top{}.svg", k + 1)), svg.as_bytes())?;
    }
    let summary = EncodeSummary {
        network: name,
        n_units: rows.len(),
        n_fitted: fitted.len(),
        mean_r,
        best,
        edge_width: mean_width(&tuning, &[0, 1, 6, 7]),
        middle_width: mean_width(&tuning, &[3, 4]),
        tuning,
    };
    let fits: Vec<UnitFits> = rows.into_iter().map(|(unit, fits)| UnitFits { unit, fits }).collect();
    write_json(&dir.join("fits.json"), &fits)?;
    write_json(&dir.join("summary.json"), &summary)
}

// ---- probe ----

pub(crate) fn profiles_path(p: &Pipeline) -> PathBuf {
    p.stage_dir(Stage::Probe).join("profiles.json")
}

fn matrix_svg(path: &Path, values: &[f64], rows: usize, cols: usize, title: &str) -> Result<()> {
    let rl: Vec<String> = (1..=rows).map(|i| format!("w{i}")).collect();
    let cl: Vec<String> = (1..=cols).map(|i| format!("o{i}")).collect();
    write_bytes(path, render_heatmap(values, rows, cols, &rl, &cl, title)?.as_bytes())
}

fn probe(p: &Pipeline) -> Result<()> {
    let dir = p.stage_dir(Stage::Probe);
    let (name, script) = primary(p);
    let net = load_net(p, &name)?;
    let sel: Selection = read_json(&selection_path(p, &name))?;
    let units: Vec<UnitRef> = HIDDEN.iter().flat_map(|&l| sel.of(l).iter().copied()).collect();
    let profiles = probe_units(&net, &GlyphSet::new(script), &units)?;
    write_units_csv(&dir.join("units.csv"), &profiles)?;
    if !profiles.is_empty() {
        let n = profiles.len();
        let m4: Vec<f32> = profiles.iter().flat_map(|q| q.m4.iter().map(|&v| v as f32)).collect();
        let m3: Vec<f32> = profiles.iter().flat_map(|q| q.m3.iter().map(|&v| v as f32)).collect();
        lxt::write(dir.join("m4.lxt"), &Tensor::new(vec![n, 5, 4], m4)?)?;
        lxt::write(dir.join("m3.lxt"), &Tensor::new(vec![n, 4, 3], m3)?)?;
    }
    // a few examples per layer and class
    let mut shown: BTreeMap<(Layer, UnitClass), usize> = BTreeMap::new();
    for q in &profiles {
        let k = shown.entry((q.unit.layer, q.class())).or_default();
        if *k >= 3 {
            continue;
        }
        *k += 1;
        let tag = q.unit.to_string().replace([':', '@', ','], "_");
        let pref = GlyphSet::symbol_char(q.preferred);
        let least = GlyphSet::symbol_char(q.least);
        let title = format!("{} {} ({pref} in {least})", q.unit, q.class());
        matrix_svg(&dir.join(format!("svg/{tag}-m4.svg")), &q.m4, 5, 4, &title)?;
        matrix_svg(&dir.join(format!("svg/{tag}-m3.svg")), &q.m3, 4, 3, &title)?;
    }
    write_json(&profiles_path(p), &profiles)
}

// ---- census ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct CensusSummary {
    pub network: String,
    pub rows: Vec<CensusRow>,
    /// Spearman rank correlation of class share against layer index over
    /// V2, V4, IT and H (layers without selective units left out).
    pub retinotopic_trend: Option<f64>,
    pub ordinal_trend: Option<f64>,
    pub early_candidates: usize,
    pub early_space: usize,
    pub late_candidates: usize,
    pub late_ordinal: usize,
}

/// Share of classified units coding position from the word edges: ordinal
/// units plus the space units that produce ordinal profiles.
pub(crate) fn ordinal_share(r: &CensusRow) -> Option<f64> {
    Some(r.fraction(UnitClass::Ordinal)? + r.fraction(UnitClass::Space)?)
}

fn trend(rows: &[CensusRow], share: impl Fn(&CensusRow) -> Option<f64>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.layer != Layer::V1)
        .filter_map(|r| share(r).map(|s| (r.layer.index() as f64, s)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    spearman(&x, &y)
}

fn census(p: &Pipeline) -> Result<()> {
    let dir = p.stage_dir(Stage::Census);
    let (name, _) = primary(p);
    let sel: Selection = read_json(&selection_path(p, &name))?;
    let profiles: Vec<UnitProfile> = read_json(&profiles_path(p))?;
    let rows: Vec<CensusRow> = HIDDEN
        .iter()
        .map(|&l| {
            let of_layer: Vec<UnitProfile> = profiles.iter().filter(|q| q.unit.layer == l).cloned().collect();
            CensusRow::from_profiles(l, sel.n_units[&l], &of_layer)
        })
        .collect();
    write_census_csv(&dir.join("census.csv"), &rows)?;
    let early = |r: &&CensusRow| matches!(r.layer, Layer::V2 | Layer::V4);
    let late = |r: &&CensusRow| matches!(r.layer, Layer::IT | Layer::H);
    let summary = CensusSummary {
        network: name,
        retinotopic_trend: trend(&rows, |r| r.fraction(UnitClass::Retinotopic)),
        ordinal_trend: trend(&rows, ordinal_share),
        early_candidates: rows.iter().filter(early).map(|r| r.ordinal_candidates).sum(),
        early_space: rows.iter().filter(early).map(|r| r.candidates_space).sum(),
        late_candidates: rows.iter().filter(late).map(|r| r.ordinal_candidates).sum(),
        late_ordinal: rows.iter().filter(late).map(|r| r.candidates_ordinal).sum(),
        rows,
    };
    write_json(&dir.join("summary.json"), &summary)
}

// ---- circuit ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct ItDissection {
    pub unit: UnitRef,
    pub class: UnitClass,
    pub ranking: DriveRanking,
    /// Classes of the V4 units behind each top channel.
    pub top_classes: Vec<Vec<UnitClass>>,
    /// Largest change of the unit after zeroing V4 outside its window.
    pub window_max_diff: f64,
    pub space_and_retinotopic: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct CircuitSummary {
    pub network: String,
    pub it_units: usize,
    pub ordinal_it_units: usize,
    pub window_max_diff: f64,
    pub replicating_units: Vec<UnitRef>,
    pub v2_units: usize,
    pub degenerate_filters: usize,
}

fn window_diff(net: &Network, unit: UnitRef, images: &[Tensor]) -> Result<f64> {
    let v4 = net.capture_images(images, &[Layer::V4])?.remove(&Layer::V4).unwrap();
    let shape = net.layer_shape(Layer::V4);
    let (rows, cols) = upstream_window(net, unit.layer, unit.cell.unwrap())?;
    let mut masked = v4.clone();
    let len = net.layer_len(Layer::V4);
    for img in masked.chunks_exact_mut(len) {
        for c in 0..shape[0] {
            for r in 0..shape[1] {
                for q in 0..shape[2] {
                    if !(rows.contains(&r) && cols.contains(&q)) {
                        img[(c * shape[1] + r) * shape[2] + q] = 0.0;
                    }
                }
            }
        }
    }
    let full = net.forward_from(Layer::V4, &v4, Layer::IT)?;
    let cut = net.forward_from(Layer::V4, &masked, Layer::IT)?;
    let it_len = net.layer_len(Layer::IT);
    let flat = unit.flat(net)?;
    Ok(full
        .chunks_exact(it_len)
        .zip(cut.chunks_exact(it_len))
        .map(|(a, b)| (a[flat] - b[flat]).abs() as f64)
        .fold(0.0, f64::max))
}

fn letter_map_svg(path: &Path, m: &LetterMap) -> Result<()> {
    let letters: Vec<String> = (0..26).map(|i| GlyphSet::symbol_char(i).to_string()).collect();
    let slots: Vec<String> = (1..=8).map(|i| i.to_string()).collect();
    write_bytes(path, render_heatmap(&m.values, 26, 8, &letters, &slots, &format!("{} letter map", m.unit))?.as_bytes())
}

fn circuit(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Circuit);
    let (name, script) = primary(p);
    let net = load_net(p, &name)?;
    let glyphs = GlyphSet::new(script);
    let sel: Selection = read_json(&selection_path(p, &name))?;
    let profiles: Vec<UnitProfile> = read_json(&profiles_path(p))?;
    let class_of: BTreeMap<UnitRef, UnitClass> = profiles.iter().map(|q| (q.unit, q.class())).collect();
    let v4_sel = sel.of(Layer::V4);

    let mut dissections = Vec::new();
    for q in profiles.iter().filter(|q| q.unit.layer == Layer::IT) {
        let images = factorial_probe(&glyphs, q.preferred, q.least)?.images;
        let ranking = upstream_drive(&net, q.unit, &images, Eligible::Units(v4_sel), cfg.top_k_v4)?;
        let top_classes: Vec<Vec<UnitClass>> = ranking
            .top
            .iter()
            .map(|e| e.units.iter().filter_map(|u| class_of.get(u).copied()).collect())
            .collect();
        let has = |c: UnitClass| top_classes.iter().any(|cs| cs.contains(&c));
        dissections.push(ItDissection {
            unit: q.unit,
            class: q.class(),
            window_max_diff: window_diff(&net, q.unit, &images)?,
            space_and_retinotopic: q.class() == UnitClass::Ordinal && has(UnitClass::Space) && has(UnitClass::Retinotopic),
            top_classes,
            ranking,
        });
    }
    write_drive_csv(&dir.join("drive.csv"), &dissections.iter().map(|d| d.ranking.clone()).collect::<Vec<_>>())?;

    // letter maps of the ordinal IT units and the V4 units behind them
    let mut mapped: Vec<UnitRef> = Vec::new();
    for d in dissections.iter().filter(|d| d.class == UnitClass::Ordinal).take(3) {
        mapped.push(d.unit);
        mapped.extend(d.ranking.top.iter().flat_map(|e| e.units.iter().copied()));
    }
    let maps = single_letter_profiles(&net, &glyphs, &mapped)?;
    for m in &maps {
        letter_map_svg(&dir.join(format!("maps/{}.svg", m.unit.to_string().replace([':', '@', ','], "_"))), m)?;
    }

    let filters = v1_filter_images(&net);
    for f in &filters {
        pgm(&dir.join(format!("filters/v1-{:02}.pgm", f.channel)), &f.pixels, f.size, f.size, 8)?;
    }
    let v2: Vec<V1Dissection> = profiles
        .iter()
        .filter(|q| q.unit.layer == Layer::V2 && q.classification.ordinal_candidate)
        .map(|q| {
            let images = factorial_probe(&glyphs, q.preferred, q.least)?.images;
            v1_to_v2_dissection(&net, q.unit, &images, Eligible::All, cfg.top_k_v1)
        })
        .collect::<Result<_>>()?;

    let summary = CircuitSummary {
        network: name,
        it_units: dissections.len(),
        ordinal_it_units: dissections.iter().filter(|d| d.class == UnitClass::Ordinal).count(),
        window_max_diff: dissections.iter().map(|d| d.window_max_diff).fold(0.0, f64::max),
        replicating_units: dissections.iter().filter(|d| d.space_and_retinotopic).map(|d| d.unit).collect(),
        v2_units: v2.len(),
        degenerate_filters: filters.iter().filter(|f| f.degenerate).count(),
    };
    write_json(&dir.join("it.json"), &dissections)?;
    write_json(&dir.join("v2.json"), &v2)?;
    write_json(&dir.join("letter_maps.json"), &maps)?;
    write_json(&dir.join("summary.json"), &summary)
}

// ---- vismax ----

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct VismaxRun {
    pub unit: UnitRef,
    pub word: Option<String>,
    pub initial: f32,
    pub last: f32,
    pub steps: usize,
    pub attempts: usize,
    pub stalled: bool,
    pub monotone: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub(crate) struct VismaxSummary {
    pub network: String,
    pub runs: Vec<VismaxRun>,
    pub failures: Vec<String>,
}

fn vismax(p: &Pipeline) -> Result<()> {
    let cfg = &p.config;
    let dir = p.stage_dir(Stage::Vismax);
    let (name, script) = primary(p);
    let net = load_net(p, &name)?;
    let sel: Selection = read_json(&selection_path(p, &name))?;
    let glyphs = GlyphSet::new(script);
    let words: Vec<Tensor> = cfg.vismax_words.iter().map(|w| centered_word(&glyphs, w)).collect::<Result<_>>()?;
    let mc = MaximizeConfig {
        iters: cfg.vismax_iters,
        step: cfg.vismax_step,
        seed: cfg.seed,
        ..MaximizeConfig::default()
    };

    let mut targets: Vec<(UnitRef, Option<String>)> = Vec::new();
    let acts = net.capture_images(&words, &HIDDEN)?;
    for layer in HIDDEN {
        let channels: BTreeSet<usize> = sel.of(layer).iter().map(|u| u.channel).collect();
        if channels.is_empty() {
            continue;
        }
        let len = net.layer_len(layer);
        for (wi, word) in cfg.vismax_words.iter().enumerate() {
            let best = channels
                .iter()
                .map(|&c| center_unit(&net, layer, c))
                .max_by(|a, b| {
                    let va = acts[&layer][wi * len + a.flat(&net).unwrap()];
                    let vb = acts[&layer][wi * len + b.flat(&net).unwrap()];
                    va.total_cmp(&vb).then(b.channel.cmp(&a.channel))
                })
                .unwrap();
            targets.push((best, Some(word.clone())));
        }
    }
    targets.extend(sel.of(Layer::H).iter().take(cfg.vismax_h_units).map(|&u| (u, None)));

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (unit, word) in targets {
        let tag = format!("{}-{}", unit.to_string().replace([':', '@', ','], "_"), word.as_deref().unwrap_or("unit"));
        match activation_maximize(&net, unit, &mc) {
            Ok((image, m)) => {
                let px: Vec<f64> = image.data().iter().map(|&v| v as f64).collect();
                pgm(&dir.join(format!("{tag}.pgm")), &px, 128, 32, 2)?;
                p.log(format!("[vismax] {tag}: {:.4} -> {:.4}", m.initial(), m.last()));
                runs.push(VismaxRun {
                    unit,
                    word,
                    initial: m.initial(),
                    last: m.last(),
                    steps: m.trace.len() - 1,
                    attempts: m.attempts,
                    stalled: m.stalled,
                    monotone: m.trace.windows(2).all(|t| t[1] >= t[0]),
                });
            }
            Err(Error::Failed(msg)) => failures.push(format!("{tag}: {msg}")),
            Err(e) => return Err(e),
        }
    }
    write_json(&dir.join("summary.json"), &VismaxSummary { network: name, runs, failures })
}
