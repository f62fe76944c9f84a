use std::process::Command;

use wordlab::pipeline::{list_files, Outcome, Pipeline, Report, RunConfig, Stage, Verdict};
use wordlab::Error;

fn smoke(dir: &std::path::Path) -> RunConfig {
    RunConfig {
        out_dir: dir.to_path_buf(),
        ..RunConfig::smoke()
    }
}

fn text_values(text: &str) -> Vec<f64> {
    text.lines()
        .filter_map(|l| {
            let (_, rest) = l.rsplit_once(": ")?;
            rest.split_whitespace().next()?.parse().ok()
        })
        .collect()
}

#[test]
fn stages_are_idempotent_and_guard_their_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let p = Pipeline::new(smoke(&out)).unwrap();
    p.run_all().unwrap();
    let before: Vec<(String, Vec<u8>)> =
        list_files(&out).unwrap().into_iter().map(|f| (f.clone(), std::fs::read(out.join(&f)).unwrap())).collect();
    for s in Stage::ALL {
        let o = p.run_stage(s).unwrap();
        if s != Stage::Report {
            assert_eq!(o, Outcome::UpToDate, "{s}");
        }
    }
    for (f, bytes) in &before {
        if !f.ends_with("timing.json") {
            assert_eq!(&std::fs::read(out.join(f)).unwrap(), bytes, "{f}");
        }
    }

    // manifests chain: each names the hashes of its inputs' manifests
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("probe/manifest.json")).unwrap()).unwrap();
    let inputs = m["inputs"].as_object().unwrap();
    assert_eq!(inputs.len(), 2);
    assert_eq!(
        inputs["select"].as_str().unwrap(),
        wordlab::pipeline::sha256_file(&out.join("select/manifest.json")).unwrap()
    );
    assert_eq!(m["config"]["seed"], 1);

    let changed = Pipeline::new(RunConfig { seed: 5, ..smoke(&out) }).unwrap();
    match changed.run_stage(Stage::Gen) {
        Err(Error::ConfigMismatch { stage, .. }) => assert_eq!(stage, "gen"),
        other => panic!("expected a config mismatch, got {other:?}"),
    }
    let mut forced = changed;
    forced.force = true;
    assert_eq!(forced.run_stage(Stage::Gen).unwrap(), Outcome::Ran);

    let report: Report = p.report().unwrap();
    assert_eq!(report.criteria.len(), 12);
    let text = std::fs::read_to_string(out.join("report/report.txt")).unwrap();
    let json: Vec<f64> = report.criteria.iter().flat_map(|c| &c.checks).filter_map(|k| k.measured).collect();
    let shown = text_values(&text);
    assert_eq!(json, shown);
}

#[test]
fn partial_inputs_give_unknown_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let p = Pipeline::new(smoke(tmp.path())).unwrap();
    p.run_stage(Stage::Report).unwrap();
    let r = p.report().unwrap();
    assert!(r.criteria.iter().all(|c| c.verdict == Verdict::Unknown));
    assert_eq!(r.overall, Verdict::Unknown);
    let again = std::fs::read(tmp.path().join("report/report.json")).unwrap();
    p.run_stage(Stage::Report).unwrap();
    assert_eq!(std::fs::read(tmp.path().join("report/report.json")).unwrap(), again);
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_wordlab");
    let st = Command::new(bin).args(["probe", "-q", "--out"]).arg(tmp.path()).status().unwrap();
    assert_eq!(st.code(), Some(2));
    let out = Command::new(bin).args(["config", "--seed", "7"]).output().unwrap();
    assert!(out.status.success());
    let cfg: RunConfig = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.seed, 7);
    let st = Command::new(bin).arg("bogus").status().unwrap();
    assert_eq!(st.code(), Some(1));
}
