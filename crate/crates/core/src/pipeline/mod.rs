//! The experiment as a chain of stages, each writing its outputs and a
//! manifest under one run directory.

pub mod config;
pub mod figures;
pub mod report;
mod stages;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use config::RunConfig;
pub use figures::{render_curves, render_heatmap};
pub use report::{Criterion, Report, Verdict};

pub const MANIFEST: &str = "manifest.json";
/// Wall-clock measurements; kept out of the manifest so reruns stay
/// byte-identical.
pub const TIMING: &str = "timing.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Gen,
    TrainIlliterate,
    TrainLiterate,
    Select,
    Rsa,
    Encode,
    Probe,
    Census,
    Circuit,
    Vismax,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Stage::Gen,
        Stage::TrainIlliterate,
        Stage::TrainLiterate,
        Stage::Select,
        Stage::Rsa,
        Stage::Encode,
        Stage::Probe,
        Stage::Census,
        Stage::Circuit,
        Stage::Vismax,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::TrainIlliterate => "train-illiterate",
            Stage::TrainLiterate => "train-literate",
            Stage::Select => "select",
            Stage::Rsa => "rsa",
            Stage::Encode => "encode",
            Stage::Probe => "probe",
            Stage::Census => "census",
            Stage::Circuit => "circuit",
            Stage::Vismax => "vismax",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this one reads. The report reads whatever
    /// exists and marks the rest unknown.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Gen | Stage::Report => &[],
            Stage::TrainIlliterate => &[Stage::Gen],
            Stage::TrainLiterate => &[Stage::Gen, Stage::TrainIlliterate],
            Stage::Select | Stage::Rsa => &[Stage::TrainIlliterate, Stage::TrainLiterate],
            Stage::Encode | Stage::Probe | Stage::Vismax => &[Stage::TrainLiterate, Stage::Select],
            Stage::Census => &[Stage::Select, Stage::Probe],
            Stage::Circuit => &[Stage::TrainLiterate, Stage::Select, Stage::Probe],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub config_hash: String,
    pub config: RunConfig,
    /// Hash of each required stage's manifest.
    pub inputs: BTreeMap<String, String>,
    /// Hash of every file the stage wrote, by path relative to its directory.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    UpToDate,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Files under `dir`, relative, sorted, `/`-separated.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(dir, e))?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).unwrap();
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub struct Pipeline {
    pub config: RunConfig,
    pub force: bool,
    /// Print progress lines to stderr.
    pub verbose: bool,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            force: false,
            verbose: false,
        })
    }

    pub fn out(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out().join(stage.name())
    }

    pub(crate) fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn check_dependencies(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let mut inputs = BTreeMap::new();
        for &dep in stage.requires() {
            let path = self.stage_dir(dep).join(MANIFEST);
            if !path.exists() {
                return Err(Error::MissingDependency {
                    stage: stage.name().into(),
                    requires: dep.name().into(),
                    path,
                });
            }
            inputs.insert(dep.name().to_string(), sha256_file(&path)?);
        }
        Ok(inputs)
    }

    fn up_to_date(&self, stage: Stage, inputs: &BTreeMap<String, String>) -> Result<bool> {
        let dir = self.stage_dir(stage);
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(false);
        }
        let m: StageManifest = read_json(&path)?;
        let hash = self.config.hash();
        if m.config_hash != hash {
            if self.force {
                return Ok(false);
            }
            return Err(Error::ConfigMismatch {
                stage: stage.name().into(),
                path,
                found: m.config_hash,
                expected: hash,
            });
        }
        // the report reads whatever exists, so it is always rebuilt
        if self.force || stage == Stage::Report || &m.inputs != inputs {
            return Ok(false);
        }
        for (rel, h) in &m.outputs {
            let p = dir.join(rel);
            if !p.exists() || &sha256_file(&p)? != h {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Run one stage unless its manifest shows it already ran with this
    /// config and these inputs.
    pub fn run_stage(&self, stage: Stage) -> Result<Outcome> {
        let inputs = self.check_dependencies(stage)?;
        if self.up_to_date(stage, &inputs)? {
            self.log(format!("[{stage}] up to date"));
            return Ok(Outcome::UpToDate);
        }
        let dir = self.stage_dir(stage);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        self.log(format!("[{stage}] running"));
        stages::run(self, stage)?;
        let mut outputs = BTreeMap::new();
        for rel in list_files(&dir)? {
            if rel != MANIFEST && rel != TIMING {
                outputs.insert(rel.clone(), sha256_file(&dir.join(&rel))?);
            }
        }
        let manifest = StageManifest {
            stage: stage.name().into(),
            config_hash: self.config.hash(),
            config: self.config.without_location(),
            inputs,
            outputs,
        };
        write_json(&dir.join(MANIFEST), &manifest)?;
        Ok(Outcome::Ran)
    }

    /// Every stage in order.
    pub fn run_all(&self) -> Result<()> {
        for stage in Stage::ALL {
            self.run_stage(stage)?;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<Report> {
        read_json(&self.stage_dir(Stage::Report).join("report.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.name().parse::<Stage>().unwrap(), s);
            for d in s.requires() {
                assert!(*d < s);
            }
        }
        assert!("bogus".parse::<Stage>().is_err());
    }

    #[test]
    fn missing_dependency_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            out_dir: dir.path().to_path_buf(),
            ..RunConfig::smoke()
        };
        let p = Pipeline::new(cfg).unwrap();
        match p.run_stage(Stage::Encode) {
            Err(Error::MissingDependency { requires, .. }) => assert_eq!(requires, "train-literate"),
            other => panic!("expected a dependency error, got {other:?}"),
        }
    }
}
