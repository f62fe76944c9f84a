use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cornet::{NetworkConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::probelab::CvConfig;
use crate::stimgen::words::{default_bigrams, WORDS};
use crate::stimgen::Script;
use crate::tensor::SgdConfig;

/// Every knob of a run, read from one flat TOML file. Missing keys take
/// the defaults, which reproduce the reference run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,

    pub words_train_per_word: usize,
    pub words_test_per_word: usize,
    pub objects_train_per_class: usize,
    pub objects_test_per_class: usize,
    /// Literate networks to train; the first one is analysed in depth.
    pub scripts: Vec<Script>,

    pub channels: [usize; 4],
    pub illiterate_epochs: usize,
    pub literate_epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    pub lr_step: usize,
    pub lr_gamma: f32,
    pub momentum: f32,
    pub weight_decay: f32,
    pub probe_images: usize,

    pub selection_words: usize,
    pub nonword_per_group: usize,
    pub k_sd: f64,
    pub bigrams: Vec<String>,
    pub folds: usize,
    pub n_lambdas: usize,
    pub lambda_ratio: f64,
    pub class_threshold: f64,
    pub top_k_v4: usize,
    pub top_k_v1: usize,

    pub vismax_iters: usize,
    pub vismax_step: f32,
    pub vismax_words: Vec<String>,
    pub vismax_h_units: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let net = NetworkConfig::default();
        RunConfig {
            seed: 1,
            out_dir: PathBuf::from("run"),
            words_train_per_word: 60,
            words_test_per_word: 10,
            objects_train_per_class: 300,
            objects_test_per_class: 50,
            scripts: vec![Script::A, Script::B],
            channels: net.channels,
            illiterate_epochs: train.epochs,
            literate_epochs: train.epochs,
            batch_size: train.batch_size,
            lr: train.sgd.init_lr,
            lr_step: train.sgd.step,
            lr_gamma: train.sgd.gamma,
            momentum: train.sgd.momentum,
            weight_decay: train.sgd.weight_decay,
            probe_images: train.probe_images,
            selection_words: 400,
            nonword_per_group: 100,
            k_sd: 3.0,
            bigrams: default_bigrams(),
            folds: 5,
            n_lambdas: 16,
            lambda_ratio: 1e-4,
            class_threshold: 0.5,
            top_k_v4: 2,
            top_k_v1: 5,
            vismax_iters: 1000,
            vismax_step: 0.05,
            vismax_words: vec!["WORD".into(), "GARDEN".into(), "ALPHABET".into()],
            vismax_h_units: 5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Format { kind: "config", detail: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<()> {
        self.network().validate()?;
        let bad = |m: &str| Err(Error::InvalidArgument(format!("config: {m}")));
        if self.scripts.is_empty() {
            return bad("at least one script is required");
        }
        if self.words_train_per_word == 0 || self.words_test_per_word == 0 {
            return bad("per-word counts must be positive");
        }
        if self.objects_train_per_class == 0 || self.objects_test_per_class == 0 {
            return bad("per-class counts must be positive");
        }
        if self.batch_size == 0 || self.lr_step == 0 {
            return bad("batch_size and lr_step must be positive");
        }
        if self.bigrams.len() < 2 || self.bigrams.iter().any(|b| b.chars().count() != 2) {
            return bad("bigrams must list at least two 2-letter strings");
        }
        if self.nonword_per_group < 5 || self.selection_words == 0 {
            return bad("selection needs words and at least 5 images per nonword group");
        }
        if self.folds < 2 || self.n_lambdas == 0 || !(self.lambda_ratio > 0.0 && self.lambda_ratio <= 1.0) {
            return bad("folds >= 2, n_lambdas >= 1 and 0 < lambda_ratio <= 1 are required");
        }
        Ok(())
    }

    /// The config with `out_dir` cleared. Where a run is written does not
    /// change what it contains.
    pub fn without_location(&self) -> RunConfig {
        RunConfig {
            out_dir: PathBuf::new(),
            ..self.clone()
        }
    }

    /// SHA-256 over the canonical JSON form, ignoring `out_dir`.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&self.without_location()).expect("config is plain data");
        hex::encode(Sha256::digest(json))
    }

    pub fn network(&self) -> NetworkConfig {
        NetworkConfig {
            channels: self.channels,
            ..NetworkConfig::default()
        }
    }

    pub fn train_config(&self, epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: self.batch_size,
            sgd: SgdConfig {
                init_lr: self.lr,
                step: self.lr_step,
                gamma: self.lr_gamma,
                momentum: self.momentum,
                weight_decay: self.weight_decay,
            },
            probe_images: self.probe_images,
        }
    }

    pub fn cv(&self) -> CvConfig {
        CvConfig {
            folds: self.folds,
            n_lambdas: self.n_lambdas,
            lambda_ratio: self.lambda_ratio,
        }
    }

    pub fn lexicon(&self) -> Vec<String> {
        WORDS.iter().map(|w| w.to_string()).collect()
    }

    pub fn primary_script(&self) -> Script {
        self.scripts[0]
    }

    /// A configuration small enough to run end to end in a minute or two.
    pub fn smoke() -> Self {
        RunConfig {
            words_train_per_word: 2,
            words_test_per_word: 1,
            objects_train_per_class: 10,
            objects_test_per_class: 4,
            channels: [8, 8, 16, 32],
            illiterate_epochs: 1,
            literate_epochs: 1,
            probe_images: 64,
            selection_words: 40,
            nonword_per_group: 10,
            vismax_iters: 10,
            vismax_h_units: 2,
            ..RunConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig = toml::from_str("seed = 9\nscripts = [\"B\"]\n").unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.scripts, vec![Script::B]);
        assert_eq!(partial.channels, cfg.channels);
        assert!(toml::from_str::<RunConfig>("sede = 1\n").is_err());
        assert_ne!(partial.hash(), cfg.hash());
        let moved = RunConfig {
            out_dir: "elsewhere/run".into(),
            ..cfg.clone()
        };
        assert_eq!(moved.hash(), cfg.hash());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.scripts.clear();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::smoke().validate().is_ok());
    }
}
