use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Network, NetworkConfig, TrainConfig, TrainReport};
use crate::error::{Error, Result};
use crate::tensor::lxt;

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Illiterate,
    Literate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub phase: Phase,
    pub train: TrainConfig,
    pub report: TrainReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub phase: Phase,
    pub config: NetworkConfig,
    pub seed: u64,
    pub init: String,
    pub extended: bool,
    pub n_outputs: usize,
    /// Script the words were drawn from, for literate networks.
    pub script: Option<String>,
    pub history: Vec<PhaseRecord>,
    pub params: Vec<ParamEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub manifest: Manifest,
}

impl Checkpoint {
    pub fn new(network: Network, phase: Phase, seed: u64, script: Option<String>, history: Vec<PhaseRecord>) -> Self {
        let manifest = Manifest {
            format_version: CHECKPOINT_FORMAT,
            phase,
            config: network.config().clone(),
            seed,
            init: "glorot-uniform weights, zero biases".into(),
            extended: network.is_extended(),
            n_outputs: network.n_outputs(),
            script,
            history,
            params: Vec::new(),
        };
        Checkpoint { network, manifest }
    }
}

/// Write `manifest.json` and one LXT1 file per parameter into `dir`.
pub fn save_checkpoint(ckpt: &Checkpoint, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = ckpt.manifest.clone();
    manifest.params.clear();
    for (name, t) in Network::PARAM_NAMES.iter().zip(ckpt.network.params()) {
        let bytes = lxt::encode(t);
        manifest.params.push(ParamEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    let p = dir.join("manifest.json");
    fs::write(&p, serde_json::to_vec_pretty(&manifest)?).map_err(|e| Error::io(&p, e))
}

pub fn load_checkpoint(dir: impl AsRef<Path>) -> Result<Checkpoint> {
    let dir = dir.as_ref();
    let p = dir.join("manifest.json");
    let manifest: Manifest = serde_json::from_slice(&fs::read(&p).map_err(|e| Error::io(&p, e))?)?;
    if manifest.format_version != CHECKPOINT_FORMAT {
        return Err(Error::Format {
            kind: "checkpoint",
            detail: format!("unsupported format version {}", manifest.format_version),
        });
    }
    let mut params = Vec::with_capacity(Network::PARAM_NAMES.len());
    for name in Network::PARAM_NAMES {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if let Some(entry) = manifest.params.iter().find(|e| e.name == name) {
            if entry.sha256 != hex::encode(Sha256::digest(&bytes)) {
                return Err(Error::Format {
                    kind: "checkpoint",
                    detail: format!("{name} does not match its manifest hash"),
                });
            }
        }
        params.push(lxt::decode(&bytes)?);
    }
    let network = Network::from_parts(manifest.config.clone(), params, manifest.extended)?;
    Ok(Checkpoint { network, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cornet::Layer;
    use crate::tensor::Tensor;

    #[test]
    fn roundtrip_is_bit_identical() {
        let mut net = Network::init(NetworkConfig::default(), 11).unwrap();
        net.extend_output(200, 11).unwrap();
        let ckpt = Checkpoint::new(net, Phase::Literate, 11, Some("A".into()), Vec::new());
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&ckpt, dir.path()).unwrap();
        assert!(dir.path().join("V1.conv.weight").exists());
        let back = load_checkpoint(dir.path()).unwrap();
        assert_eq!(back.network, ckpt.network);
        let img = Tensor::from_fn(&[1, 32, 128], |i| ((i * 31) % 17) as f32 / 17.0);
        let a = ckpt.network.capture_images(std::slice::from_ref(&img), &[Layer::Output]).unwrap();
        let b = back.network.capture_images(&[img], &[Layer::Output]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tampered_parameter_rejected() {
        let net = Network::init(NetworkConfig::default(), 1).unwrap();
        let ckpt = Checkpoint::new(net, Phase::Illiterate, 1, None, Vec::new());
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&ckpt, dir.path()).unwrap();
        let p = dir.path().join("V2.conv.bias");
        let mut bytes = fs::read(&p).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        fs::write(&p, bytes).unwrap();
        assert!(load_checkpoint(dir.path()).is_err());
    }
}
