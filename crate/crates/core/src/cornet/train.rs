use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Layer, Network, INPUT_LEN};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stimgen::LabeledDataset;
use crate::tensor::ops::softmax_xent_slice;
use crate::tensor::{SgdConfig, SgdState, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    /// Images per stream used to track loss before and after each epoch.
    pub probe_images: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 15,
            batch_size: 32,
            sgd: SgdConfig::default(),
            probe_images: 512,
        }
    }
}

/// A training source whose labels are shifted by `label_offset` into the
/// network's output space.
#[derive(Clone, Copy, Debug)]
pub struct Stream<'a> {
    pub data: &'a LabeledDataset,
    pub label_offset: u32,
}

#[derive(Clone, Debug)]
pub struct EvalSet<'a> {
    pub name: String,
    pub data: &'a LabeledDataset,
    pub label_offset: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f32,
    pub train_loss: f64,
    pub train_acc: f64,
    pub probe_loss: f64,
    pub eval_acc: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub initial_probe_loss: f64,
    pub initial_eval_acc: BTreeMap<String, f64>,
    pub epochs: Vec<EpochRecord>,
}

fn check_labels(net: &Network, data: &LabeledDataset, offset: u32) -> Result<()> {
    let k = net.n_outputs() as u32;
    if let Some(&bad) = data.labels.iter().find(|&&l| l + offset >= k) {
        return Err(Error::InvalidArgument(format!(
            "label {} (offset {offset}) does not fit {k} outputs",
            bad + offset
        )));
    }
    Ok(())
}

fn gather(streams: &[Stream], items: &[(usize, usize)], pixels: &mut Vec<f32>, labels: &mut Vec<usize>) {
    pixels.clear();
    labels.clear();
    for &(s, i) in items {
        pixels.extend_from_slice(streams[s].data.image(i));
        labels.push((streams[s].data.labels[i] + streams[s].label_offset) as usize);
    }
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn mean_loss(net: &Network, streams: &[Stream], items: &[(usize, usize)]) -> Result<f64> {
    let (mut px, mut lb) = (Vec::new(), Vec::new());
    let mut total = 0.0f64;
    let k = net.n_outputs();
    for chunk in items.chunks(64) {
        gather(streams, chunk, &mut px, &mut lb);
        let logits = net.logits(&px)?;
        for (row, &l) in logits.chunks_exact(k).zip(&lb) {
            total += softmax_xent_slice(row, l).0 as f64;
        }
    }
    Ok(total / items.len() as f64)
}

/// Fraction of images whose highest logit (lowest index on ties) is the
/// label shifted by `label_offset`.
pub fn top1_accuracy(net: &Network, data: &LabeledDataset, label_offset: u32) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    check_labels(net, data, label_offset)?;
    let k = net.n_outputs();
    let mut correct = 0usize;
    const CHUNK: usize = 64;
    for start in (0..data.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(data.len());
        let logits = net.logits(&data.pixels[start * INPUT_LEN..end * INPUT_LEN])?;
        for (row, &l) in logits.chunks_exact(k).zip(&data.labels[start..end]) {
            if argmax(row) == (l + label_offset) as usize {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

fn eval_all(net: &Network, evals: &[EvalSet]) -> Result<BTreeMap<String, f64>> {
    evals
        .iter()
        .map(|e| Ok((e.name.clone(), top1_accuracy(net, e.data, e.label_offset)?)))
        .collect()
}

/// Per-epoch batch schedule: every image of every stream once, shuffled
/// jointly so batches mix the streams.
fn epoch_batches(streams: &[Stream], batch: usize, rng: &mut impl Rng) -> Vec<Vec<(usize, usize)>> {
    let mut all: Vec<(usize, usize)> = streams
        .iter()
        .enumerate()
        .flat_map(|(s, st)| (0..st.data.len()).map(move |i| (s, i)))
        .collect();
    all.shuffle(rng);
    all.chunks(batch).map(<[_]>::to_vec).collect()
}

/// Minibatch SGD on the cross-entropy loss over the joint stream.
/// Deterministic for a given network, data, config and seed.
pub fn train(
    net: &mut Network,
    streams: &[Stream],
    evals: &[EvalSet],
    cfg: &TrainConfig,
    seed: u64,
    tag: &str,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<TrainReport> {
    if streams.is_empty() || streams.iter().any(|s| s.data.is_empty()) {
        return Err(Error::InvalidArgument("training needs non-empty streams".into()));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    for s in streams {
        check_labels(net, s.data, s.label_offset)?;
    }
    for e in evals {
        check_labels(net, e.data, e.label_offset)?;
    }
    let mut rng = substream(seed, &format!("train-{tag}"));
    let mut probe = Vec::new();
    for (s, stream) in streams.iter().enumerate() {
        let mut idx: Vec<usize> = (0..stream.data.len()).collect();
        idx.shuffle(&mut rng);
        probe.extend(idx.into_iter().take(cfg.probe_images.max(1)).map(|i| (s, i)));
    }
    let initial_probe_loss = mean_loss(net, streams, &probe)?;
    let initial_eval_acc = eval_all(net, evals)?;

    let mut opt = SgdState::new(cfg.sgd.clone(), &net.params().iter().collect::<Vec<_>>());
    let k = net.n_outputs();
    let (mut px, mut lb) = (Vec::new(), Vec::new());
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let batches = epoch_batches(streams, cfg.batch_size, &mut rng);
        let (mut loss_sum, mut correct, mut seen) = (0.0f64, 0usize, 0usize);
        for items in &batches {
            gather(streams, items, &mut px, &mut lb);
            let trace = net.forward_trace(&px)?;
            let n = lb.len();
            let mut dlogits = vec![0.0f32; n * k];
            for ((row, drow), &l) in trace.logits.chunks_exact(k).zip(dlogits.chunks_exact_mut(k)).zip(&lb) {
                let (loss, probs) = softmax_xent_slice(row, l);
                loss_sum += loss as f64;
                if argmax(row) == l {
                    correct += 1;
                }
                for (d, p) in drow.iter_mut().zip(probs) {
                    *d = p / n as f32;
                }
                drow[l] -= 1.0 / n as f32;
            }
            seen += n;
            let grads = net.backward(&trace, Layer::Output, &dlogits, false);
            let grads: Vec<Tensor> = grads
                .params
                .into_iter()
                .zip(net.params())
                .map(|(g, p)| Tensor::new(p.shape().to_vec(), g))
                .collect::<Result<_>>()?;
            let mut params: Vec<&mut Tensor> = net.params_mut().iter_mut().collect();
            opt.step(&mut params, &grads.iter().collect::<Vec<_>>(), epoch)?;
        }
        let rec = EpochRecord {
            epoch,
            lr: cfg.sgd.lr_at(epoch),
            train_loss: loss_sum / seen as f64,
            train_acc: correct as f64 / seen as f64,
            probe_loss: mean_loss(net, streams, &probe)?,
            eval_acc: eval_all(net, evals)?,
        };
        if !rec.train_loss.is_finite() {
            return Err(Error::Failed(format!("training diverged at epoch {epoch}")));
        }
        progress(&rec);
        epochs.push(rec);
    }
    Ok(TrainReport {
        initial_probe_loss,
        initial_eval_acc,
        epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cornet::NetworkConfig;
    use crate::stimgen::objects::build_object_dataset;
    use crate::stimgen::Split;

    fn small() -> NetworkConfig {
        NetworkConfig {
            channels: [8, 8, 8, 16],
            n_classes: 4,
        }
    }

    #[test]
    fn loss_drops_and_runs_are_reproducible() {
        let data = build_object_dataset(4, 16, 1, Split::Train).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 8,
            probe_images: 64,
            ..TrainConfig::default()
        };
        let run = || {
            let mut net = Network::init(small(), 3).unwrap();
            let rep = train(&mut net, &[Stream { data: &data, label_offset: 0 }], &[], &cfg, 3, "t", |_| {}).unwrap();
            (net, rep)
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra.epochs[0].probe_loss < ra.initial_probe_loss);
    }

    #[test]
    fn rejects_labels_outside_output() {
        let data = build_object_dataset(6, 2, 1, Split::Train).unwrap();
        let mut net = Network::init(small(), 0).unwrap();
        let r = train(&mut net, &[Stream { data: &data, label_offset: 0 }], &[], &TrainConfig::default(), 0, "t", |_| {});
        assert!(r.is_err());
    }

    #[test]
    fn joint_epoch_covers_every_image_once() {
        let a = build_object_dataset(2, 20, 1, Split::Train).unwrap();
        let b = build_object_dataset(2, 3, 2, Split::Train).unwrap();
        let streams = [Stream { data: &a, label_offset: 0 }, Stream { data: &b, label_offset: 0 }];
        let mut rng = substream(0, "x");
        let batches = epoch_batches(&streams, 8, &mut rng);
        assert_eq!(batches.len(), 6);
        assert!(batches[..5].iter().all(|b| b.len() == 8));
        let mut seen: Vec<(usize, usize)> = batches.concat();
        seen.sort();
        let expect: Vec<(usize, usize)> = (0..40).map(|i| (0, i)).chain((0..6).map(|i| (1, i))).collect();
        assert_eq!(seen, expect);
        assert!(batches.iter().any(|b| b.iter().any(|x| x.0 == 0) && b.iter().any(|x| x.0 == 1)));
    }

    #[test]
    fn accuracy_rules() {
        let data = build_object_dataset(4, 3, 1, Split::Test).unwrap();
        let net = Network::init(small(), 0).unwrap();
        let acc = top1_accuracy(&net, &data, 0).unwrap();
        assert!((0.0..=1.0).contains(&acc));
        let mut rev = data.clone();
        rev.labels.reverse();
        rev.pixels = data.pixels.chunks(INPUT_LEN).rev().flatten().copied().collect();
        assert_eq!(top1_accuracy(&net, &rev, 0).unwrap(), acc);
        let empty = LabeledDataset::new(data.class_names.clone(), Split::Test);
        assert!(top1_accuracy(&net, &empty, 0).is_err());
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }
}
