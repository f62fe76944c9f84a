//! CORnet-Z-style reading network: four conv blocks (V1, V2, V4, IT), a
//! global average pool (H) and a linear readout.

mod checkpoint;
mod train;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, Manifest, ParamEntry, Phase, PhaseRecord, CHECKPOINT_FORMAT};
pub use train::{top1_accuracy, train, EpochRecord, EvalSet, Stream, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::stimgen::render::{CANVAS_H, CANVAS_W};
use crate::tensor::{conv_backward, conv_forward, gemm, pool_backward, pool_forward, ConvGeom, PoolGeom, Tensor};

pub const INPUT_LEN: usize = CANVAS_H * CANVAS_W;
pub const N_BLOCKS: usize = 4;
pub(crate) const POOL: (usize, usize, usize) = (3, 2, 1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    V1,
    V2,
    V4,
    IT,
    H,
    #[serde(rename = "output")]
    Output,
}

impl Layer {
    pub const ALL: [Layer; 6] = [Layer::V1, Layer::V2, Layer::V4, Layer::IT, Layer::H, Layer::Output];
    pub const CONV: [Layer; 4] = [Layer::V1, Layer::V2, Layer::V4, Layer::IT];

    pub fn name(self) -> &'static str {
        match self {
            Layer::V1 => "V1",
            Layer::V2 => "V2",
            Layer::V4 => "V4",
            Layer::IT => "IT",
            Layer::H => "H",
            Layer::Output => "output",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Conv block index, if this layer is a conv block.
    pub fn block(self) -> Option<usize> {
        (self.index() < N_BLOCKS).then_some(self.index())
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Layer::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownLayer(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Channel counts of V1, V2, V4 and IT.
    pub channels: [usize; N_BLOCKS],
    /// Output classes before any extension.
    pub n_classes: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            channels: [64, 64, 128, 256],
            n_classes: 20,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels.contains(&0) || self.n_classes == 0 {
            return Err(Error::InvalidArgument(format!(
                "channel and class counts must be positive: {:?}, {}",
                self.channels, self.n_classes
            )));
        }
        Ok(())
    }

    pub(crate) fn conv_geom(&self, block: usize) -> ConvGeom {
        let (c, h, w) = if block == 0 {
            (1, CANVAS_H, CANVAS_W)
        } else {
            let (h, w) = block_hw(block - 1);
            (self.channels[block - 1], h, w)
        };
        let (k, stride, pad) = if block == 0 { (7, 2, 3) } else { (3, 1, 1) };
        ConvGeom {
            c,
            h,
            w,
            o: self.channels[block],
            kh: k,
            kw: k,
            stride,
            pad,
        }
    }

    fn pool_geom(&self, block: usize) -> PoolGeom {
        let g = self.conv_geom(block);
        PoolGeom {
            h: g.out_h(),
            w: g.out_w(),
            k: POOL.0,
            stride: POOL.1,
            pad: POOL.2,
        }
    }
}

/// Post-pool spatial size of a conv block for the fixed 32 x 128 input.
pub fn block_hw(block: usize) -> (usize, usize) {
    let (mut h, mut w) = (CANVAS_H.div_ceil(2).div_ceil(2), CANVAS_W.div_ceil(2).div_ceil(2));
    for _ in 0..block {
        h = h.div_ceil(2);
        w = w.div_ceil(2);
    }
    (h, w)
}

/// Parameters of the network. Tensor order: weight and bias of V1, V2, V4,
/// IT, then the output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<Tensor>,
    extended: bool,
}

/// Per-layer activations for a batch, each stored image-major.
pub type LayerActivations = BTreeMap<Layer, Tensor>;

pub(crate) struct BlockTrace {
    cols: Vec<f32>,
    /// Post-relu conv output, doubling as the relu mask.
    act: Vec<f32>,
    argmax: Vec<u32>,
}

/// Everything the backward pass needs from one batched forward pass.
pub(crate) struct Trace {
    n: usize,
    blocks: Vec<BlockTrace>,
    /// Post-pool outputs of each block.
    outs: Vec<Vec<f32>>,
    h: Vec<f32>,
    pub(crate) logits: Vec<f32>,
}

pub(crate) struct Grads {
    pub params: Vec<Vec<f32>>,
    pub input: Option<Vec<f32>>,
}

fn glorot(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
    Tensor::from_fn(shape, |_| rng.random_range(-bound..=bound))
}

impl Network {
    pub const PARAM_NAMES: [&'static str; 10] = [
        "V1.conv.weight",
        "V1.conv.bias",
        "V2.conv.weight",
        "V2.conv.bias",
        "V4.conv.weight",
        "V4.conv.bias",
        "IT.conv.weight",
        "IT.conv.bias",
        "output.linear.weight",
        "output.linear.bias",
    ];

    /// Glorot-uniform weights, zero biases, output sized to `config.n_classes`.
    pub fn init(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = substream(seed, "init");
        let mut params = Vec::with_capacity(10);
        for b in 0..N_BLOCKS {
            let g = config.conv_geom(b);
            let area = g.kh * g.kw;
            params.push(glorot(&[g.o, g.c, g.kh, g.kw], g.c * area, g.o * area, &mut rng));
            params.push(Tensor::zeros(&[g.o]));
        }
        let c = config.channels[N_BLOCKS - 1];
        params.push(glorot(&[config.n_classes, c], c, config.n_classes, &mut rng));
        params.push(Tensor::zeros(&[config.n_classes]));
        Ok(Network {
            config,
            params,
            extended: false,
        })
    }

    pub(crate) fn from_parts(config: NetworkConfig, params: Vec<Tensor>, extended: bool) -> Result<Self> {
        config.validate()?;
        if params.len() != Self::PARAM_NAMES.len() {
            return Err(Error::shape("network", format!("expected 10 parameter tensors, got {}", params.len())));
        }
        for b in 0..N_BLOCKS {
            let g = config.conv_geom(b);
            params[2 * b].expect_shape("network", Self::PARAM_NAMES[2 * b], &[g.o, g.c, g.kh, g.kw])?;
            params[2 * b + 1].expect_shape("network", Self::PARAM_NAMES[2 * b + 1], &[g.o])?;
        }
        let k = params[9].len();
        params[8].expect_shape("network", Self::PARAM_NAMES[8], &[k, config.channels[N_BLOCKS - 1]])?;
        if (k == config.n_classes) == extended {
            return Err(Error::shape(
                "network",
                format!("output size {k} inconsistent with extension flag {extended}"),
            ));
        }
        Ok(Network {
            config,
            params,
            extended,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn n_outputs(&self) -> usize {
        self.params[9].len()
    }

    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn conv_weight(&self, block: usize) -> &Tensor {
        &self.params[2 * block]
    }

    pub fn conv_bias(&self, block: usize) -> &Tensor {
        &self.params[2 * block + 1]
    }

    /// Shape of one image's activation at `layer`.
    pub fn layer_shape(&self, layer: Layer) -> Vec<usize> {
        match layer.block() {
            Some(b) => {
                let (h, w) = block_hw(b);
                vec![self.config.channels[b], h, w]
            }
            None if layer == Layer::H => vec![self.config.channels[N_BLOCKS - 1]],
            None => vec![self.n_outputs()],
        }
    }

    pub fn layer_len(&self, layer: Layer) -> usize {
        self.layer_shape(layer).iter().product()
    }

    /// Append `extra` freshly initialized output rows; existing rows are kept.
    pub fn extend_output(&mut self, extra: usize, seed: u64) -> Result<()> {
        if self.extended {
            return Err(Error::InvalidArgument("output layer was already extended".into()));
        }
        if extra == 0 {
            return Err(Error::InvalidArgument("extension needs at least one class".into()));
        }
        let c = self.config.channels[N_BLOCKS - 1];
        let k = self.n_outputs() + extra;
        let mut rng = substream(seed, "init-extend");
        let fresh = glorot(&[extra, c], c, k, &mut rng);
        let mut w = self.params[8].data().to_vec();
        w.extend_from_slice(fresh.data());
        let mut b = self.params[9].data().to_vec();
        b.resize(k, 0.0);
        self.params[8] = Tensor::new(vec![k, c], w)?;
        self.params[9] = Tensor::vector(b);
        self.extended = true;
        Ok(())
    }

    fn check_batch(&self, x: &[f32]) -> Result<usize> {
        if x.is_empty() || !x.len().is_multiple_of(INPUT_LEN) {
            return Err(Error::shape(
                "forward",
                format!("input length {} is not a multiple of 1x{CANVAS_H}x{CANVAS_W}", x.len()),
            ));
        }
        Ok(x.len() / INPUT_LEN)
    }

    /// Run one conv block on `n` inputs.
    fn block_forward(&self, b: usize, x: &[f32], n: usize) -> (BlockTrace, Vec<f32>) {
        let g = self.config.conv_geom(b);
        let (cols, mut act) = conv_forward(x, n, &g, self.params[2 * b].data(), self.params[2 * b + 1].data());
        for v in act.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let (out, argmax) = pool_forward(&act, n * g.o, &self.config.pool_geom(b));
        (BlockTrace { cols, act, argmax }, out)
    }

    fn head_forward(&self, it: &[f32], n: usize) -> (Vec<f32>, Vec<f32>) {
        let c = self.config.channels[N_BLOCKS - 1];
        let (ih, iw) = block_hw(N_BLOCKS - 1);
        let p = ih * iw;
        let h: Vec<f32> = it
            .chunks_exact(p)
            .map(|plane| plane.iter().sum::<f32>() / p as f32)
            .collect();
        let k = self.n_outputs();
        let mut logits = vec![0.0f32; n * k];
        for row in logits.chunks_exact_mut(k) {
            row.copy_from_slice(self.params[9].data());
        }
        gemm(n, c, k, &h, c, 1, self.params[8].data(), 1, c, 1.0, &mut logits, k, 1);
        (h, logits)
    }

    /// Batched forward pass over raw [0,1] images keeping what backward needs.
    pub(crate) fn forward_trace(&self, x: &[f32]) -> Result<Trace> {
        let n = self.check_batch(x)?;
        let mut input: Vec<f32> = x.iter().map(|&v| 2.0 * v - 1.0).collect();
        let mut blocks = Vec::with_capacity(N_BLOCKS);
        let mut outs = Vec::with_capacity(N_BLOCKS);
        for b in 0..N_BLOCKS {
            let (trace, out) = self.block_forward(b, &input, n);
            blocks.push(trace);
            input = out.clone();
            outs.push(out);
        }
        let (h, logits) = self.head_forward(&input, n);
        Ok(Trace {
            n,
            blocks,
            outs,
            h,
            logits,
        })
    }

    /// Reverse pass starting from a gradient on `from`'s output.
    pub(crate) fn backward(&self, trace: &Trace, from: Layer, upstream: &[f32], need_input: bool) -> Grads {
        let n = trace.n;
        let mut params: Vec<Vec<f32>> = self.params.iter().map(|p| vec![0.0; p.len()]).collect();
        let c = self.config.channels[N_BLOCKS - 1];
        let mut grad = upstream.to_vec();
        if from == Layer::Output {
            let k = self.n_outputs();
            gemm(k, n, c, &grad, 1, k, &trace.h, c, 1, 0.0, &mut params[8], c, 1);
            for row in grad.chunks_exact(k) {
                for (db, &g) in params[9].iter_mut().zip(row) {
                    *db += g;
                }
            }
            let mut dh = vec![0.0f32; n * c];
            gemm(n, k, c, &grad, k, 1, self.params[8].data(), c, 1, 0.0, &mut dh, c, 1);
            grad = dh;
        }
        if from >= Layer::H {
            let (ih, iw) = block_hw(N_BLOCKS - 1);
            let p = ih * iw;
            grad = grad
                .iter()
                .flat_map(|&g| std::iter::repeat_n(g / p as f32, p))
                .collect();
        }
        let top = from.block().unwrap_or(N_BLOCKS - 1);
        for b in (0..=top).rev() {
            let g = self.config.conv_geom(b);
            let bt = &trace.blocks[b];
            let mut dact = pool_backward(&grad, &bt.argmax, bt.act.len());
            for (d, &a) in dact.iter_mut().zip(&bt.act) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let need_dx = b > 0 || need_input;
            let cg = conv_backward(&dact, n, &g, self.params[2 * b].data(), &bt.cols, need_dx);
            params[2 * b] = cg.dweight;
            params[2 * b + 1] = cg.dbias;
            match cg.dx {
                Some(dx) => grad = dx,
                None => break,
            }
        }
        let input = need_input.then(|| grad.iter().map(|&g| 2.0 * g).collect());
        Grads { params, input }
    }

    fn capture_chunk(&self, x: &[f32], layers: &[Layer], out: &mut BTreeMap<Layer, Vec<f32>>) -> Result<()> {
        let t = self.forward_trace(x)?;
        for &l in layers {
            let src: &[f32] = match l.block() {
                Some(b) => &t.outs[b],
                None if l == Layer::H => &t.h,
                None => &t.logits,
            };
            out.entry(l).or_default().extend_from_slice(src);
        }
        Ok(())
    }

    /// Activations at `layers` for a stack of images, each returned as an
    /// (images x units) matrix.
    pub fn capture_batch(&self, x: &[f32], layers: &[Layer]) -> Result<BTreeMap<Layer, Vec<f32>>> {
        let n = self.check_batch(x)?;
        let mut out = BTreeMap::new();
        const CHUNK: usize = 64;
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            self.capture_chunk(&x[start * INPUT_LEN..end * INPUT_LEN], layers, &mut out)?;
        }
        Ok(out)
    }

    /// Same as [`Network::capture_batch`] for a list of image tensors.
    pub fn capture_images(&self, images: &[Tensor], layers: &[Layer]) -> Result<BTreeMap<Layer, Vec<f32>>> {
        let mut flat = Vec::with_capacity(images.len() * INPUT_LEN);
        for im in images {
            if im.shape() != [1, CANVAS_H, CANVAS_W] {
                return Err(Error::shape("capture", format!("image shape {:?}", im.shape())));
            }
            flat.extend_from_slice(im.data());
        }
        self.capture_batch(&flat, layers)
    }

    /// Activations of one 1 x 32 x 128 image at the named layers.
    pub fn forward_capture(&self, image: &Tensor, layers: &[&str]) -> Result<LayerActivations> {
        let parsed: Vec<Layer> = layers.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        let caps = self.capture_images(std::slice::from_ref(image), &parsed)?;
        caps.into_iter()
            .map(|(l, data)| Ok((l, Tensor::new(self.layer_shape(l), data)?)))
            .collect()
    }

    pub fn logits(&self, x: &[f32]) -> Result<Vec<f32>> {
        Ok(self.capture_batch(x, &[Layer::Output])?.remove(&Layer::Output).unwrap())
    }

    /// Continue the forward pass from given activations of `start` (one image
    /// per row) and return the activations of `target`.
    pub fn forward_from(&self, start: Layer, acts: &[f32], target: Layer) -> Result<Vec<f32>> {
        if target <= start {
            return Err(Error::InvalidArgument(format!("{target} does not follow {start}")));
        }
        let len = self.layer_len(start);
        if acts.is_empty() || !acts.len().is_multiple_of(len) {
            return Err(Error::shape("forward_from", format!("{} values for {start} units {len}", acts.len())));
        }
        let n = acts.len() / len;
        let mut cur = acts.to_vec();
        let first = start.block().map(|b| b + 1).unwrap_or(N_BLOCKS);
        for b in first..N_BLOCKS {
            cur = self.block_forward(b, &cur, n).1;
            if Layer::ALL[b] == target {
                return Ok(cur);
            }
        }
        let (h, logits) = if start == Layer::H {
            let k = self.n_outputs();
            let c = self.config.channels[N_BLOCKS - 1];
            let mut logits = vec![0.0f32; n * k];
            for row in logits.chunks_exact_mut(k) {
                row.copy_from_slice(self.params[9].data());
            }
            gemm(n, c, k, &cur, c, 1, self.params[8].data(), 1, c, 1.0, &mut logits, k, 1);
            (cur, logits)
        } else {
            self.head_forward(&cur, n)
        };
        Ok(if target == Layer::H { h } else { logits })
    }

    /// Value of one unit and its gradient with respect to input pixels.
    pub fn unit_gradient(&self, image: &[f32], layer: Layer, unit: usize) -> Result<(f32, Vec<f32>)> {
        let len = self.layer_len(layer);
        if unit >= len {
            return Err(Error::InvalidArgument(format!("unit {unit} outside {layer} ({len} units)")));
        }
        if image.len() != INPUT_LEN {
            return Err(Error::shape("unit_gradient", format!("image length {}", image.len())));
        }
        let t = self.forward_trace(image)?;
        let value = match layer.block() {
            Some(b) => t.outs[b][unit],
            None if layer == Layer::H => t.h[unit],
            None => t.logits[unit],
        };
        let mut up = vec![0.0f32; len];
        up[unit] = 1.0;
        let g = self.backward(&t, layer, &up, true);
        Ok((value, g.input.unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_chain() {
        let net = Network::init(NetworkConfig::default(), 0).unwrap();
        assert_eq!(net.layer_shape(Layer::V1), vec![64, 8, 32]);
        assert_eq!(net.layer_shape(Layer::V2), vec![64, 4, 16]);
        assert_eq!(net.layer_shape(Layer::V4), vec![128, 2, 8]);
        assert_eq!(net.layer_shape(Layer::IT), vec![256, 1, 4]);
        assert_eq!(net.layer_shape(Layer::H), vec![256]);
        assert_eq!(net.layer_shape(Layer::Output), vec![20]);
        let img = Tensor::full(&[1, 32, 128], 1.0);
        let caps = net.forward_capture(&img, &["V1", "V2", "V4", "IT", "H", "output"]).unwrap();
        for (l, t) in &caps {
            assert_eq!(t.shape(), net.layer_shape(*l).as_slice());
            assert!(t.all_finite());
        }
    }

    #[test]
    fn pinned_parameter_count() {
        let net = Network::init(NetworkConfig::default(), 0).unwrap();
        assert_eq!(net.n_params(), 414_292);
    }

    #[test]
    fn same_seed_same_init() {
        let a = Network::init(NetworkConfig::default(), 7).unwrap();
        let b = Network::init(NetworkConfig::default(), 7).unwrap();
        let c = Network::init(NetworkConfig::default(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.conv_bias(2).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_config_and_layer() {
        let cfg = NetworkConfig {
            channels: [0, 1, 1, 1],
            n_classes: 2,
        };
        assert!(Network::init(cfg, 0).is_err());
        let net = Network::init(NetworkConfig::default(), 0).unwrap();
        let img = Tensor::full(&[1, 32, 128], 1.0);
        assert!(matches!(net.forward_capture(&img, &["V3"]), Err(Error::UnknownLayer(_))));
    }

    #[test]
    fn extension_preserves_rows() {
        let mut net = Network::init(NetworkConfig::default(), 1).unwrap();
        let mut rng = substream(0, "img");
        let img: Vec<f32> = (0..INPUT_LEN).map(|_| rng.random::<f32>()).collect();
        let before = net.logits(&img).unwrap();
        net.extend_output(200, 1).unwrap();
        let after = net.logits(&img).unwrap();
        assert_eq!(after.len(), 220);
        assert_eq!(&after[..20], &before[..]);
        assert!(net.extend_output(5, 1).is_err());
        let mut other = Network::init(NetworkConfig::default(), 1).unwrap();
        other.extend_output(200, 2).unwrap();
        assert_ne!(other.params()[8].data()[20 * 256..], net.params()[8].data()[20 * 256..]);
    }

    #[test]
    fn blank_input_constant_v1_interior() {
        let net = Network::init(NetworkConfig::default(), 3).unwrap();
        let img = Tensor::full(&[1, 32, 128], 1.0);
        let v1 = &net.forward_capture(&img, &["V1"]).unwrap()[&Layer::V1];
        for c in 0..64 {
            let v = v1.at(&[c, 3, 10]);
            for r in 2..6 {
                for col in 2..30 {
                    assert_eq!(v1.at(&[c, r, col]), v);
                }
            }
        }
    }

    #[test]
    fn forward_from_matches_full_pass() {
        let net = Network::init(NetworkConfig::default(), 4).unwrap();
        let mut rng = substream(1, "img");
        let img: Vec<f32> = (0..2 * INPUT_LEN).map(|_| rng.random::<f32>()).collect();
        let caps = net.capture_batch(&img, &[Layer::V4, Layer::IT, Layer::H, Layer::Output]).unwrap();
        assert_eq!(net.forward_from(Layer::V4, &caps[&Layer::V4], Layer::IT).unwrap(), caps[&Layer::IT]);
        assert_eq!(net.forward_from(Layer::V4, &caps[&Layer::V4], Layer::H).unwrap(), caps[&Layer::H]);
        assert_eq!(net.forward_from(Layer::H, &caps[&Layer::H], Layer::Output).unwrap(), caps[&Layer::Output]);
    }

    #[test]
    fn capture_is_pure() {
        let net = Network::init(NetworkConfig::default(), 5).unwrap();
        let img = Tensor::from_fn(&[1, 32, 128], |i| (i % 7) as f32 / 7.0);
        let a = net.forward_capture(&img, &["IT", "H"]).unwrap();
        let b = net.forward_capture(&img, &["IT", "H"]).unwrap();
        assert_eq!(a, b);
    }
}

