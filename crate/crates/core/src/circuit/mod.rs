//! Connectivity dissection, letter maps, V1 filters and activation
//! maximization for a trained network.

pub mod output;
pub mod vismax;

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::cornet::{Layer, Network, POOL};
use crate::error::{Error, Result};
use crate::probelab::UnitRef;
use crate::stimgen::glyphs::{GlyphSet, N_SYMBOLS};
use crate::stimgen::probes::letter_grid;
use crate::stimgen::render::N_SLOTS;
use crate::tensor::Tensor;

pub use vismax::{activation_maximize, maximize, MaximizeConfig, Maximized, NetworkUnit, Objective};

pub const V4_TOP_K: usize = 2;
pub const V1_TOP_K: usize = 5;

fn conv_block(layer: Layer) -> Result<usize> {
    layer
        .block()
        .ok_or_else(|| Error::InvalidArgument(format!("{layer} has no convolution weights")))
}

/// Signed sum of each upstream channel's kernel into `channel` of `layer`.
pub fn weight_channel_sums(net: &Network, layer: Layer, channel: usize) -> Result<Vec<f64>> {
    let b = conv_block(layer)?;
    let w = net.conv_weight(b);
    let (o, c, kh, kw) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
    if channel >= o {
        return Err(Error::InvalidArgument(format!("channel {channel} outside {layer} ({o} channels)")));
    }
    let k = kh * kw;
    let filt = &w.data()[channel * c * k..(channel + 1) * c * k];
    Ok(filt.chunks_exact(k).map(|ch| ch.iter().map(|&v| v as f64).sum()).collect())
}

/// Cells of the upstream layer that can influence a conv unit at `cell`:
/// the pooling window of the unit, widened by its convolution kernel.
pub fn upstream_window(net: &Network, layer: Layer, cell: (usize, usize)) -> Result<(Range<usize>, Range<usize>)> {
    let b = conv_block(layer)?;
    if b == 0 {
        return Err(Error::InvalidArgument("V1 reads pixels, not an upstream layer".into()));
    }
    let up = net.layer_shape(Layer::CONV[b - 1]);
    let g = net.config().conv_geom(b);
    let (pk, ps, pp) = POOL;
    let span = |pos: usize, k: usize, limit: usize| -> Range<usize> {
        let lo = (pos * ps) as isize - pp as isize;
        let hi = lo + pk as isize - 1;
        let lo = lo * g.stride as isize - g.pad as isize;
        let hi = hi * g.stride as isize - g.pad as isize + k as isize - 1;
        (lo.max(0) as usize)..((hi + 1).min(limit as isize) as usize)
    };
    Ok((span(cell.0, g.kh, up[1]), span(cell.1, g.kw, up[2])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveEntry {
    pub channel: usize,
    pub rank: usize,
    pub weight_sum: f64,
    pub activation: f64,
    pub drive: f64,
    /// Upstream units in the window that contributed to `activation`.
    pub units: Vec<UnitRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveRanking {
    pub unit: UnitRef,
    pub weight_sums: Vec<f64>,
    pub activations: Vec<f64>,
    pub drives: Vec<f64>,
    /// All channels by descending drive, lower channel first on ties.
    pub ranking: Vec<usize>,
    pub top: Vec<DriveEntry>,
    /// No eligible upstream unit in the window; every drive is zero.
    pub empty_window: bool,
}

/// Which upstream units may carry activation into a drive ranking.
#[derive(Clone, Copy, Debug)]
pub enum Eligible<'a> {
    /// Only these units (typically the word-selective ones).
    Units(&'a [UnitRef]),
    All,
}

/// Rank the upstream channels of a conv unit by weight sum times the peak
/// response (over `images`) of eligible upstream units inside its window.
pub fn upstream_drive(net: &Network, unit: UnitRef, images: &[Tensor], eligible: Eligible, k: usize) -> Result<DriveRanking> {
    let cell = unit
        .cell
        .ok_or_else(|| Error::InvalidArgument(format!("{unit} is not a conv unit")))?;
    unit.flat(net)?;
    let (rows, cols) = upstream_window(net, unit.layer, cell)?;
    let up_layer = Layer::CONV[conv_block(unit.layer)? - 1];
    let shape = net.layer_shape(up_layer);
    let weight_sums = weight_channel_sums(net, unit.layer, unit.channel)?;
    if images.is_empty() {
        return Err(Error::InvalidArgument("drive needs at least one probe image".into()));
    }
    let acts = net.capture_images(images, &[up_layer])?.remove(&up_layer).unwrap();
    let len = net.layer_len(up_layer);
    let peak = |flat: usize| acts.iter().skip(flat).step_by(len).map(|&v| v as f64).fold(f64::NEG_INFINITY, f64::max);

    let in_window: Vec<UnitRef> = match eligible {
        Eligible::Units(list) => list
            .iter()
            .filter(|u| u.layer == up_layer && u.cell.is_some_and(|(r, c)| rows.contains(&r) && cols.contains(&c)))
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
        Eligible::All => {
            let mut all = Vec::new();
            for channel in 0..shape[0] {
                for r in rows.clone() {
                    for c in cols.clone() {
                        all.push(UnitRef {
                            layer: up_layer,
                            channel,
                            cell: Some((r, c)),
                        });
                    }
                }
            }
            all
        }
    };
    let mut activations = vec![0.0; shape[0]];
    let mut members: Vec<Vec<(UnitRef, f64)>> = vec![Vec::new(); shape[0]];
    for u in &in_window {
        let v = peak(u.flat(net)?);
        activations[u.channel] = f64::max(activations[u.channel], v);
        members[u.channel].push((*u, v));
    }
    let drives: Vec<f64> = weight_sums.iter().zip(&activations).map(|(w, a)| w * a).collect();
    let mut ranking: Vec<usize> = (0..drives.len()).collect();
    ranking.sort_by(|&a, &b| drives[b].total_cmp(&drives[a]).then(a.cmp(&b)));
    let top = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(rank, &ch)| DriveEntry {
            channel: ch,
            rank: rank + 1,
            weight_sum: weight_sums[ch],
            activation: activations[ch],
            drive: drives[ch],
            units: members[ch].iter().filter(|(_, v)| *v == activations[ch]).map(|(u, _)| *u).collect(),
        })
        .collect();
    Ok(DriveRanking {
        unit,
        weight_sums,
        activations,
        drives,
        ranking,
        top,
        empty_window: in_window.is_empty(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterMap {
    pub unit: UnitRef,
    /// 26 x 8, symbol-major, divided by `peak`.
    pub values: Vec<f64>,
    pub peak: f64,
    /// Never responded; `values` left at zero.
    pub degenerate: bool,
}

/// Response of each unit to every letter at every slot, max-normalized.
pub fn single_letter_profiles(net: &Network, glyphs: &GlyphSet, units: &[UnitRef]) -> Result<Vec<LetterMap>> {
    let layers: Vec<Layer> = units.iter().map(|u| u.layer).collect::<BTreeSet<_>>().into_iter().collect();
    let acts = net.capture_images(&letter_grid(glyphs)?, &layers)?;
    units
        .iter()
        .map(|u| {
            let len = net.layer_len(u.layer);
            let raw: Vec<f64> = acts[&u.layer].iter().skip(u.flat(net)?).step_by(len).map(|&v| v as f64).collect();
            debug_assert_eq!(raw.len(), N_SYMBOLS * N_SLOTS);
            let peak = raw.iter().copied().fold(0.0, f64::max);
            let degenerate = !(peak > 0.0);
            let values = if degenerate { vec![0.0; raw.len()] } else { raw.iter().map(|v| v / peak).collect() };
            Ok(LetterMap {
                unit: *u,
                values,
                peak,
                degenerate,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterImage {
    pub channel: usize,
    pub size: usize,
    /// Row-major, in [0, 1].
    pub pixels: Vec<f64>,
    pub degenerate: bool,
}

/// Shift by the minimum, then divide by the new maximum. Constant input
/// gives zeros and `true`.
pub fn normalize_filter(values: &[f64]) -> (Vec<f64>, bool) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().map(|v| v - min).fold(0.0, f64::max);
    if !(max > 0.0) {
        return (vec![0.0; values.len()], true);
    }
    (values.iter().map(|v| (v - min) / max).collect(), false)
}

pub fn v1_filter_images(net: &Network) -> Vec<FilterImage> {
    let w = net.conv_weight(0);
    let (o, c, kh, kw) = (w.shape()[0], w.shape()[1], w.shape()[2], w.shape()[3]);
    debug_assert_eq!(c, 1);
    (0..o)
        .map(|ch| {
            let raw: Vec<f64> = w.data()[ch * kh * kw..(ch + 1) * kh * kw].iter().map(|&v| v as f64).collect();
            let (pixels, degenerate) = normalize_filter(&raw);
            FilterImage {
                channel: ch,
                size: kh,
                pixels,
                degenerate,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct V1Dissection {
    pub ranking: DriveRanking,
    pub filters: Vec<FilterImage>,
    /// Fewer V1 channels exist than were asked for.
    pub short: bool,
}

/// Top V1 channels feeding a V2 unit, with their filters.
pub fn v1_to_v2_dissection(net: &Network, unit: UnitRef, images: &[Tensor], eligible: Eligible, k: usize) -> Result<V1Dissection> {
    if unit.layer != Layer::V2 {
        return Err(Error::InvalidArgument(format!("{unit} is not a V2 unit")));
    }
    let ranking = upstream_drive(net, unit, images, eligible, k)?;
    let all = v1_filter_images(net);
    let filters = ranking.top.iter().map(|e| all[e.channel].clone()).collect();
    Ok(V1Dissection {
        short: ranking.drives.len() < k,
        ranking,
        filters,
    })
}

/// Middle spatial unit of a conv channel (H units pass through unchanged).
pub fn center_unit(net: &Network, layer: Layer, channel: usize) -> UnitRef {
    let shape = net.layer_shape(layer);
    UnitRef {
        layer,
        channel,
        cell: (shape.len() == 3).then(|| (shape[1] / 2, shape[2] / 2)),
    }
}
