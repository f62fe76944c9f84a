use super::UnitRef;
use crate::cornet::{Layer, Network};
use crate::error::{Error, Result};
use crate::stimgen::glyphs::N_SYMBOLS;
use crate::stimgen::render::N_SLOTS;
use crate::tensor::Tensor;

/// Sorted-order sum so the result does not depend on stimulus order.
fn column_stats(matrix: &[f32], n_units: usize, unit: usize, buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(matrix.iter().skip(unit).step_by(n_units).map(|&v| v as f64));
    buf.sort_by(f64::total_cmp);
    let n = buf.len() as f64;
    let mean = buf.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = buf.iter().map(|v| (v - mean) * (v - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / n).sqrt())
}

/// Indices of units whose mean word response exceeds every nonword group's
/// mean by more than `k` of that group's population SDs.
///
/// `words` and each group are (images x `n_units`) matrices.
pub fn select_units(words: &[f32], groups: &[&[f32]], n_units: usize, k: f64) -> Result<Vec<usize>> {
    if n_units == 0 || words.is_empty() || !words.len().is_multiple_of(n_units) {
        return Err(Error::shape("select_units", format!("{} word responses for {n_units} units", words.len())));
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument("at least one nonword group is required".into()));
    }
    for g in groups {
        if g.len() % n_units != 0 {
            return Err(Error::shape("select_units", format!("{} group responses for {n_units} units", g.len())));
        }
        if g.len() / n_units < 2 {
            return Err(Error::InvalidArgument("each nonword group needs at least 2 images".into()));
        }
    }
    let mut buf = Vec::new();
    let mut out = Vec::new();
    for u in 0..n_units {
        let (wm, _) = column_stats(words, n_units, u, &mut buf);
        let pass = groups.iter().all(|g| {
            let (gm, gsd) = column_stats(g, n_units, u, &mut buf);
            wm > gm + k * gsd
        });
        if pass {
            out.push(u);
        }
    }
    Ok(out)
}

/// Word-selective units of `layer`, sorted.
pub fn select_units_in(
    net: &Network,
    layer: Layer,
    word_images: &[Tensor],
    groups: &[Vec<Tensor>],
    k: f64,
) -> Result<Vec<UnitRef>> {
    let words = net.capture_images(word_images, &[layer])?.remove(&layer).unwrap();
    let group_acts: Vec<Vec<f32>> = groups
        .iter()
        .map(|g| Ok(net.capture_images(g, &[layer])?.remove(&layer).unwrap()))
        .collect::<Result<_>>()?;
    let refs: Vec<&[f32]> = group_acts.iter().map(Vec::as_slice).collect();
    let idx = select_units(&words, &refs, net.layer_len(layer), k)?;
    Ok(idx.into_iter().map(|i| UnitRef::from_flat(net, layer, i)).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LetterPreference {
    pub preferred: usize,
    pub least: usize,
    /// Per-symbol maximum over slots.
    pub symbol_max: Vec<f64>,
    /// All responses equal, so the preference is only the tie rule.
    pub degenerate: bool,
}

/// Preferred and least-preferred symbols from the 26 x 8 letter grid
/// (symbol-major), taking the max over slots first. Ties go to the earlier
/// letter.
pub fn letter_preference(responses: &[f64]) -> Result<LetterPreference> {
    if responses.len() != N_SYMBOLS * N_SLOTS {
        return Err(Error::shape("letter_preference", format!("{} responses, need 208", responses.len())));
    }
    let symbol_max: Vec<f64> = responses
        .chunks_exact(N_SLOTS)
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let (mut preferred, mut least) = (0, 0);
    for (s, &v) in symbol_max.iter().enumerate() {
        if v > symbol_max[preferred] {
            preferred = s;
        }
        if v < symbol_max[least] {
            least = s;
        }
    }
    let degenerate = responses.iter().all(|&v| v == responses[0]);
    Ok(LetterPreference {
        preferred,
        least,
        symbol_max,
        degenerate,
    })
}
