use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::error::{Error, Result};

/// Correlation-distance matrix over a stimulus list. Pairs involving a
/// constant activation vector are undefined (stored as NaN).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rdm {
    pub n: usize,
    values: Vec<f64>,
}

impl Rdm {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[i * self.n + j];
        (!v.is_nan()).then_some(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// d(i, j) = 1 - Pearson r between rows `i` and `j` of an
/// (stimuli x features) matrix.
pub fn rdm(acts: &[f32], n_features: usize) -> Result<Rdm> {
    if n_features == 0 || acts.is_empty() || !acts.len().is_multiple_of(n_features) {
        return Err(Error::shape("rdm", format!("{} values for {n_features} features", acts.len())));
    }
    let n = acts.len() / n_features;
    let rows: Vec<Vec<f64>> = acts.chunks_exact(n_features).map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = pearson(&rows[i], &rows[j]).map_or(f64::NAN, |r| (1.0 - r).clamp(0.0, 2.0));
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(Rdm { n, values })
}

pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanDissimilarity {
    /// NaN when no listed pair is defined.
    pub mean: f64,
    pub n_pairs: usize,
    pub n_undefined: usize,
}

pub fn mean_dissimilarity(rdm: &Rdm, pairs: &[(usize, usize)]) -> Result<MeanDissimilarity> {
    let (mut sum, mut used, mut undefined) = (0.0, 0, 0);
    for &(i, j) in pairs {
        if i >= rdm.n || j >= rdm.n {
            return Err(Error::InvalidArgument(format!("pair ({i}, {j}) outside {} stimuli", rdm.n)));
        }
        match rdm.get(i, j) {
            Some(d) => {
                sum += d;
                used += 1;
            }
            None => undefined += 1,
        }
    }
    Ok(MeanDissimilarity {
        mean: if used > 0 { sum / used as f64 } else { f64::NAN },
        n_pairs: used,
        n_undefined: undefined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let m = rdm(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0, -1.0, -2.0, -3.0, 1.0, 2.0, 4.0], 3).unwrap();
        assert_eq!(m.get(0, 1), Some(0.0));
        assert!((m.get(0, 2).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.get(0, 3).unwrap() - 0.018_019_493_938_034_3).abs() < 1e-9);
    }

    #[test]
    fn constant_rows_flagged() {
        let m = rdm(&[1.0, 1.0, 1.0, 2.0, 0.0, 3.0, 1.0, 5.0], 2).unwrap();
        let s = mean_dissimilarity(&m, &all_pairs(4)).unwrap();
        assert_eq!(s.n_undefined, 3);
        assert_eq!(s.n_pairs, 3);
    }

    proptest! {
        #[test]
        fn rdm_properties(data in prop::collection::vec(-5.0f32..5.0, 24), scale in 0.1f32..10.0, shift in -3.0f32..3.0) {
            let m = rdm(&data, 6).unwrap();
            for i in 0..m.n {
                prop_assert_eq!(m.get(i, i), Some(0.0));
                for j in 0..m.n {
                    prop_assert_eq!(m.get(i, j), m.get(j, i));
                    if let Some(d) = m.get(i, j) {
                        prop_assert!((0.0..=2.0).contains(&d));
                    }
                }
            }
            let mut scaled = data.clone();
            for v in &mut scaled[..6] {
                *v = *v * scale + shift;
            }
            let s = rdm(&scaled, 6).unwrap();
            for j in 1..4 {
                if let (Some(a), Some(b)) = (m.get(0, j), s.get(0, j)) {
                    prop_assert!((a - b).abs() < 1e-4);
                }
            }
        }
    }
}
