//! Retinotopic / ordinal / space / mixed labels from probe matrices.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::error::{Error, Result};
use crate::stimgen::probes::{FACTORIAL_ORDINALS, FACTORIAL_POSITIONS, SPACED_ORDINALS, SPACED_POSITIONS};
use crate::stimgen::render::N_SLOTS;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const M4_LEN: usize = FACTORIAL_POSITIONS * FACTORIAL_ORDINALS;
pub const M3_LEN: usize = SPACED_POSITIONS * SPACED_ORDINALS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitClass {
    Retinotopic,
    Ordinal,
    Space,
    Mixed,
}

impl UnitClass {
    pub const ALL: [UnitClass; 4] = [UnitClass::Retinotopic, UnitClass::Ordinal, UnitClass::Space, UnitClass::Mixed];

    pub fn name(self) -> &'static str {
        match self {
            UnitClass::Retinotopic => "retinotopic",
            UnitClass::Ordinal => "ordinal",
            UnitClass::Space => "space",
            UnitClass::Mixed => "mixed",
        }
    }
}

impl fmt::Display for UnitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: UnitClass,
    /// Best diagonal template r and its 1-based slot.
    pub r_diagonal: f64,
    pub diagonal_slot: usize,
    /// Best vertical template r and its 1-based ordinal column.
    pub r_vertical: f64,
    pub vertical_column: usize,
    /// Spaced-probe correlations, only for ordinal candidates.
    pub r_space: Option<f64>,
    pub r_ordinal: Option<f64>,
    /// Looked ordinal under the 5 x 4 probe alone.
    pub ordinal_candidate: bool,
    /// M4 is constant or never positive, so no template applies.
    pub degenerate: bool,
}

/// Slot (1-based) of the preferred letter in factorial cell (w, o).
pub fn factorial_slot(w: usize, o: usize) -> usize {
    w + o - 1
}

pub fn spaced_slot(w: usize, o: usize) -> usize {
    w + 2 * (o - 1)
}

/// Spaced-probe ordinal column matching a factorial ordinal column: first
/// and second letters keep their index, the last two map to the middle and
/// last letter of three.
pub fn spaced_column(factorial_column: usize) -> usize {
    match factorial_column {
        1 => 1,
        2 | 3 => 2,
        _ => 3,
    }
}

fn cells(rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=rows).flat_map(move |w| (1..=cols).map(move |o| (w, o)))
}

pub fn diagonal_template(slot: usize) -> Vec<f64> {
    cells(FACTORIAL_POSITIONS, FACTORIAL_ORDINALS)
        .map(|(w, o)| (factorial_slot(w, o) == slot) as u8 as f64)
        .collect()
}

pub fn vertical_template(column: usize) -> Vec<f64> {
    cells(FACTORIAL_POSITIONS, FACTORIAL_ORDINALS).map(|(_, o)| (o == column) as u8 as f64).collect()
}

pub fn strict_ordinal_template(factorial_column: usize) -> Vec<f64> {
    let c = spaced_column(factorial_column);
    cells(SPACED_POSITIONS, SPACED_ORDINALS).map(|(_, o)| (o == c) as u8 as f64).collect()
}

/// Fires when the preferred letter sits inside the unit's receptive slots.
/// In a spaced string every letter already has a blank (or the image edge)
/// on both sides, so adjacency to a blank holds in every cell.
pub fn space_template(receptive: &[bool; N_SLOTS]) -> Vec<f64> {
    cells(SPACED_POSITIONS, SPACED_ORDINALS)
        .map(|(w, o)| receptive[spaced_slot(w, o) - 1] as u8 as f64)
        .collect()
}

fn best(m: &[f64], templates: impl Iterator<Item = (usize, Vec<f64>)>) -> (f64, usize) {
    let mut out = (f64::NEG_INFINITY, 0);
    for (k, t) in templates {
        let r = pearson(m, &t).unwrap_or(0.0);
        if r > out.0 {
            out = (r, k);
        }
    }
    out
}

/// `m4` is 5 x 4 and `m3` 4 x 3, both row-major by (word position, ordinal).
pub fn classify_unit(m4: &[f64], m3: &[f64], threshold: f64) -> Result<Classification> {
    if m4.len() != M4_LEN || m3.len() != M3_LEN {
        return Err(Error::shape("classify_unit", format!("M4 has {}, M3 has {} cells", m4.len(), m3.len())));
    }
    let (r_diagonal, diagonal_slot) = best(m4, (1..=N_SLOTS).map(|s| (s, diagonal_template(s))));
    let (r_vertical, vertical_column) = best(m4, (1..=FACTORIAL_ORDINALS).map(|c| (c, vertical_template(c))));
    let mut out = Classification {
        class: UnitClass::Mixed,
        r_diagonal,
        diagonal_slot,
        r_vertical,
        vertical_column,
        r_space: None,
        r_ordinal: None,
        ordinal_candidate: false,
        degenerate: false,
    };
    let max4 = m4.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max4 > 0.0) || m4.iter().all(|&v| v == m4[0]) {
        out.degenerate = true;
        return Ok(out);
    }
    if r_diagonal >= threshold && r_diagonal > r_vertical {
        out.class = UnitClass::Retinotopic;
    } else if r_vertical >= threshold && r_vertical > r_diagonal {
        out.ordinal_candidate = true;
        let col: Vec<f64> = (1..=FACTORIAL_POSITIONS).map(|w| m4[(w - 1) * FACTORIAL_ORDINALS + vertical_column - 1]).collect();
        let peak = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut receptive = [false; N_SLOTS];
        for (w, &v) in (1..).zip(&col) {
            if v >= peak / 2.0 {
                receptive[factorial_slot(w, vertical_column) - 1] = true;
            }
        }
        let r_space = pearson(m3, &space_template(&receptive)).unwrap_or(0.0);
        let r_ordinal = pearson(m3, &strict_ordinal_template(vertical_column)).unwrap_or(0.0);
        out.r_space = Some(r_space);
        out.r_ordinal = Some(r_ordinal);
        let m3_constant = m3.iter().all(|&v| v == m3[0]);
        out.class = if m3_constant && m3[0] > 0.0 {
            // responds to the letter wherever it is flanked by blanks
            UnitClass::Space
        } else if r_space > r_ordinal {
            UnitClass::Space
        } else {
            UnitClass::Ordinal
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal_is_retinotopic() {
        let m4 = diagonal_template(4);
        let c = classify_unit(&m4, &[0.0; 12], 0.5).unwrap();
        assert_eq!(c.class, UnitClass::Retinotopic);
        assert_eq!(c.diagonal_slot, 4);
        assert!((c.r_diagonal - 1.0).abs() < 1e-12);
    }

    #[test]
    fn first_column_with_ordinal_m3() {
        let c = classify_unit(&vertical_template(1), &strict_ordinal_template(1), 0.5).unwrap();
        assert_eq!(c.class, UnitClass::Ordinal);
        assert!(c.ordinal_candidate);
    }

    #[test]
    fn first_column_with_blank_left_m3() {
        // every spaced letter is preceded by a blank or the edge
        let c = classify_unit(&vertical_template(1), &[1.0; 12], 0.5).unwrap();
        assert_eq!(c.class, UnitClass::Space);
    }

    #[test]
    fn receptive_space_beats_ordinal() {
        // column-1 unit whose field covers slots 1..3 only
        let mut m4 = vec![0.0; 20];
        for w in 1..=3 {
            m4[(w - 1) * 4] = 1.0;
        }
        let mut recept = [false; 8];
        recept[..3].iter_mut().for_each(|r| *r = true);
        let m3 = space_template(&recept);
        let c = classify_unit(&m4, &m3, 0.5).unwrap();
        assert_eq!(c.class, UnitClass::Space, "{c:?}");
    }

    #[test]
    fn silent_unit_is_degenerate() {
        let c = classify_unit(&[0.0; 20], &[0.0; 12], 0.5).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.class, UnitClass::Mixed);
        let flat = classify_unit(&[1.0; 20], &[1.0; 12], 0.5).unwrap();
        assert!(flat.degenerate);
        assert_eq!(flat.class, UnitClass::Mixed);
    }

    #[test]
    fn shape_checked() {
        assert!(classify_unit(&[0.0; 19], &[0.0; 12], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn positive_rescaling_invariant(
            m4 in prop::collection::vec(0.0f64..3.0, 20),
            m3 in prop::collection::vec(0.0f64..3.0, 12),
            a in 0.01f64..100.0,
        ) {
            let c = classify_unit(&m4, &m3, 0.5).unwrap();
            let s4: Vec<f64> = m4.iter().map(|v| v * a).collect();
            let s3: Vec<f64> = m3.iter().map(|v| v * a).collect();
            let d = classify_unit(&s4, &s3, 0.5).unwrap();
            // correlations agree to rounding; labels agree away from ties
            prop_assert!((c.r_diagonal - d.r_diagonal).abs() < 1e-9);
            prop_assert!((c.r_vertical - d.r_vertical).abs() < 1e-9);
            let margin = (c.r_diagonal - c.r_vertical).abs().min((c.r_diagonal - 0.5).abs()).min((c.r_vertical - 0.5).abs());
            let m3_margin = match (c.r_space, c.r_ordinal) {
                (Some(s), Some(o)) => (s - o).abs(),
                _ => 1.0,
            };
            if margin > 1e-9 && m3_margin > 1e-9 {
                prop_assert_eq!(c.class, d.class);
            }
        }
    }
}
