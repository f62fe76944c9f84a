use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::classify::{classify_unit, Classification, UnitClass, DEFAULT_THRESHOLD};
use super::select::{letter_preference, select_units_in};
use super::UnitRef;
use crate::cornet::{Layer, Network};
use crate::error::Result;
use crate::stimgen::glyphs::{GlyphSet, N_SYMBOLS};
use crate::stimgen::probes::{factorial_probe, letter_grid, spaced_probe};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitProfile {
    pub unit: UnitRef,
    pub preferred: usize,
    pub least: usize,
    /// Letter grid gave no preference; the probe pair is a fallback.
    pub degenerate_preference: bool,
    pub m4: Vec<f64>,
    pub m3: Vec<f64>,
    pub classification: Classification,
}

impl UnitProfile {
    pub fn class(&self) -> UnitClass {
        self.classification.class
    }
}

fn column(acts: &[f32], n_units: usize, unit: usize) -> Vec<f64> {
    acts.iter().skip(unit).step_by(n_units).map(|&v| v as f64).collect()
}

/// Letter preference, probe matrices and class for each unit. Probe images
/// are shared between units with the same letter pair.
pub fn probe_units(net: &Network, glyphs: &GlyphSet, units: &[UnitRef]) -> Result<Vec<UnitProfile>> {
    if units.is_empty() {
        return Ok(Vec::new());
    }
    let layers: Vec<Layer> = units.iter().map(|u| u.layer).collect::<BTreeSet<_>>().into_iter().collect();
    let grid = net.capture_images(&letter_grid(glyphs)?, &layers)?;

    let mut prefs = Vec::with_capacity(units.len());
    for u in units {
        let idx = u.flat(net)?;
        let p = letter_preference(&column(&grid[&u.layer], net.layer_len(u.layer), idx))?;
        let least = if p.least == p.preferred { (p.preferred + 1) % N_SYMBOLS } else { p.least };
        prefs.push((idx, p.preferred, least, p.degenerate || p.least == p.preferred));
    }

    let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, &(_, p, l, _)) in prefs.iter().enumerate() {
        by_pair.entry((p, l)).or_default().push(i);
    }
    let mut out: Vec<Option<UnitProfile>> = vec![None; units.len()];
    for ((pref, least), members) in by_pair {
        let f = factorial_probe(glyphs, pref, least)?;
        let s = spaced_probe(glyphs, pref, least)?;
        let images: Vec<Tensor> = f.images.into_iter().chain(s.images).collect();
        let pair_layers: Vec<Layer> = members.iter().map(|&i| units[i].layer).collect::<BTreeSet<_>>().into_iter().collect();
        let acts = net.capture_images(&images, &pair_layers)?;
        for i in members {
            let u = units[i];
            let resp = column(&acts[&u.layer], net.layer_len(u.layer), prefs[i].0);
            let (m4, m3) = (resp[..20].to_vec(), resp[20..].to_vec());
            let classification = classify_unit(&m4, &m3, DEFAULT_THRESHOLD)?;
            out[i] = Some(UnitProfile {
                unit: u,
                preferred: pref,
                least,
                degenerate_preference: prefs[i].3,
                m4,
                m3,
                classification,
            });
        }
    }
    Ok(out.into_iter().map(|p| p.expect("every unit belongs to one letter pair")).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub layer: Layer,
    pub n_units: usize,
    pub n_selective: usize,
    pub selective_fraction: f64,
    /// Selective units whose probe response is flat; they get no class.
    pub n_unresponsive: usize,
    pub counts: BTreeMap<UnitClass, usize>,
    /// Units that looked ordinal on the 5 x 4 probe, and how the spaced probe
    /// resolved them.
    pub ordinal_candidates: usize,
    pub candidates_space: usize,
    pub candidates_ordinal: usize,
}

impl CensusRow {
    pub fn count(&self, class: UnitClass) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn n_classified(&self) -> usize {
        self.n_selective - self.n_unresponsive
    }

    /// Share of classified units with `class`; `None` when none were classified.
    pub fn fraction(&self, class: UnitClass) -> Option<f64> {
        let n = self.n_classified();
        (n > 0).then(|| self.count(class) as f64 / n as f64)
    }

    pub fn from_profiles(layer: Layer, n_units: usize, profiles: &[UnitProfile]) -> Self {
        let mut counts: BTreeMap<UnitClass, usize> = UnitClass::ALL.iter().map(|&c| (c, 0)).collect();
        let (mut cand, mut cs, mut co, mut flat) = (0, 0, 0, 0);
        for p in profiles {
            if p.classification.degenerate {
                flat += 1;
                continue;
            }
            *counts.get_mut(&p.class()).unwrap() += 1;
            if p.classification.ordinal_candidate {
                cand += 1;
                match p.class() {
                    UnitClass::Space => cs += 1,
                    UnitClass::Ordinal => co += 1,
                    _ => {}
                }
            }
        }
        CensusRow {
            layer,
            n_units,
            n_selective: profiles.len(),
            selective_fraction: profiles.len() as f64 / n_units as f64,
            n_unresponsive: flat,
            counts,
            ordinal_candidates: cand,
            candidates_space: cs,
            candidates_ordinal: co,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub rows: Vec<CensusRow>,
    pub profiles: Vec<UnitProfile>,
}

/// Select word units in every hidden layer and classify each of them.
pub fn layer_census(
    net: &Network,
    glyphs: &GlyphSet,
    word_images: &[Tensor],
    groups: &[Vec<Tensor>],
    k: f64,
) -> Result<Census> {
    let mut rows = Vec::new();
    let mut profiles = Vec::new();
    for layer in [Layer::V1, Layer::V2, Layer::V4, Layer::IT, Layer::H] {
        let units = select_units_in(net, layer, word_images, groups, k)?;
        let p = probe_units(net, glyphs, &units)?;
        rows.push(CensusRow::from_profiles(layer, net.layer_len(layer), &p));
        profiles.extend(p);
    }
    Ok(Census { rows, profiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cornet::NetworkConfig;
    use crate::stimgen::glyphs::Script;

    #[test]
    fn probe_matrices_are_pure_and_nonnegative() {
        let net = Network::init(NetworkConfig::default(), 3).unwrap();
        let glyphs = GlyphSet::new(Script::A);
        let units = [
            UnitRef::from_flat(&net, Layer::V4, 37),
            UnitRef::from_flat(&net, Layer::H, 5),
            UnitRef::from_flat(&net, Layer::H, 6),
        ];
        let a = probe_units(&net, &glyphs, &units).unwrap();
        let b = probe_units(&net, &glyphs, &units).unwrap();
        assert_eq!(a, b);
        for p in &a {
            assert_eq!((p.m4.len(), p.m3.len()), (20, 12));
            assert!(p.m4.iter().chain(&p.m3).all(|&v| v >= 0.0));
            assert_ne!(p.preferred, p.least);
        }
    }

    #[test]
    fn unresponsive_units_are_left_out_of_fractions() {
        let net = Network::init(NetworkConfig { channels: [2, 2, 2, 2], n_classes: 2 }, 0).unwrap();
        let profile = |m4: Vec<f64>| UnitProfile {
            unit: UnitRef::from_flat(&net, Layer::V1, 0),
            preferred: 0,
            least: 1,
            degenerate_preference: false,
            classification: classify_unit(&m4, &[0.0; 12], DEFAULT_THRESHOLD).unwrap(),
            m4,
            m3: vec![0.0; 12],
        };
        let profiles = [profile(crate::probelab::classify::diagonal_template(3)), profile(vec![0.0; 20])];
        let row = CensusRow::from_profiles(Layer::V1, 100, &profiles);
        assert_eq!((row.n_selective, row.n_unresponsive, row.n_classified()), (2, 1, 1));
        assert_eq!(row.fraction(UnitClass::Retinotopic), Some(1.0));
        assert_eq!(row.count(UnitClass::Mixed), 0);
        let none = CensusRow::from_profiles(Layer::V1, 100, &profiles[1..]);
        assert_eq!(none.fraction(UnitClass::Retinotopic), None);
    }
}
