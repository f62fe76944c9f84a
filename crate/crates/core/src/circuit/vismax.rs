//! Gradient ascent on input pixels with step backtracking.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cornet::{Network, INPUT_LEN};
use crate::error::{Error, Result};
use crate::probelab::UnitRef;
use crate::rng::substream;
use crate::stimgen::render::{CANVAS_H, CANVAS_W};
use crate::tensor::Tensor;

/// A scalar function of an image with its pixel gradient.
pub trait Objective {
    fn len(&self) -> usize;
    fn value_grad(&self, image: &[f32]) -> Result<(f32, Vec<f32>)>;

    fn value(&self, image: &[f32]) -> Result<f32> {
        Ok(self.value_grad(image)?.0)
    }
}

pub struct NetworkUnit<'a> {
    net: &'a Network,
    unit: UnitRef,
    flat: usize,
}

impl<'a> NetworkUnit<'a> {
    pub fn new(net: &'a Network, unit: UnitRef) -> Result<Self> {
        Ok(NetworkUnit {
            flat: unit.flat(net)?,
            net,
            unit,
        })
    }
}

impl Objective for NetworkUnit<'_> {
    fn len(&self) -> usize {
        INPUT_LEN
    }

    fn value_grad(&self, image: &[f32]) -> Result<(f32, Vec<f32>)> {
        self.net.unit_gradient(image, self.unit.layer, self.flat)
    }

    fn value(&self, image: &[f32]) -> Result<f32> {
        let acts = self.net.capture_batch(image, &[self.unit.layer])?;
        Ok(acts[&self.unit.layer][self.flat])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximizeConfig {
    pub iters: usize,
    pub step: f32,
    pub seed: u64,
    /// +1 ascends, -1 descends.
    pub direction: f32,
    pub max_halvings: usize,
    pub retries: usize,
}

impl Default for MaximizeConfig {
    fn default() -> Self {
        MaximizeConfig {
            iters: 1000,
            step: 0.05,
            seed: 0,
            direction: 1.0,
            max_halvings: 20,
            retries: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Maximized {
    pub image: Vec<f32>,
    /// Objective before the first step and after every accepted step.
    pub trace: Vec<f32>,
    /// Noise draws used, including the successful one.
    pub attempts: usize,
    /// Backtracking gave up before `iters` steps.
    pub stalled: bool,
}

impl Maximized {
    pub fn initial(&self) -> f32 {
        self.trace[0]
    }

    pub fn last(&self) -> f32 {
        *self.trace.last().unwrap()
    }
}

fn noise(len: usize, seed: u64, attempt: usize) -> Vec<f32> {
    let mut rng = substream(seed, &format!("vismax-{attempt}"));
    (0..len).map(|_| rng.random_range(0.4f32..0.6)).collect()
}

/// Clamped gradient steps of `step * g / max|g|`; a step that moves the
/// objective the wrong way is halved until it does not.
pub fn maximize(obj: &impl Objective, cfg: &MaximizeConfig) -> Result<Maximized> {
    if cfg.direction != 1.0 && cfg.direction != -1.0 {
        return Err(Error::InvalidArgument(format!("direction must be +1 or -1, got {}", cfg.direction)));
    }
    let dir = cfg.direction;
    for attempt in 0..=cfg.retries {
        let mut x = noise(obj.len(), cfg.seed, attempt);
        let (mut v, mut g) = obj.value_grad(&x)?;
        if g.iter().all(|&d| d == 0.0) {
            continue;
        }
        let mut trace = vec![v];
        let mut stalled = false;
        for it in 0..cfg.iters {
            if it > 0 {
                (v, g) = obj.value_grad(&x)?;
            }
            let gmax = g.iter().fold(0.0f32, |m, d| m.max(d.abs()));
            if gmax == 0.0 {
                stalled = true;
                break;
            }
            let mut step = cfg.step;
            let mut accepted = None;
            for _ in 0..=cfg.max_halvings {
                let cand: Vec<f32> = x.iter().zip(&g).map(|(p, d)| (p + dir * step * d / gmax).clamp(0.0, 1.0)).collect();
                let cv = obj.value(&cand)?;
                if dir * (cv - v) >= 0.0 {
                    accepted = Some((cand, cv));
                    break;
                }
                step /= 2.0;
            }
            match accepted {
                Some((cand, cv)) => {
                    x = cand;
                    trace.push(cv);
                }
                None => {
                    stalled = true;
                    break;
                }
            }
        }
        return Ok(Maximized {
            image: x,
            trace,
            attempts: attempt + 1,
            stalled,
        });
    }
    Err(Error::Failed(format!("zero gradient from {} noise images", cfg.retries + 1)))
}

/// Maximize one network unit and return the final image as a tensor.
pub fn activation_maximize(net: &Network, unit: UnitRef, cfg: &MaximizeConfig) -> Result<(Tensor, Maximized)> {
    let m = maximize(&NetworkUnit::new(net, unit)?, cfg)?;
    Ok((Tensor::new(vec![1, CANVAS_H, CANVAS_W], m.image.clone())?, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(Vec<f32>);

    impl Objective for Linear {
        fn len(&self) -> usize {
            self.0.len()
        }
        fn value_grad(&self, x: &[f32]) -> Result<(f32, Vec<f32>)> {
            Ok((x.iter().zip(&self.0).map(|(a, b)| a * b).sum(), self.0.clone()))
        }
    }

    #[test]
    fn linear_unit_reaches_box_corner() {
        let w = vec![1.0, -2.0, 0.5, -0.1, 3.0];
        let m = maximize(&Linear(w.clone()), &MaximizeConfig::default()).unwrap();
        for (p, wi) in m.image.iter().zip(&w) {
            assert_eq!(*p, if *wi > 0.0 { 1.0 } else { 0.0 });
        }
        assert!(m.trace.windows(2).all(|t| t[1] >= t[0]));
    }

    #[test]
    fn descent_is_non_increasing() {
        let cfg = MaximizeConfig {
            iters: 50,
            direction: -1.0,
            ..Default::default()
        };
        let m = maximize(&Linear(vec![0.3, -0.7, 1.1]), &cfg).unwrap();
        assert!(m.trace.windows(2).all(|t| t[1] <= t[0]));
        assert!(m.last() < m.initial());
    }

    #[test]
    fn zero_gradient_fails_after_retries() {
        let m = maximize(&Linear(vec![0.0; 4]), &MaximizeConfig::default());
        assert!(matches!(m, Err(Error::Failed(_))));
    }
}
