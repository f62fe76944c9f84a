//! SGD with momentum and multiplicative step decay.

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub init_lr: f32,
    /// Epochs between decays.
    pub step: usize,
    pub gamma: f32,
    pub momentum: f32,
    pub weight_decay: f32,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            init_lr: 0.01,
            step: 10,
            gamma: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
        }
    }
}

impl SgdConfig {
    /// `init_lr * gamma^floor(epoch / step)`.
    pub fn lr_at(&self, epoch: usize) -> f32 {
        let decays = (epoch / self.step.max(1)) as i32;
        (self.init_lr as f64 * (self.gamma as f64).powi(decays)) as f32
    }
}

#[derive(Clone, Debug)]
pub struct SgdState {
    pub config: SgdConfig,
    velocities: Vec<Tensor>,
}

impl SgdState {
    pub fn new(config: SgdConfig, params: &[&Tensor]) -> Self {
        let velocities = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        SgdState { config, velocities }
    }

    pub fn velocities(&self) -> &[Tensor] {
        &self.velocities
    }

    /// `v <- momentum*v + g (+ wd*p)`, `p <- p - lr(epoch)*v`.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor], epoch: usize) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.velocities.len() {
            return Err(Error::shape(
                "sgd_step",
                format!(
                    "{} params, {} grads, {} velocity buffers",
                    params.len(),
                    grads.len(),
                    self.velocities.len()
                ),
            ));
        }
        for ((p, g), v) in params.iter().zip(grads).zip(&self.velocities) {
            if p.shape() != g.shape() || p.shape() != v.shape() {
                return Err(Error::shape(
                    "sgd_step",
                    format!("param {:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
        }
        let lr = self.config.lr_at(epoch);
        let (mu, wd) = (self.config.momentum, self.config.weight_decay);
        for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.velocities) {
            let pd = p.data_mut();
            for ((pv, &gv), vv) in pd.iter_mut().zip(g.data()).zip(v.data_mut()) {
                let grad = if wd != 0.0 { gv + wd * *pv } else { gv };
                *vv = mu * *vv + grad;
                *pv -= lr * *vv;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_decay_schedule() {
        let c = SgdConfig::default();
        assert_eq!(c.lr_at(0), 0.01);
        assert_eq!(c.lr_at(9), 0.01);
        assert!((c.lr_at(10) - 0.001).abs() < 1e-10);
        assert!((c.lr_at(25) - 0.0001).abs() < 1e-11);
    }

    #[test]
    fn plain_step() {
        let cfg = SgdConfig {
            momentum: 0.0,
            ..SgdConfig::default()
        };
        let mut p = Tensor::vector(vec![1.0]);
        let g = Tensor::vector(vec![0.5]);
        let mut st = SgdState::new(cfg, &[&p]);
        st.step(&mut [&mut p], &[&g], 0).unwrap();
        assert!((p.data()[0] - 0.995).abs() < 1e-7);
    }

    #[test]
    fn zero_grad_is_bit_identical() {
        let cfg = SgdConfig {
            momentum: 0.0,
            ..SgdConfig::default()
        };
        let orig = Tensor::vector(vec![1.5, -0.0, 3.25e-7, -8.0]);
        let mut p = orig.clone();
        let g = Tensor::zeros(&[4]);
        let mut st = SgdState::new(cfg, &[&p]);
        st.step(&mut [&mut p], &[&g], 3).unwrap();
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&p), bits(&orig));
    }

    #[test]
    fn momentum_accumulates() {
        let mut p = Tensor::vector(vec![0.0]);
        let g = Tensor::vector(vec![1.0]);
        let mut st = SgdState::new(SgdConfig::default(), &[&p]);
        st.step(&mut [&mut p], &[&g], 0).unwrap();
        st.step(&mut [&mut p], &[&g], 0).unwrap();
        // v1 = 1, v2 = 1.9 -> p = -0.01 * 2.9
        assert!((p.data()[0] + 0.029).abs() < 1e-7);
        assert_eq!(st.velocities()[0].data(), &[1.9]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Tensor::vector(vec![0.0, 1.0]);
        let g = Tensor::vector(vec![1.0]);
        let mut st = SgdState::new(SgdConfig::default(), &[&p]);
        assert!(st.step(&mut [&mut p], &[&g], 0).is_err());
    }
}
