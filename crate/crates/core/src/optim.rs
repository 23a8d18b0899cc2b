//! Learning-rate schedule and Adam.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

/// `base · (1 − iter/max)^power`, clamped to 0 once `iter ≥ max`.
pub fn poly_lr(iter: u64, max_iters: u64, base: f64, power: f64) -> f64 {
    if max_iters == 0 || iter >= max_iters {
        return 0.0;
    }
    base * libm::pow(1.0 - iter as f64 / max_iters as f64, power)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Adam with coupled weight decay (`g ← g + wd·θ`). Moments are kept in
/// parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub cfg: AdamConfig,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl Adam {
    pub fn new(params: &ParamStore, cfg: AdamConfig) -> Self {
        let zeros = || {
            params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.shape()))
                .collect()
        };
        Adam {
            cfg,
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    /// One update. `None` marks a frozen parameter, which keeps its value
    /// and moments. Grads are checked before anything is written, so a
    /// non-finite gradient leaves parameters and moments untouched.
    pub fn update(
        &mut self,
        params: &mut ParamStore,
        grads: &[Option<Tensor>],
        lr: f64,
    ) -> Result<()> {
        if grads.len() != params.len() {
            return Err(Error::Contract(format!(
                "{} gradients for {} parameters",
                grads.len(),
                params.len()
            )));
        }
        for (name, (p, g)) in params
            .names()
            .iter()
            .zip(params.tensors().iter().zip(grads))
        {
            let Some(g) = g else { continue };
            if p.shape() != g.shape() {
                return Err(Error::dim("adam_step", g.shape(), p.shape()));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient of `{name}`")));
            }
        }
        self.step += 1;
        let AdamConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.cfg;
        let bc1 = 1.0 - libm::pow(beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(beta2, self.step as f64);
        for (k, p) in params.tensors_mut().iter_mut().enumerate() {
            let Some(g) = &grads[k] else { continue };
            let g = g.data();
            let m = self.m[k].data_mut();
            let v = self.v[k].data_mut();
            for (i, theta) in p.data_mut().iter_mut().enumerate() {
                let gi = g[i] + weight_decay * *theta;
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                *theta -= lr * mh / (libm::sqrt(vh) + eps);
            }
        }
        Ok(())
    }
}
