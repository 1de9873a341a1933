//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use crate::autodiff::Gradient;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::config("learning rate must be finite and nonnegative"));
        }
        if !(0.0 < self.beta1 && self.beta1 < 1.0 && 0.0 < self.beta2 && self.beta2 < 1.0) {
            return Err(Error::config("Adam betas must lie in (0, 1)"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::config("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
}

impl AdamState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self { config, step: 0, m1: vec![0.0; num_params], m2: vec![0.0; num_params] }
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut [f64], grad: &Gradient) -> Result<()> {
        let n = self.m1.len();
        if params.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: params.len() });
        }
        if grad.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: grad.len() });
        }
        grad.check_finite()?;

        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powf(self.step as f64);
        let c2 = 1.0 - beta2.powf(self.step as f64);
        for (((theta, &g), m), v) in
            params.iter_mut().zip(grad.as_slice()).zip(&mut self.m1).zip(&mut self.m2)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        if params.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("parameter update"))
        }
    }
}
