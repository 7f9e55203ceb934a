use super::params::{Gradients, ParamStore};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every parameter.
pub fn adam_step(params: &mut ParamStore, grads: &Gradients, cfg: &AdamConfig) -> Result<()> {
    let (values, m, v, step) = params.optimizer_state();
    if grads.values.len() != values.len() {
        return Err(Error::DimMismatch(
            "gradient buffer differs from the parameters",
        ));
    }
    *step += 1;
    let t = *step as f64;
    let c1 = 1.0 - libm::pow(cfg.beta1, t);
    let c2 = 1.0 - libm::pow(cfg.beta2, t);
    for i in 0..values.len() {
        let g = grads.values[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        if m[i] == 0.0 {
            continue;
        }
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        values[i] -= cfg.lr * m_hat / (libm::sqrt(v_hat) + cfg.eps);
    }
    Ok(())
}
