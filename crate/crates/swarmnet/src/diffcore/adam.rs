//! Adam optimizer state and update rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub epsilon: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f32>,
    v: Vec<f32>,
    step: u64,
}

impl AdamState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        AdamState {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update applied in place to `params`.
///
/// A non-finite gradient component aborts without touching any state, so a
/// poisoned batch cannot corrupt the moments.
pub fn adam_step(state: &mut AdamState, params: &mut [f32], grads: &[f32]) -> Result<()> {
    assert_eq!(params.len(), state.m.len(), "parameter count changed under optimizer");
    assert_eq!(params.len(), grads.len(), "gradient length mismatch");
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::PoisonedGradient { step: state.step });
    }
    state.step += 1;
    let c = state.config;
    let t = state.step as f64;
    let bc1 = 1.0 - (c.beta1 as f64).powf(t);
    let bc2 = 1.0 - (c.beta2 as f64).powf(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        let m_hat = state.m[i] as f64 / bc1;
        let v_hat = state.v[i] as f64 / bc2;
        params[i] -= (c.learning_rate as f64 * m_hat / (v_hat.sqrt() + c.epsilon as f64)) as f32;
    }
    Ok(())
}
