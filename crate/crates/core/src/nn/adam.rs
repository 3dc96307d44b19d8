use serde::{Deserialize, Serialize};

use super::network::Parameters;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters they track.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Parameters,
    pub v: Parameters,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(like: &Parameters, config: AdamConfig) -> Self {
        let mut zeros = like.clone();
        zeros.values_mut().for_each(|x| *x = 0.0);
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
            config,
        }
    }
}

fn same_shape(a: &Parameters, b: &Parameters) -> bool {
    a.layers.len() == b.layers.len()
        && a.layers
            .iter()
            .zip(&b.layers)
            .all(|(x, y)| x.weights.dim() == y.weights.dim() && x.bias.len() == y.bias.len())
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut Parameters,
    grads: &Parameters,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !same_shape(params, grads) || !same_shape(params, &state.m) {
        return Err(Error::Shape(
            "parameters, gradients and Adam state disagree in shape".into(),
        ));
    }
    state.t += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    let moments = state.m.values_mut().zip(state.v.values_mut());
    for ((p, &g), (m, v)) in params.values_mut().zip(grads.values()).zip(moments) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}
