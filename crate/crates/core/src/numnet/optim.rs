//! AdamW with bias-corrected moments and decoupled weight decay.
//!
//! ```text
//! p <- p * (1 - lr * wd)
//! m <- b1 * m + (1 - b1) * g
//! v <- b2 * v + (1 - b2) * g^2
//! p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
//! ```

use serde::{Deserialize, Serialize};

use super::net::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimState {
    step: u64,
    config: AdamWConfig,
    first_moment: Gradients,
    second_moment: Gradients,
}

impl OptimState {
    pub fn new(net: &DenseNet, config: AdamWConfig) -> Self {
        OptimState {
            step: 0,
            config,
            first_moment: Gradients::zeros_like(net),
            second_moment: Gradients::zeros_like(net),
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.config
    }
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn update_slice(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], c: &AdamWConfig, lr: f64, bc1: f64, bc2: f64) {
    let decay = 1.0 - lr * c.weight_decay;
    for i in 0..p.len() {
        let gi = g[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        p[i] = p[i] * decay - lr * m_hat / (v_hat.sqrt() + c.eps);
    }
}

/// Applies one AdamW update in place. A non-finite gradient leaves both the
/// network and the optimizer state untouched.
pub fn adamw_step(net: &mut DenseNet, grads: &Gradients, state: &mut OptimState, lr: f64) -> Result<()> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::invalid(format!("learning rate {lr} must be finite and non-negative")));
    }
    let layers = net.layers().len();
    if grads.weights.len() != layers || grads.biases.len() != layers {
        return Err(Error::shape("gradient layer count", layers, grads.weights.len()));
    }
    if state.first_moment.weights.len() != layers {
        return Err(Error::shape("optimizer layer count", layers, state.first_moment.weights.len()));
    }
    for (l, layer) in net.layers().iter().enumerate() {
        if grads.weights[l].dim() != layer.weights.dim() || state.first_moment.weights[l].dim() != layer.weights.dim() {
            return Err(Error::shape("weight gradient", layer.weights.len(), grads.weights[l].len()));
        }
        if grads.biases[l].len() != layer.biases.len() || state.first_moment.biases[l].len() != layer.biases.len() {
            return Err(Error::shape("bias gradient", layer.biases.len(), grads.biases[l].len()));
        }
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradient"));
    }

    state.step += 1;
    let t = state.step as i32;
    let c = state.config;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    let OptimState {
        first_moment: m,
        second_moment: v,
        ..
    } = state;
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        update_slice(
            layer.weights.as_slice_mut().expect("standard layout"),
            grads.weights[l].as_slice().expect("standard layout"),
            m.weights[l].as_slice_mut().expect("standard layout"),
            v.weights[l].as_slice_mut().expect("standard layout"),
            &c,
            lr,
            bc1,
            bc2,
        );
        update_slice(
            layer.biases.as_slice_mut().expect("standard layout"),
            grads.biases[l].as_slice().expect("standard layout"),
            m.biases[l].as_slice_mut().expect("standard layout"),
            v.biases[l].as_slice_mut().expect("standard layout"),
            &c,
            lr,
            bc1,
            bc2,
        );
    }
    Ok(())
}
