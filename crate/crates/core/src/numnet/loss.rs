//! Pixel-mean L1 losses with subgradients. `sign(0)` is taken as 0.

use crate::error::{Error, Result};

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Writes `d loss / d pred` into `grad` and returns the loss value
/// `(1/n) * sum_i w_i * |target_i - pred_i|`. With `weights == None` every
/// weight is taken as exactly 1.
pub fn weighted_l1_into(pred: &[f64], target: &[f64], weights: Option<&[f64]>, grad: &mut [f64]) -> Result<f64> {
    let n = pred.len();
    if target.len() != n {
        return Err(Error::shape("loss target", n, target.len()));
    }
    if grad.len() != n {
        return Err(Error::shape("loss gradient buffer", n, grad.len()));
    }
    if n == 0 {
        return Err(Error::Empty("loss input"));
    }
    let inv = 1.0 / n as f64;
    let mut sum = 0.0;
    match weights {
        None => {
            for i in 0..n {
                let d = target[i] - pred[i];
                sum += d.abs();
                grad[i] = -sign(d) * inv;
            }
        }
        Some(w) => {
            if w.len() != n {
                return Err(Error::shape("loss weights", n, w.len()));
            }
            if let Some(bad) = w.iter().find(|&&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::invalid(format!("loss weight {bad} outside [0, 1]")));
            }
            for i in 0..n {
                let d = target[i] - pred[i];
                sum += w[i] * d.abs();
                grad[i] = -(w[i] * sign(d)) * inv;
            }
        }
    }
    Ok(sum * inv)
}

/// Mean absolute error of one flattened field and its gradient wrt `pred`.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; pred.len()];
    let value = weighted_l1_into(pred, target, None, &mut grad)?;
    Ok((value, grad))
}

/// Per-pixel weighted L1; weights must lie in `[0, 1]`.
pub fn weighted_l1_loss(pred: &[f64], target: &[f64], weights: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; pred.len()];
    let value = weighted_l1_into(pred, target, Some(weights), &mut grad)?;
    Ok((value, grad))
}
