use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::field_sim::Normalization;
use crate::numnet::DenseNet;

/// Mean over samples of each sample's mean absolute pixel error. Inputs are
/// `(samples, pixels)` in physical units.
pub fn mae(predictions: ArrayView2<'_, f64>, truths: ArrayView2<'_, f64>) -> Result<f64> {
    if predictions.dim() != truths.dim() {
        return Err(Error::shape("prediction set", truths.len(), predictions.len()));
    }
    let (n, p) = predictions.dim();
    if n == 0 || p == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    let mut total = 0.0;
    for (pr, tr) in predictions.rows().into_iter().zip(truths.rows()) {
        let sample: f64 = pr.iter().zip(tr.iter()).map(|(a, b)| (a - b).abs()).sum();
        total += sample / p as f64;
    }
    Ok(total / n as f64)
}

/// MAE of `net` in physical units, given normalized inputs and targets.
pub fn model_mae(
    net: &DenseNet,
    inputs: ArrayView2<'_, f64>,
    normalized_truth: ArrayView2<'_, f64>,
    norm: Normalization,
) -> Result<f64> {
    let pred = net.forward_batch(inputs)?;
    normalized_mae(pred.view(), normalized_truth, norm)
}

/// MAE in physical units of two normalized arrays.
pub fn normalized_mae(pred: ArrayView2<'_, f64>, truth: ArrayView2<'_, f64>, norm: Normalization) -> Result<f64> {
    let p = pred.mapv(|v| norm.denormalize(v));
    let t = truth.mapv(|v| norm.denormalize(v));
    mae(p.view(), t.view())
}
