//! Ensemble pseudo-labels, their per-pixel uncertainty, and the derived loss
//! weights.
//!
//! The pseudo-label is the per-pixel mean of the teachers' predictions and the
//! uncertainty is the population variance (divided by `n`). Weights are
//! `1 - minmax(U)` computed per sample over its pixels.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::field_sim::Grid;
use crate::numnet::DenseNet;

pub const PSEUDO_MAGIC: &[u8; 4] = b"FSPL";
const VERSION: u32 = 1;

/// One row per unlabeled sample, in the unlabeled split's order. All values
/// are in normalized units.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoLabelSet {
    pub labels: Array2<f64>,
    pub uncertainty: Array2<f64>,
    pub weights: Array2<f64>,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.labels.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.nrows() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.labels.dim();
        if self.uncertainty.dim() != dim || self.weights.dim() != dim {
            return Err(Error::shape("pseudo-label arrays", self.labels.len(), self.weights.len()));
        }
        if self.uncertainty.iter().any(|&u| u.is_nan() || u < 0.0) {
            return Err(Error::invalid("uncertainty must be non-negative"));
        }
        if self.weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::invalid("weights must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Per-pixel mean and population variance over the teachers' predictions.
///
/// Uses Welford updates, so identical teacher outputs give a mean equal to
/// that output and a variance of exactly zero.
pub fn ensemble_statistics(teachers: &[DenseNet], inputs: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let first = teachers.first().ok_or(Error::Empty("teacher ensemble"))?;
    let out_dim = first.output_dim();
    let mut mean = Array2::<f64>::zeros((inputs.nrows(), out_dim));
    let mut m2 = Array2::<f64>::zeros((inputs.nrows(), out_dim));
    for (k, teacher) in teachers.iter().enumerate() {
        if teacher.output_dim() != out_dim {
            return Err(Error::shape("teacher output", out_dim, teacher.output_dim()));
        }
        let pred = teacher.forward_batch(inputs)?;
        let count = (k + 1) as f64;
        Zip::from(&mut mean).and(&mut m2).and(&pred).for_each(|m, s, &x| {
            let delta = x - *m;
            *m += delta / count;
            *s += delta * (x - *m);
        });
    }
    let n = teachers.len() as f64;
    m2.mapv_inplace(|s| (s / n).max(0.0));
    Ok((mean, m2))
}

/// `W = 1 - (U - min U) / (max U - min U)` over one sample's pixels; a
/// constant map gives `W = 1` everywhere.
pub fn uncertainty_weights(uncertainty: &[f64]) -> Vec<f64> {
    let (lo, hi) = uncertainty
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| (lo.min(u), hi.max(u)));
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return vec![1.0; uncertainty.len()];
    }
    uncertainty.iter().map(|&u| 1.0 - (u - lo) / range).collect()
}

pub fn pseudo_label(teachers: &[DenseNet], unlabeled: ArrayView2<'_, f64>) -> Result<PseudoLabelSet> {
    let (labels, uncertainty) = ensemble_statistics(teachers, unlabeled)?;
    let mut weights = Array2::<f64>::zeros(uncertainty.raw_dim());
    for (u, mut w) in uncertainty.rows().into_iter().zip(weights.rows_mut()) {
        let row = uncertainty_weights(u.as_slice().expect("standard layout"));
        w.as_slice_mut().expect("standard layout").copy_from_slice(&row);
    }
    Ok(PseudoLabelSet {
        labels,
        uncertainty,
        weights,
    })
}

/// `FSPL` file: magic, version u32, H u32, W u32, count u32, then per sample
/// `index u64 | labels f64*HW | uncertainty f64*HW | weights f64*HW`, LE.
pub fn write_pseudo_labels<W: Write>(set: &PseudoLabelSet, grid: Grid, mut w: W) -> Result<()> {
    set.validate()?;
    if set.labels.ncols() != grid.cells() {
        return Err(Error::shape("pseudo-label width", grid.cells(), set.labels.ncols()));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(PSEUDO_MAGIC);
    for v in [VERSION, grid.rows as u32, grid.cols as u32, set.len() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    for i in 0..set.len() {
        buf.clear();
        buf.extend_from_slice(&(i as u64).to_le_bytes());
        for arr in [&set.labels, &set.uncertainty, &set.weights] {
            for v in arr.row(i) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_pseudo_labels<R: Read>(mut r: R) -> Result<(PseudoLabelSet, Grid)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[0..4] != PSEUDO_MAGIC {
        return Err(Error::Format("not an FSPL pseudo-label file".into()));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    if u32_at(4) != VERSION as usize {
        return Err(Error::Format(format!("unsupported pseudo-label version {}", u32_at(4))));
    }
    let grid = Grid::new(u32_at(8), u32_at(12));
    let count = u32_at(16);
    let cells = grid.cells();
    let record = 8 + 3 * 8 * cells;
    if bytes.len() != 20 + count * record {
        return Err(Error::Format("pseudo-label file length disagrees with header".into()));
    }
    let mut arrays = [
        Array2::<f64>::zeros((count, cells)),
        Array2::<f64>::zeros((count, cells)),
        Array2::<f64>::zeros((count, cells)),
    ];
    for i in 0..count {
        let base = 20 + i * record;
        let index = u64::from_le_bytes(bytes[base..base + 8].try_into().unwrap());
        if index != i as u64 {
            return Err(Error::Format(format!("pseudo-label record {i} carries index {index}")));
        }
        for (a, arr) in arrays.iter_mut().enumerate() {
            let off = base + 8 + a * 8 * cells;
            for (j, c) in bytes[off..off + 8 * cells].chunks_exact(8).enumerate() {
                arr[[i, j]] = f64::from_le_bytes(c.try_into().unwrap());
            }
        }
    }
    let [labels, uncertainty, weights] = arrays;
    let set = PseudoLabelSet {
        labels,
        uncertainty,
        weights,
    };
    set.validate()?;
    Ok((set, grid))
}

pub fn save_pseudo_labels(set: &PseudoLabelSet, grid: Grid, path: impl AsRef<Path>) -> Result<()> {
    let mut bytes = Vec::new();
    write_pseudo_labels(set, grid, &mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_pseudo_labels(path: impl AsRef<Path>) -> Result<(PseudoLabelSet, Grid)> {
    read_pseudo_labels(fs::read(path)?.as_slice())
}
