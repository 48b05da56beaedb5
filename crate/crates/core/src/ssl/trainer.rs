//! Mini-batch loops shared by every regime.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::numnet::{adamw_step, weighted_l1_into, DenseNet, OptimState};

/// Regression targets for a set of inputs, optionally with per-pixel weights.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Objective<'a> {
    pub inputs: ArrayView2<'a, f64>,
    pub targets: ArrayView2<'a, f64>,
    pub weights: Option<ArrayView2<'a, f64>>,
}

impl<'a> Objective<'a> {
    pub fn new(
        inputs: ArrayView2<'a, f64>,
        targets: ArrayView2<'a, f64>,
        weights: Option<ArrayView2<'a, f64>>,
    ) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::shape("target rows", inputs.nrows(), targets.nrows()));
        }
        if let Some(w) = weights {
            if w.dim() != targets.dim() {
                return Err(Error::shape("weight map", targets.len(), w.len()));
            }
        }
        Ok(Objective {
            inputs,
            targets,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean per-step loss of every epoch, in order.
    pub epoch_losses: Vec<f64>,
}

/// Mean (weighted) L1 of `net` over a whole set of rows.
pub fn objective_loss(
    net: &DenseNet,
    inputs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    weights: Option<ArrayView2<'_, f64>>,
) -> Result<f64> {
    let obj = Objective::new(inputs, targets, weights)?;
    if obj.len() == 0 {
        return Err(Error::Empty("loss rows"));
    }
    let pred = net.forward_batch(obj.inputs)?;
    let mut grad = vec![0.0; pred.ncols()];
    let mut total = 0.0;
    for r in 0..pred.nrows() {
        let w = obj.weights.map(|w| w.row(r).to_vec());
        total += weighted_l1_into(
            pred.row(r).contiguous(),
            &obj.targets.row(r).to_vec(),
            w.as_deref(),
            &mut grad,
        )?;
    }
    Ok(total / pred.nrows() as f64)
}

trait RowSlice {
    fn contiguous(&self) -> &[f64];
}

impl RowSlice for ndarray::ArrayView1<'_, f64> {
    fn contiguous(&self) -> &[f64] {
        self.as_slice().expect("rows of standard-layout matrices are contiguous")
    }
}

/// Consecutive rows of a step batch whose mean loss enters the step
/// objective with unit weight.
struct Segment {
    len: usize,
    targets: Array2<f64>,
    weights: Option<Array2<f64>>,
}

fn gather(obj: &Objective<'_>, idx: &[usize]) -> (Array2<f64>, Segment) {
    (
        obj.inputs.select(Axis(0), idx),
        Segment {
            len: idx.len(),
            targets: obj.targets.select(Axis(0), idx),
            weights: obj.weights.map(|w| w.select(Axis(0), idx)),
        },
    )
}

/// Runs forward/backward on the stacked batch and applies one AdamW update.
/// Returns the step objective: the sum over segments of each segment's mean loss.
fn step(net: &mut DenseNet, state: &mut OptimState, lr: f64, inputs: Array2<f64>, segments: &[Segment]) -> Result<f64> {
    let cache = net.forward_cached(inputs.view())?;
    let out = cache.output();
    let mut upstream = Array2::<f64>::zeros(out.raw_dim());
    let mut loss = 0.0;
    let mut row = 0;
    for seg in segments {
        let inv = 1.0 / seg.len as f64;
        let mut seg_loss = 0.0;
        for r in 0..seg.len {
            let w = seg.weights.as_ref().map(|w| w.row(r));
            let mut g = upstream.row_mut(row + r);
            let g = g.as_slice_mut().expect("standard layout");
            seg_loss += weighted_l1_into(
                out.row(row + r).contiguous(),
                seg.targets.row(r).contiguous(),
                w.as_ref().map(|w| w.contiguous()),
                g,
            )?;
            g.iter_mut().for_each(|v| *v *= inv);
        }
        loss += seg_loss * inv;
        row += seg.len;
    }
    let grads = net.backward_cached(&cache, upstream.view())?;
    adamw_step(net, &grads, state, lr)?;
    Ok(loss)
}

/// Plain mini-batch training on a single objective, reshuffled every epoch.
pub(crate) fn fit(
    net: &mut DenseNet,
    obj: Objective<'_>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    if obj.len() == 0 {
        return Err(Error::Empty("training set"));
    }
    let mut state = OptimState::new(net, config.optimizer);
    let batch = config.batch_size;
    let steps = obj.len().div_ceil(batch);
    let mut order: Vec<usize> = (0..obj.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for (s, idx) in order.chunks(batch).enumerate() {
            let lr = config.schedule.lr_at(epoch as f64 + s as f64 / steps as f64);
            let (inputs, seg) = gather(&obj, idx);
            total += step(net, &mut state, lr, inputs, std::slice::from_ref(&seg))?;
        }
        report.epoch_losses.push(total / steps as f64);
    }
    Ok(report)
}

/// Endless stream of shuffled index batches over `n` rows.
struct BatchStream {
    order: Vec<usize>,
    pos: usize,
}

impl BatchStream {
    fn new(n: usize) -> Self {
        BatchStream {
            order: (0..n).collect(),
            pos: n,
        }
    }

    fn next(&mut self, size: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let size = size.min(self.order.len());
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            let take = (size - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

/// Joint training on labeled and pseudo-labeled rows. An epoch is one pass
/// over the pseudo-labeled set; every step pairs an unlabeled batch with a
/// labeled batch of the same size drawn from a cycling shuffled stream, and
/// the step objective is the sum of the two batch means.
pub(crate) fn fit_joint(
    net: &mut DenseNet,
    labeled: Objective<'_>,
    pseudo: Objective<'_>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    if labeled.len() == 0 {
        return Err(Error::Empty("labeled set"));
    }
    if pseudo.len() == 0 {
        return Err(Error::Empty("pseudo-labeled set"));
    }
    let mut state = OptimState::new(net, config.optimizer);
    let batch = config.batch_size;
    let steps = pseudo.len().div_ceil(batch);
    let mut order: Vec<usize> = (0..pseudo.len()).collect();
    let mut labeled_stream = BatchStream::new(labeled.len());
    let mut report = TrainReport::default();
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        for (s, uidx) in order.chunks(batch).enumerate() {
            let lr = config.schedule.lr_at(epoch as f64 + s as f64 / steps as f64);
            let lidx = labeled_stream.next(uidx.len(), rng);
            let (lin, lseg) = gather(&labeled, &lidx);
            let (uin, useg) = gather(&pseudo, uidx);
            let inputs = concatenate(Axis(0), &[lin.view(), uin.view()]).expect("same input width");
            total += step(net, &mut state, lr, inputs, &[lseg, useg])?;
        }
        report.epoch_losses.push(total / steps as f64);
    }
    Ok(report)
}
