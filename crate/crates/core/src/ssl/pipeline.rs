use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Method, TrainConfig};
use super::pseudo::{pseudo_label, save_pseudo_labels, PseudoLabelSet};
use super::trainer::{fit, fit_joint, Objective, TrainReport};
use crate::error::{Error, Result};
use crate::field_sim::{Grid, LabeledSet, UnlabeledSet};
use crate::numnet::{save_checkpoint, DenseNet};
use crate::rng;
use ndarray::ArrayView2;

/// `[input, hidden..., output]`.
pub fn layer_sizes_for(input_dim: usize, output_dim: usize, config: &TrainConfig) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(config.hidden.len() + 2);
    sizes.push(input_dim);
    sizes.extend_from_slice(&config.hidden);
    sizes.push(output_dim);
    sizes
}

/// Seed of ensemble member `k`; a pure function of `(seed, k)`.
pub fn member_seed(seed: u64, k: usize) -> u64 {
    rng::derive(seed, rng::stream::MEMBER, k as u64)
}

fn student_seed(seed: u64) -> u64 {
    rng::derive(seed, rng::stream::STUDENT, 0)
}

fn fresh_net(input_dim: usize, output_dim: usize, config: &TrainConfig, seed: u64) -> Result<DenseNet> {
    DenseNet::new(&layer_sizes_for(input_dim, output_dim, config), config.activation, seed)
}

fn labeled_objective(labeled: &LabeledSet) -> Result<Objective<'_>> {
    Objective::new(labeled.inputs.view(), labeled.targets.view(), None)
}

/// L1 regression on the labeled set from a fresh initialization.
pub fn train_supervised(labeled: &LabeledSet, config: &TrainConfig) -> Result<DenseNet> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    let mut net = fresh_net(labeled.inputs.ncols(), labeled.targets.ncols(), config, config.seed)?;
    let mut rng = rng::rng_for(config.seed, rng::stream::SHUFFLE, 0);
    fit(&mut net, labeled_objective(labeled)?, config, &mut rng)?;
    Ok(net)
}

/// Ensemble member `k`: a supervised model with seed `member_seed(config.seed, k)`.
pub fn train_member(labeled: &LabeledSet, config: &TrainConfig, k: usize) -> Result<DenseNet> {
    train_supervised(labeled, &config.with_seed(member_seed(config.seed, k)))
}

/// `n` supervised teachers; member `k` is trained with seed
/// [`member_seed(config.seed, k)`](member_seed) on the full labeled set.
/// Up to `config.jobs` members train concurrently; the result does not
/// depend on the degree of concurrency.
pub fn train_ensemble_teachers(labeled: &LabeledSet, config: &TrainConfig) -> Result<Vec<DenseNet>> {
    config.validate()?;
    let train_member = |k: usize| train_member(labeled, config, k);
    if config.jobs <= 1 || config.ensemble_size == 1 {
        return (0..config.ensemble_size).map(train_member).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| (0..config.ensemble_size).into_par_iter().map(train_member).collect())
}

/// Trains a fresh student on pseudo-labels only. With `use_uncertainty` the
/// per-pixel weights of `pseudo` scale the L1 loss; otherwise every pixel
/// counts fully.
pub fn pretrain_student(
    pseudo: &PseudoLabelSet,
    unlabeled: &UnlabeledSet,
    config: &TrainConfig,
) -> Result<(DenseNet, TrainReport)> {
    config.validate()?;
    if pseudo.is_empty() {
        return Err(Error::Empty("pseudo-label set"));
    }
    pseudo.validate()?;
    let weights = config.use_uncertainty.then(|| pseudo.weights.view());
    let obj = Objective::new(unlabeled.inputs.view(), pseudo.labels.view(), weights)?;
    let seed = student_seed(config.seed);
    let mut net = fresh_net(unlabeled.inputs.ncols(), pseudo.labels.ncols(), config, seed)?;
    let mut rng = rng::rng_for(seed, rng::stream::SHUFFLE, 0);
    let report = fit(&mut net, obj, config, &mut rng)?;
    Ok((net, report))
}

/// Continues training `student` on labeled data alone with plain L1. The
/// schedule and optimizer moments start afresh.
pub fn finetune_student(student: DenseNet, labeled: &LabeledSet, config: &TrainConfig) -> Result<(DenseNet, TrainReport)> {
    config.validate()?;
    if labeled.is_empty() {
        return Err(Error::Empty("labeled set"));
    }
    let mut net = student;
    let mut rng = rng::rng_for(config.seed, rng::stream::FINETUNE, 0);
    let report = fit(&mut net, labeled_objective(labeled)?, config, &mut rng)?;
    Ok((net, report))
}

/// Fresh student trained jointly on labeled pairs and `(unlabeled, targets)`
/// pairs, with optional per-pixel weights on the latter.
pub fn train_student_on_union(
    labeled: &LabeledSet,
    unlabeled_inputs: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    weights: Option<ArrayView2<'_, f64>>,
    config: &TrainConfig,
) -> Result<(DenseNet, TrainReport)> {
    config.validate()?;
    let pseudo = Objective::new(unlabeled_inputs, targets, weights)?;
    let seed = student_seed(config.seed);
    let mut net = fresh_net(labeled.inputs.ncols(), labeled.targets.ncols(), config, seed)?;
    let mut rng = rng::rng_for(seed, rng::stream::SHUFFLE, 0);
    let report = fit_joint(&mut net, labeled_objective(labeled)?, pseudo, config, &mut rng)?;
    Ok((net, report))
}

/// Vanilla self-training: one supervised teacher (ensemble member 0)
/// pseudo-labels the unlabeled set and a fresh student trains on the union.
pub fn train_self_training(labeled: &LabeledSet, unlabeled: &UnlabeledSet, config: &TrainConfig) -> Result<DenseNet> {
    if unlabeled.is_empty() {
        return train_supervised(labeled, config);
    }
    let teacher = train_member(labeled, config, 0)?;
    let pseudo = teacher.forward_batch(unlabeled.inputs.view())?;
    let (student, _) = train_student_on_union(labeled, unlabeled.inputs.view(), pseudo.view(), None, config)?;
    Ok(student)
}

/// Everything produced by one ensemble self-training run.
#[derive(Clone, Debug)]
pub struct UgeStOutcome {
    pub teachers: Vec<DenseNet>,
    pub pseudo: PseudoLabelSet,
    /// Student after pseudo-label pre-training; absent when the student was
    /// trained jointly instead.
    pub pretrained: Option<DenseNet>,
    pub student: DenseNet,
}

impl UgeStOutcome {
    /// Writes `teachers/member_k.fsnn`, `pseudo/labels.fsrd-pl`,
    /// `student_pretrained.fsnn`, `student_final.fsnn` and `config.json`.
    pub fn save_artifacts(&self, dir: impl AsRef<Path>, grid: Grid, config: &TrainConfig) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir.join("teachers"))?;
        fs::create_dir_all(dir.join("pseudo"))?;
        let mut written = Vec::new();
        for (k, t) in self.teachers.iter().enumerate() {
            let p = dir.join("teachers").join(format!("member_{k}.fsnn"));
            save_checkpoint(t, &p)?;
            written.push(p);
        }
        let p = dir.join("pseudo").join("labels.fsrd-pl");
        save_pseudo_labels(&self.pseudo, grid, &p)?;
        written.push(p);
        if let Some(pre) = &self.pretrained {
            let p = dir.join("student_pretrained.fsnn");
            save_checkpoint(pre, &p)?;
            written.push(p);
        }
        let p = dir.join("student_final.fsnn");
        save_checkpoint(&self.student, &p)?;
        written.push(p);
        let p = dir.join("config.json");
        fs::write(&p, serde_json::to_string_pretty(config)?)?;
        written.push(p);
        Ok(written)
    }
}

/// Ensemble teachers, then pseudo-labels with uncertainty weights, then either
/// pre-training plus labeled fine-tuning or joint training of the student.
pub fn run_uge_st(labeled: &LabeledSet, unlabeled: &UnlabeledSet, config: &TrainConfig) -> Result<UgeStOutcome> {
    config.validate()?;
    if unlabeled.is_empty() {
        return Err(Error::Empty("unlabeled set"));
    }
    let teachers = train_ensemble_teachers(labeled, config)?;
    let pseudo = pseudo_label(&teachers, unlabeled.inputs.view())?;
    let (pretrained, student) = if config.use_pretrain_finetune {
        let (pre, _) = pretrain_student(&pseudo, unlabeled, config)?;
        let (fin, _) = finetune_student(pre.clone(), labeled, config)?;
        (Some(pre), fin)
    } else {
        let weights = config.use_uncertainty.then(|| pseudo.weights.view());
        let (s, _) = train_student_on_union(labeled, unlabeled.inputs.view(), pseudo.labels.view(), weights, config)?;
        (None, s)
    };
    Ok(UgeStOutcome {
        teachers,
        pseudo,
        pretrained,
        student,
    })
}

/// Trains the final model of `method`.
pub fn train(method: Method, labeled: &LabeledSet, unlabeled: &UnlabeledSet, config: &TrainConfig) -> Result<DenseNet> {
    match method {
        Method::Supervised => train_supervised(labeled, config),
        Method::SelfTraining => train_self_training(labeled, unlabeled, config),
        Method::UgeSt => Ok(run_uge_st(labeled, unlabeled, config)?.student),
    }
}
