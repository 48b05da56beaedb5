use std::collections::HashMap;

use ndarray::Array2;
use rayon::prelude::*;

use super::metrics::{model_mae, normalized_mae};
use super::protocol::labeled_subset_indices;
use crate::error::{Error, Result};
use crate::field_sim::{Dataset, LabeledSet, UnlabeledSet};
use crate::numnet::DenseNet;
use crate::ssl::{
    finetune_student, pretrain_student, pseudo_label, train_member, train_student_on_union, train_supervised,
    PseudoLabelSet, TrainConfig,
};

/// Shared state for every arm evaluated at one `(budget, seed)`.
///
/// Teacher `k` depends only on the labeled subset and `(seed, k)`, so the
/// teachers trained for an ensemble of size `n` are reused by every smaller
/// ensemble. Pre-trained students are cached per `(n, use_uncertainty)`.
pub struct SeedSession<'a> {
    dataset: &'a Dataset,
    config: TrainConfig,
    labeled: LabeledSet,
    unlabeled: UnlabeledSet,
    test: LabeledSet,
    teachers: Vec<DenseNet>,
    pretrained: HashMap<(usize, bool), DenseNet>,
}

impl<'a> SeedSession<'a> {
    /// `config.seed` selects both the labeled subset and all model seeds.
    pub fn new(dataset: &'a Dataset, budget: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let indices = labeled_subset_indices(dataset.labeled.len(), budget, config.seed)?;
        Ok(SeedSession {
            dataset,
            config: config.clone(),
            labeled: dataset.labeled_subset(&indices)?,
            unlabeled: dataset.unlabeled_set(),
            test: dataset.test_set(),
            teachers: Vec::new(),
            pretrained: HashMap::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn labeled(&self) -> &LabeledSet {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &UnlabeledSet {
        &self.unlabeled
    }

    /// The first `n` ensemble members, training any that are missing.
    pub fn teachers(&mut self, n: usize) -> Result<&[DenseNet]> {
        if n == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        let have = self.teachers.len();
        if have < n {
            let labeled = &self.labeled;
            let config = &self.config;
            let missing: Vec<DenseNet> = if config.jobs > 1 && n - have > 1 {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(config.jobs)
                    .build()
                    .map_err(|e| Error::invalid(e.to_string()))?;
                pool.install(|| (have..n).into_par_iter().map(|k| train_member(labeled, config, k)).collect::<Result<Vec<_>>>())?
            } else {
                (have..n).map(|k| train_member(labeled, config, k)).collect::<Result<_>>()?
            };
            self.teachers.extend(missing);
        }
        Ok(&self.teachers[..n])
    }

    pub fn pseudo(&mut self, n: usize) -> Result<PseudoLabelSet> {
        self.teachers(n)?;
        pseudo_label(&self.teachers[..n], self.unlabeled.inputs.view())
    }

    /// MAE of the `n`-teacher pseudo-labels against the hidden unlabeled fields.
    pub fn pseudo_label_mae(&mut self, n: usize) -> Result<f64> {
        let pseudo = self.pseudo(n)?;
        let truth: Array2<f64> = self.dataset.unlabeled_truth();
        normalized_mae(pseudo.labels.view(), truth.view(), self.dataset.normalization)
    }

    /// Student pre-trained on `n`-teacher pseudo-labels, with or without
    /// uncertainty weights.
    pub fn pretrained(&mut self, n: usize, use_uncertainty: bool) -> Result<&DenseNet> {
        if !self.pretrained.contains_key(&(n, use_uncertainty)) {
            let pseudo = self.pseudo(n)?;
            let config = TrainConfig {
                ensemble_size: n,
                use_uncertainty,
                ..self.config.clone()
            };
            let (net, _) = pretrain_student(&pseudo, &self.unlabeled, &config)?;
            self.pretrained.insert((n, use_uncertainty), net);
        }
        Ok(&self.pretrained[&(n, use_uncertainty)])
    }

    /// The pre-trained student after fine-tuning on the labeled subset.
    pub fn finetuned(&mut self, n: usize, use_uncertainty: bool) -> Result<DenseNet> {
        let pre = self.pretrained(n, use_uncertainty)?.clone();
        let (net, _) = finetune_student(pre, &self.labeled, &self.config)?;
        Ok(net)
    }

    pub fn supervised(&self) -> Result<DenseNet> {
        train_supervised(&self.labeled, &self.config)
    }

    /// Vanilla self-training with ensemble member 0 as the teacher.
    pub fn self_training(&mut self) -> Result<DenseNet> {
        self.teachers(1)?;
        let targets = self.teachers[0].forward_batch(self.unlabeled.inputs.view())?;
        let (net, _) =
            train_student_on_union(&self.labeled, self.unlabeled.inputs.view(), targets.view(), None, &self.config)?;
        Ok(net)
    }

    /// Test-split MAE in physical units.
    pub fn test_mae(&self, net: &DenseNet) -> Result<f64> {
        model_mae(
            net,
            self.test.inputs.view(),
            self.test.targets.view(),
            self.dataset.normalization,
        )
    }
}
