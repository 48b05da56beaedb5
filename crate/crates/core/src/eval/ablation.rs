//! Ablations over ensemble size, the pre-training student and uncertainty
//! weighting. Each seed gets one [`SeedSession`] so teachers are trained once
//! and shared by every arm.

use serde::{Deserialize, Serialize};

use super::session::SeedSession;
use super::Aggregate;
use crate::error::{Error, Result};
use crate::field_sim::Dataset;
use crate::ssl::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AblationSpec {
    /// Labeled samples per seed; `None` uses the whole labeled pool.
    pub budget: Option<usize>,
    pub seeds: Vec<u64>,
    pub aggregate: Aggregate,
    pub train: TrainConfig,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec {
            budget: None,
            seeds: vec![1, 2, 3],
            aggregate: Aggregate::Median,
            train: TrainConfig::default(),
        }
    }
}

impl AblationSpec {
    fn sessions<'a>(&self, dataset: &'a Dataset) -> Result<Vec<(u64, SeedSession<'a>)>> {
        dataset.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::invalid("ablation needs at least one seed"));
        }
        let budget = self.budget.unwrap_or(dataset.labeled.len());
        self.seeds
            .iter()
            .map(|&s| Ok((s, SeedSession::new(dataset, budget, &self.train.with_seed(s))?)))
            .collect()
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::invalid("ensemble sizes must be a non-empty list of positive integers"));
    }
    Ok(())
}

/// MAE of the three arms at one ensemble size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePoint {
    pub n: usize,
    pub pseudo_label: f64,
    pub pt_student: f64,
    pub uge_st: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAblation {
    pub sizes: Vec<usize>,
    pub per_seed: Vec<(u64, Vec<EnsemblePoint>)>,
    pub aggregate: Vec<EnsemblePoint>,
}

fn aggregate_points<T, F>(rows: &[Vec<T>], agg: Aggregate, build: F) -> Vec<T>
where
    F: Fn(usize, &dyn Fn(&dyn Fn(&T) -> f64) -> f64) -> T,
{
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|i| {
            let column = |field: &dyn Fn(&T) -> f64| {
                let vals: Vec<f64> = rows.iter().map(|r| field(&r[i])).collect();
                agg.apply(&vals).expect("at least one seed")
            };
            build(i, &column)
        })
        .collect()
}

/// Pseudo-label, PT-student and UGE-ST test MAE against ensemble size. The
/// student arms use the configured `use_uncertainty`.
pub fn ablate_ensemble(dataset: &Dataset, sizes: &[usize], spec: &AblationSpec) -> Result<EnsembleAblation> {
    check_sizes(sizes)?;
    let unc = spec.train.use_uncertainty;
    let mut per_seed = Vec::new();
    for (seed, mut session) in spec.sessions(dataset)? {
        let mut points = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let pseudo_label = session.pseudo_label_mae(n)?;
            let pt = session.pretrained(n, unc)?.clone();
            let pt_student = session.test_mae(&pt)?;
            let fin = session.finetuned(n, unc)?;
            let uge_st = session.test_mae(&fin)?;
            points.push(EnsemblePoint { n, pseudo_label, pt_student, uge_st });
        }
        per_seed.push((seed, points));
    }
    let rows: Vec<Vec<EnsemblePoint>> = per_seed.iter().map(|(_, p)| p.clone()).collect();
    let aggregate = aggregate_points(&rows, spec.aggregate, |i, col| EnsemblePoint {
        n: sizes[i],
        pseudo_label: col(&|p| p.pseudo_label),
        pt_student: col(&|p| p.pt_student),
        uge_st: col(&|p| p.uge_st),
    });
    Ok(EnsembleAblation { sizes: sizes.to_vec(), per_seed, aggregate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainArms {
    /// The single teacher's pseudo-labels scored on the unlabeled truth.
    pub pseudo_label: f64,
    pub self_training: f64,
    /// Student pre-trained on the single teacher's pseudo-labels, no weights.
    pub pt_student: f64,
    /// That student after labeled fine-tuning.
    pub uge_st: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PretrainAblation {
    pub per_seed: Vec<(u64, PretrainArms)>,
    pub aggregate: PretrainArms,
}

/// The four pre-training arms with one teacher.
pub fn ablate_pretrain(dataset: &Dataset, spec: &AblationSpec) -> Result<PretrainAblation> {
    let mut per_seed = Vec::new();
    for (seed, mut session) in spec.sessions(dataset)? {
        let pseudo_label = session.pseudo_label_mae(1)?;
        let st = session.self_training()?;
        let self_training = session.test_mae(&st)?;
        let pt = session.pretrained(1, false)?.clone();
        let pt_student = session.test_mae(&pt)?;
        let fin = session.finetuned(1, false)?;
        let uge_st = session.test_mae(&fin)?;
        per_seed.push((seed, PretrainArms { pseudo_label, self_training, pt_student, uge_st }));
    }
    let rows: Vec<Vec<PretrainArms>> = per_seed.iter().map(|(_, a)| vec![*a]).collect();
    let aggregate = aggregate_points(&rows, spec.aggregate, |_, col| PretrainArms {
        pseudo_label: col(&|a| a.pseudo_label),
        self_training: col(&|a| a.self_training),
        pt_student: col(&|a| a.pt_student),
        uge_st: col(&|a| a.uge_st),
    })
    .remove(0);
    Ok(PretrainAblation { per_seed, aggregate })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyArms {
    pub n: usize,
    pub pt_without: f64,
    pub pt_with: f64,
    pub uge_without: f64,
    pub uge_with: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyAblation {
    pub sizes: Vec<usize>,
    pub per_seed: Vec<(u64, Vec<UncertaintyArms>)>,
    pub aggregate: Vec<UncertaintyArms>,
}

/// PT-student and UGE-ST with and without uncertainty weights; the paired
/// runs share teachers, pseudo-labels and seeds.
pub fn ablate_uncertainty(dataset: &Dataset, sizes: &[usize], spec: &AblationSpec) -> Result<UncertaintyAblation> {
    check_sizes(sizes)?;
    let mut per_seed = Vec::new();
    for (seed, mut session) in spec.sessions(dataset)? {
        let mut arms = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let mut pt = [0.0; 2];
            let mut uge = [0.0; 2];
            for (i, unc) in [false, true].into_iter().enumerate() {
                let net = session.pretrained(n, unc)?.clone();
                pt[i] = session.test_mae(&net)?;
                let fin = session.finetuned(n, unc)?;
                uge[i] = session.test_mae(&fin)?;
            }
            arms.push(UncertaintyArms {
                n,
                pt_without: pt[0],
                pt_with: pt[1],
                uge_without: uge[0],
                uge_with: uge[1],
            });
        }
        per_seed.push((seed, arms));
    }
    let rows: Vec<Vec<UncertaintyArms>> = per_seed.iter().map(|(_, a)| a.clone()).collect();
    let aggregate = aggregate_points(&rows, spec.aggregate, |i, col| UncertaintyArms {
        n: sizes[i],
        pt_without: col(&|a| a.pt_without),
        pt_with: col(&|a| a.pt_with),
        uge_without: col(&|a| a.uge_without),
        uge_with: col(&|a| a.uge_with),
    });
    Ok(UncertaintyAblation { sizes: sizes.to_vec(), per_seed, aggregate })
}
