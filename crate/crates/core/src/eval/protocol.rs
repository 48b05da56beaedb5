//! Label-budget protocol: every method at every budget and seed, scored on
//! the test split.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sha256_json, Aggregate};
use crate::error::{Error, Result};
use crate::field_sim::Dataset;
use crate::rng;
use crate::ssl::{train, Method, TrainConfig};

use super::metrics::model_mae;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolSpec {
    /// Strictly increasing.
    pub label_budgets: Vec<usize>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub aggregate: Aggregate,
    /// Template for every run; `method` and `seed` are set per cell.
    pub train: TrainConfig,
}

impl Default for ProtocolSpec {
    fn default() -> Self {
        ProtocolSpec {
            label_budgets: vec![25, 50, 100, 200],
            methods: vec![Method::Supervised, Method::SelfTraining, Method::UgeSt],
            seeds: vec![0, 1, 2],
            aggregate: Aggregate::Median,
            train: TrainConfig::default(),
        }
    }
}

impl ProtocolSpec {
    pub fn validate(&self, labeled_pool: usize) -> Result<()> {
        if self.label_budgets.is_empty() || self.methods.is_empty() || self.seeds.is_empty() {
            return Err(Error::invalid("protocol needs at least one budget, method and seed"));
        }
        if self.label_budgets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("label budgets must be strictly increasing"));
        }
        if self.label_budgets[0] == 0 {
            return Err(Error::invalid("label budgets must be positive"));
        }
        if let Some(&max) = self.label_budgets.last() {
            if max > labeled_pool {
                return Err(Error::invalid(format!(
                    "label budget {max} exceeds the labeled pool of {labeled_pool}"
                )));
            }
        }
        self.train.validate()
    }
}

/// First `budget` entries of a seeded permutation of the labeled pool, so
/// the subsets for one seed are nested across budgets.
pub fn labeled_subset_indices(pool: usize, budget: usize, seed: u64) -> Result<Vec<usize>> {
    if budget == 0 || budget > pool {
        return Err(Error::invalid(format!("label budget {budget} not in 1..={pool}")));
    }
    let mut idx: Vec<usize> = (0..pool).collect();
    idx.shuffle(&mut rng::rng_for(seed, rng::stream::SUBSET, 0));
    idx.truncate(budget);
    Ok(idx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub mae: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub method: Method,
    pub budget: usize,
    pub runs: Vec<SeedResult>,
    /// Aggregate over the runs that succeeded.
    pub aggregate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub dataset_sha256: String,
    pub config_sha256: String,
    pub spec: ProtocolSpec,
    pub rows: Vec<CellRow>,
}

impl ResultTable {
    pub fn row(&self, method: Method, budget: usize) -> Option<&CellRow> {
        self.rows.iter().find(|r| r.method == method && r.budget == budget)
    }

    /// `method,budget,seed,mae`, one line per run. Failed runs have an
    /// empty `mae`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,budget,seed,mae\n");
        for row in &self.rows {
            for run in &row.runs {
                let mae = run.mae.map(|m| m.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{}", row.method, row.budget, run.seed, mae);
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `results.csv` and `summary.json` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("results.csv"), self.to_csv())?;
        fs::write(dir.join("summary.json"), self.to_json()?)?;
        Ok(())
    }
}

fn run_cell(dataset: &Dataset, spec: &ProtocolSpec, method: Method, budget: usize, seed: u64) -> Result<f64> {
    let indices = labeled_subset_indices(dataset.labeled.len(), budget, seed)?;
    let labeled = dataset.labeled_subset(&indices)?;
    let unlabeled = dataset.unlabeled_set();
    let test = dataset.test_set();
    let config = TrainConfig {
        method,
        jobs: 1,
        ..spec.train.with_seed(seed)
    };
    let net = train(method, &labeled, &unlabeled, &config)?;
    model_mae(&net, test.inputs.view(), test.targets.view(), dataset.normalization)
}

/// Runs every `(method, budget, seed)` cell. Cells are independent and run
/// up to `spec.train.jobs` at a time; a failed cell is recorded with its
/// error rather than aborting the table.
pub fn run_protocol(dataset: &Dataset, spec: &ProtocolSpec) -> Result<ResultTable> {
    dataset.validate()?;
    spec.validate(dataset.labeled.len())?;
    let cells: Vec<(Method, usize, u64)> = spec
        .methods
        .iter()
        .flat_map(|&m| {
            spec.label_budgets
                .iter()
                .flat_map(move |&b| spec.seeds.iter().map(move |&s| (m, b, s)))
        })
        .collect();
    let eval = |&(m, b, s): &(Method, usize, u64)| match run_cell(dataset, spec, m, b, s) {
        Ok(mae) => SeedResult { seed: s, mae: Some(mae), error: None },
        Err(e) => SeedResult { seed: s, mae: None, error: Some(e.to_string()) },
    };
    let results: Vec<SeedResult> = if spec.train.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.train.jobs)
            .build()
            .map_err(|e| Error::invalid(e.to_string()))?;
        pool.install(|| cells.par_iter().map(eval).collect())
    } else {
        cells.iter().map(eval).collect()
    };

    let per_cell = spec.seeds.len();
    let rows = cells
        .chunks(per_cell)
        .zip(results.chunks(per_cell))
        .map(|(c, runs)| {
            let ok: Vec<f64> = runs.iter().filter_map(|r| r.mae).collect();
            CellRow {
                method: c[0].0,
                budget: c[0].1,
                runs: runs.to_vec(),
                aggregate: spec.aggregate.apply(&ok),
            }
        })
        .collect();
    Ok(ResultTable {
        dataset_sha256: dataset.sha256()?,
        config_sha256: sha256_json(spec)?,
        spec: spec.clone(),
        rows,
    })
}
