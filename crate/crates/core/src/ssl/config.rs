use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numnet::{Activation, AdamWConfig, LrSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Supervised,
    SelfTraining,
    UgeSt,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Supervised => "supervised",
            Method::SelfTraining => "self-training",
            Method::UgeSt => "uge-st",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "supervised" => Ok(Method::Supervised),
            "self-training" => Ok(Method::SelfTraining),
            "uge-st" => Ok(Method::UgeSt),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected supervised, self-training or uge-st)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub method: Method,
    pub epochs: usize,
    pub batch_size: usize,
    /// Hidden layer widths; input and output widths come from the dataset.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub schedule: LrSchedule,
    pub optimizer: AdamWConfig,
    pub seed: u64,
    pub ensemble_size: usize,
    pub use_uncertainty: bool,
    pub use_pretrain_finetune: bool,
    /// Upper bound on concurrently trained ensemble members.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::UgeSt,
            epochs: 100,
            batch_size: 8,
            hidden: vec![64, 256],
            activation: Activation::LeakyRelu,
            schedule: LrSchedule::default(),
            optimizer: AdamWConfig::default(),
            seed: 0,
            ensemble_size: 3,
            use_uncertainty: true,
            use_pretrain_finetune: true,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        if !(self.schedule.lr_min >= 0.0 && self.schedule.lr_min <= self.schedule.lr_max) || self.schedule.t0 == 0 {
            return Err(Error::invalid("schedule needs 0 <= lr_min <= lr_max and t0 >= 1"));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig { seed, ..self.clone() }
    }
}
