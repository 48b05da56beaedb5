//! Evaluation: MAE, the label-budget protocol, ablations and heatmap export.

mod ablation;
mod export;
mod metrics;
mod protocol;
mod session;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ablation::{
    ablate_ensemble, ablate_pretrain, ablate_uncertainty, AblationSpec, EnsembleAblation, EnsemblePoint,
    PretrainAblation, PretrainArms, UncertaintyAblation, UncertaintyArms,
};
pub use export::{error_map, export_heatmap, read_heatmap_csv, render_csv, render_pgm, HeatmapFormat};
pub use metrics::{mae, model_mae, normalized_mae};
pub use protocol::{labeled_subset_indices, run_protocol, CellRow, ProtocolSpec, ResultTable, SeedResult};
pub use session::SeedSession;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregate {
    #[default]
    Median,
    Mean,
}

impl Aggregate {
    /// `None` for an empty slice.
    pub fn apply(&self, values: &[f64]) -> Option<f64> {
        if values.is_empty() {
            return None;
        }
        match self {
            Aggregate::Mean => Some(values.iter().sum::<f64>() / values.len() as f64),
            Aggregate::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let mid = v.len() / 2;
                Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
            }
        }
    }
}

impl std::str::FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Aggregate::Median),
            "mean" => Ok(Aggregate::Mean),
            other => Err(Error::invalid(format!("unknown aggregate '{other}'"))),
        }
    }
}

pub(crate) fn sha256_json<T: Serialize>(value: &T) -> Result<String> {
    use sha2::{Digest, Sha256};
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(value)?)))
}
