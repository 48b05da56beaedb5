use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use fieldst::field_sim::Dataset;

#[derive(Debug, Serialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Record of one run: what was asked for, on which data, and what came out.
/// Holds no timestamps so repeated runs produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub dataset_sha256: String,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new<C: Serialize>(command: &str, config: &C, ds: &Dataset, out: &Path, files: &[PathBuf]) -> Result<Self> {
        let artifacts = files
            .iter()
            .map(|f| {
                let bytes = fs::read(f).with_context(|| format!("hashing {}", f.display()))?;
                Ok(Artifact {
                    path: f.strip_prefix(out).unwrap_or(f).display().to_string(),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<_>>()?;
        Ok(RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            dataset_sha256: ds.sha256()?,
            config: serde_json::to_value(config)?,
            artifacts,
            metrics: serde_json::Map::new(),
        })
    }

    pub fn with_metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), serde_json::json!(value));
        self
    }

    /// Writes `manifest.json` via a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let tmp = dir.join(".manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}
