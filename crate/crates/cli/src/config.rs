//! Run configuration: a TOML document whose keys are overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use volmo_core::schema::DatasetSpec;

use crate::error::{CliError, CliResult};

/// Keys accepted in the `--config` file. Every key is optional; flags win.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub sample_size: Option<usize>,
    pub policy: Option<String>,
    pub beta: Option<f64>,
    pub provider: Option<String>,
    pub offline: Option<bool>,
    pub model: Option<String>,
    pub max_attempts: Option<u32>,
    pub fallback: Option<bool>,
    pub max_in_flight: Option<usize>,
    pub timeout_secs: Option<f64>,
    pub backoff_secs: Option<f64>,
    pub temperature: Option<f64>,
    pub all_journals: Option<bool>,
    #[serde(default)]
    pub datasets: Vec<DatasetEntry>,
    /// Directory of the config file; relative dataset paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// One source table for `convert`: its path plus the column mapping.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DatasetEntry {
    pub input: PathBuf,
    #[serde(flatten)]
    pub spec: DatasetSpec,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<FileConfig> {
        let Some(path) = path else {
            return Ok(FileConfig {
                base_dir: PathBuf::from("."),
                ..Default::default()
            });
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
