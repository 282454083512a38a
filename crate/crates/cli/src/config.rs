use std::path::Path;

use bigraph::forcing_kernel::ReconstructConfig;
use bigraph::graph_sim::{Profile, SimConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportSpec {
    pub snapshot_format: SnapshotFormat,
}

/// `bigraph simulate` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    /// Recorded for reproducibility; the simulation itself draws no random numbers.
    #[serde(default)]
    pub seed: u64,
    pub simulation: SimConfig,
    #[serde(default)]
    pub export: ExportSpec,
}

/// `bigraph reconstruct` input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reconstruction: ReconstructConfig,
    pub profiles: Vec<Profile>,
}

/// Reads a TOML config, or the `config` echo of a previous `manifest.json`.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg = v
            .get_mut("config")
            .map(serde_json::Value::take)
            .ok_or_else(|| CliError::Config(format!("{}: no `config` entry", path.display())))?;
        serde_json::from_value(cfg).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// SHA-256 of the canonical JSON form of the resolved config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
