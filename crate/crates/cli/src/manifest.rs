use std::path::Path;

use asyncgl::{BoundaryMode, RuleVariant};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to regenerate a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub rule: RuleVariant,
    pub boundary: BoundaryMode,
    pub version: String,
    /// Worker threads used; outputs do not depend on it.
    pub threads: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    /// Output files relative to the output directory, manifest excluded.
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::validation("manifest", e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }
}
