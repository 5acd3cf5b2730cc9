use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{KppcaError, Result};
use crate::kernels::KernelSpec;
use crate::preimage::WeightMode;

/// Provenance written next to every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub command: String,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub q: usize,
    pub sigma2: f64,
    pub explained_variance: f64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preimage: Option<PreimageMetadata>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreimageMetadata {
    pub weights: WeightMode,
    pub epsilon: f64,
    pub clip_negative: bool,
}

impl RunMetadata {
    pub fn new(
        command: impl Into<String>,
        seed: u64,
        kernel: KernelSpec,
        q: usize,
        sigma2: f64,
        explained_variance: f64,
    ) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunMetadata {
            command: command.into(),
            seed,
            kernel,
            q,
            sigma2,
            explained_variance,
            timestamp,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            preimage: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("metadata is always serializable");
        fs::write(path, json + "\n").map_err(|e| KppcaError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| KppcaError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| KppcaError::Parse {
            row: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}
