//! The command pipeline: `run` a configured batch, `simulate` decoding
//! regimes on one kernel, `analyze` stored trajectories and `report` the
//! results. Every command writes into one output directory and finishes
//! with a `manifest.json` listing a hash for each file.

mod analyze;
pub mod config;
mod manifest;
mod report;
mod run;
mod simulate;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use analyze::{cmd_analyze, AnalysisManifest, AnalysisOutcome, InputError};
pub use config::{CorpusSpec, ExperimentConfig, SimulateSpec, TemplateDef, SCHEMA_VERSION};
pub use manifest::{read_manifest, sha256_hex, verify_inventory, ChainStatus, FileEntry, RunManifest, MANIFEST_FILE};
pub use report::cmd_report;
pub use run::{cmd_run, RecurrenceRow, RunOutcome};
pub use simulate::{cmd_simulate, simulate_conditions, Condition, ConditionResult, SimulationOutcome};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("run failed: {0}")]
    Failed(String),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ExperimentError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Process exit status: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            _ => 1,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub master_seed: Option<u64>,
    pub endpoint: Option<String>,
}
