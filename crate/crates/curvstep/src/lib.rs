//! Experiment harness, file formats and command-line configuration for
//! `curvstep-core`.

pub mod analysis;
pub mod config;
pub mod experiment;
pub mod harness;
pub mod io;

pub use curvstep_core as core;

use curvstep_core::RunFailure;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] curvstep_core::Error),
    #[error("run failed: {0}")]
    Run(Box<RunFailure>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
}

impl From<Box<RunFailure>> for HarnessError {
    fn from(f: Box<RunFailure>) -> Self {
        HarnessError::Run(f)
    }
}
