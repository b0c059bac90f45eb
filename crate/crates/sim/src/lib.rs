//! Experiment harness for the driven Ising chain simulator.
//!
//! Each experiment sweeps realizations in parallel, reduces them in
//! realization order and writes CSV tables plus a JSON manifest.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use driven_ising::SimError;
use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{run_experiment, ExperimentOutput, Runner};
pub use output::{format_g, Table, Value};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Numeric(_) => 3,
        }
    }
}

impl From<SimError> for HarnessError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Argument(_) | SimError::Config(_) | SimError::Resource(_) => HarnessError::Config(e.to_string()),
            SimError::State(_) | SimError::Numeric(_) | SimError::Divergence(_) => HarnessError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

/// Worker count: `SIM_THREADS` if set, capped at the available cores.
pub fn worker_count() -> Result<usize, HarnessError> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("SIM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(cores)),
            _ => Err(HarnessError::Config(format!("SIM_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(cores),
    }
}
