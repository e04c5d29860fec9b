//! File formats, analyses and the `cashflow-lab` command line on top of
//! `cashflow-core`.

use std::path::{Path, PathBuf};

use cashflow_core::agents::SimulationError;
use cashflow_core::ledger::LedgerError;
use thiserror::Error;

pub mod analysis;
pub mod cli;
pub mod formats;
pub mod manifest;
pub mod report;
pub mod scenario;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("ledger not found: {0}")]
    MissingLedger(PathBuf),
    #[error("day {day} outside 1..={max}")]
    DayOutOfRange { day: u32, max: u32 },
    #[error("malformed input: {0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

impl LabError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
