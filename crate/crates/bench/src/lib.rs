//! Benchmark harness: amortized comparison cost, end-to-end PDTE sweeps over attributes and
//! tree size, and CSV plus plain-text reports.

pub mod ablation;
pub mod cmp;
pub mod record;
pub mod stats;

pub use ablation::{bench_pdte_ablation, bench_pdte_point, AblationConfig, Axis};
pub use cmp::{bench_comparison, weight_sweep, CmpConfig};
pub use record::{emit_report, read_csv, summarize, summary_text, write_csv, BenchRecord, Summary, COLUMNS};
pub use stats::{linear_fit, mean, stddev, LinearFit};

use pdte_core::comparators::CompareError;
use pdte_core::encodings::EncodingError;
use pdte_core::pdte::{ModelError, PdteError};
use pdte_he::HeError;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Protocol(#[from] pdte_protocol::Error),
    #[error(transparent)]
    Pdte(#[from] PdteError),
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    /// A homomorphic result disagreed with the cleartext answer.
    #[error("wrong result: {0}")]
    Wrong(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Cmp,
    Attrs,
    Nodes,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Cmp => "cmp",
            Experiment::Attrs => "attrs",
            Experiment::Nodes => "nodes",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cmp" => Ok(Experiment::Cmp),
            "attrs" | "attributes" => Ok(Experiment::Attrs),
            "nodes" => Ok(Experiment::Nodes),
            other => Err(BenchError::Usage(format!("unknown experiment {other:?}; expected cmp, attrs or nodes"))),
        }
    }
}
