//! Experiment orchestration: spec loading, memoized evaluation, the GA and
//! exhaustive drivers, baseline comparison and hypervolume reporting.

mod artifacts;
mod eval;
mod ops;
mod spec;

pub use artifacts::{
    read_front_csv, write_front_csv, FrontRecord, FrontRow, FRONT_FILE, FRONT_HEADER, LOG_FILE,
    PARETO_SET_FILE,
};
pub use eval::{EvalCache, Evaluation, TraceEvaluator};
pub use ops::{
    compare_front, hypervolume_table, BaselineComparison, ExhaustiveOutcome, Explorer,
    GenerationLog, HypervolumeTable, OptimizeOutcome, SimulateReport, Summary,
};
pub use spec::{Baseline, ExperimentSpec, NamedTrace, Overrides};

use std::path::PathBuf;

use thiserror::Error;

use crate::cache_sim::{ConfigError, SimError};
use crate::cost_model::CostError;
use crate::genome::{Genome, GenomeError};
use crate::moea::MoeaError;
use crate::trace::{SynthError, TraceError};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("cannot read {path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Params(#[from] MoeaError),
    #[error("malformed front file {path}: {message}")]
    FrontFile { path: PathBuf, message: String },
    #[error("restricted space has {size} genomes, over the exhaustive budget of {budget}")]
    BudgetExceeded { size: u64, budget: u64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("evaluation of genome [{genome}] failed: {source}")]
    Evaluation {
        genome: Genome,
        #[source]
        source: Box<ExplorerError>,
    },
    #[error("{0}")]
    Runtime(String),
}

impl ExplorerError {
    /// 1 for validation problems, 2 for failures during evaluation.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExplorerError::Sim(_)
            | ExplorerError::Evaluation { .. }
            | ExplorerError::Output { .. }
            | ExplorerError::Runtime(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = ExplorerError> = std::result::Result<T, E>;
