//! The genetic search: initialization, roulette selection, stage-wise
//! crossover, bit-flip mutation and evaluation with occurrence averaging.
//!
//! Each generation `t >= 1` runs select, crossover, mutate, evaluate. Every
//! individual is evaluated again each generation, even when its genome was
//! seen before, and its fitness is the mean of all measurements its genome
//! has ever received.

mod cache;
mod checkpoint;
mod engine;
mod operators;
mod params;
mod population;
mod sinks;

use thiserror::Error;

use crate::evaluators::EvalError;

pub use cache::FitnessCache;
pub use checkpoint::{Checkpoint, CheckpointError, CheckpointIndividual, CHECKPOINT_SCHEMA_VERSION};
pub use engine::{evaluate_generation, run, run_from, BestEver, EngineOptions, RunResult, RunState};
pub use operators::{
    breed, crossover_pass, flip_bits, init_population, mutation_pass, roulette_draw, select,
    selection_weights, swap_stages,
};
pub use params::{GaParams, InitMode, Preset};
pub use population::{Generation, GenerationStats, Individual, Lineage, Origin};
pub use sinks::{
    lineage_rows, stats_row, LineageCsv, Recorder, RunSink, StatsCsv, LINEAGE_HEADER, STATS_HEADER,
};

/// An evaluator call that failed, with the genome it was asked about.
#[derive(Debug, Error)]
#[error("evaluating {genome} in generation {generation} failed: {source}")]
pub struct EvaluationFailure {
    pub generation: usize,
    pub genome: String,
    #[source]
    pub source: EvalError,
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("generation {0} has not been evaluated")]
    NotEvaluated(usize),
    #[error("{failure}")]
    Evaluation {
        failure: EvaluationFailure,
        /// JSON checkpoint of the state before the failed evaluation.
        checkpoint: Box<String>,
        checkpoint_written: bool,
    },
    #[error("output sink failed: {0}")]
    Sink(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}
