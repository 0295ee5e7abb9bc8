//! Fixed-length binary encoding of staged DAG network structures, and a
//! genetic search over that encoding.
//!
//! A network is a chain of stages separated by pooling. Inside a stage the
//! ordinary nodes are ordered and an edge may only run from a lower to a
//! higher node; one bit per node pair records whether the edge exists. The
//! [`genome`] module owns the bit layout and the `0-01|0-01-111|...` text
//! form, [`decoder`] turns bits into graphs, [`evolution`] runs the search,
//! [`evaluators`] supplies fitness, and [`oracle`] enumerates small spaces
//! exhaustively to check the search against ground truth.
//!
//! Fitness-carrying types are generic over the scalar ([`Fitness`], `f32`
//! or `f64`); the aliases below fix it to `f64`.

pub mod decoder;
pub mod evaluators;
pub mod evolution;
pub mod genome;
pub mod oracle;
pub mod rng;
pub mod scalar;

pub use decoder::{
    conv_node_count, decode_network, decode_stage, encode_reference_structures, export_graph,
    ExportFormat, NetworkGraph, StageGraph,
};
pub use evaluators::{EvalError, Evaluator};
pub use evolution::{EngineOptions, GaParams, InitMode, Preset};
pub use genome::{EdgeIndex, Genome, GenomeError, SearchSpace, SpaceSize};
pub use scalar::Fitness;

pub type FitnessCache = evolution::FitnessCache<f64>;
pub type Individual = evolution::Individual<f64>;
pub type Generation = evolution::Generation<f64>;
pub type GenerationStats = evolution::GenerationStats<f64>;
pub type RunState = evolution::RunState<f64>;
pub type RunResult = evolution::RunResult<f64>;
pub type Checkpoint = evolution::Checkpoint<f64>;
pub type BestEver = evolution::BestEver<f64>;
pub type SurrogateWeights = evaluators::SurrogateWeights<f64>;
pub type SurrogateEvaluator = evaluators::SurrogateEvaluator<f64>;
pub type EnumerationReport = oracle::EnumerationReport<f64>;
