//! Fitness sources.
//!
//! An [`Evaluator`] maps a genome to a measurement in `[0, 1]`. The search
//! engine treats every evaluator the same way; what differs is whether
//! repeated calls agree ([`EvaluatorInfo::deterministic`]) and how costly a
//! call is.

mod external;
mod noisy;
mod surrogate;

use std::time::Duration;

use thiserror::Error;

use crate::genome::Genome;
use crate::scalar::Fitness;

pub use external::{
    ExternalEvaluator, ProtocolRequest, ProtocolResponse, DEFAULT_EVAL_TIMEOUT,
};
pub use noisy::NoisyEvaluator;
pub use surrogate::{surrogate_features, surrogate_fitness, SurrogateEvaluator, SurrogateFeatures, SurrogateWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostHint {
    Cheap,
    Expensive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluatorInfo {
    pub deterministic: bool,
    pub cost_hint: CostHint,
}

/// Why a single evaluation failed.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no response within {0:?}")]
    Timeout(Duration),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("fitness {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("evaluator process exited ({0})")]
    ProcessExited(String),
    #[error("evaluator reported an error: {0}")]
    Reported(String),
    #[error("failed to launch evaluator: {0}")]
    Spawn(#[source] std::io::Error),
    #[error("evaluator I/O failed: {0}")]
    Io(#[source] std::io::Error),
}

impl EvalError {
    /// Short stable name of the failure class.
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::Timeout(_) => "timeout",
            EvalError::Malformed(_) => "malformed",
            EvalError::OutOfRange(_) => "out-of-range",
            EvalError::ProcessExited(_) => "process-exited",
            EvalError::Reported(_) => "reported",
            EvalError::Spawn(_) => "spawn",
            EvalError::Io(_) => "io",
        }
    }
}

pub trait Evaluator<F: Fitness>: Send + Sync {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError>;

    fn info(&self) -> EvaluatorInfo;

    /// Human-readable identity used in reports.
    fn describe(&self) -> String;
}

impl<F: Fitness, E: Evaluator<F> + ?Sized> Evaluator<F> for &E {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        (**self).evaluate(genome)
    }

    fn info(&self) -> EvaluatorInfo {
        (**self).info()
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<F: Fitness, E: Evaluator<F> + ?Sized> Evaluator<F> for Box<E> {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        (**self).evaluate(genome)
    }

    fn info(&self) -> EvaluatorInfo {
        (**self).info()
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Returns the same value for every genome.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEvaluator<F>(pub F);

impl<F: Fitness> Evaluator<F> for ConstantEvaluator<F> {
    fn evaluate(&self, _genome: &Genome) -> Result<F, EvalError> {
        if self.0.in_unit_range() {
            Ok(self.0)
        } else {
            Err(EvalError::OutOfRange(self.0.as_f64()))
        }
    }

    fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            deterministic: true,
            cost_hint: CostHint::Cheap,
        }
    }

    fn describe(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// Wraps a plain function as a deterministic evaluator.
pub struct FnEvaluator<G> {
    name: String,
    func: G,
}

impl<G> FnEvaluator<G> {
    pub fn new(name: impl Into<String>, func: G) -> Self {
        FnEvaluator {
            name: name.into(),
            func,
        }
    }
}

impl<F, G> Evaluator<F> for FnEvaluator<G>
where
    F: Fitness,
    G: Fn(&Genome) -> F + Send + Sync,
{
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        let value = (self.func)(genome);
        if value.in_unit_range() {
            Ok(value)
        } else {
            Err(EvalError::OutOfRange(value.as_f64()))
        }
    }

    fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            deterministic: true,
            cost_hint: CostHint::Cheap,
        }
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}
