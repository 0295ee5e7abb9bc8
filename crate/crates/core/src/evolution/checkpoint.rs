//! JSON checkpoints.
//!
//! A checkpoint holds the current generation (evaluated or not), the whole
//! fitness cache and the best-ever record. Random streams are derived from
//! `(seed, generation, phase)`, so no generator state needs saving.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::cache::FitnessCache;
use super::engine::{BestEver, RunState};
use super::params::GaParams;
use super::population::{Generation, Individual, Lineage};
use crate::genome::{Genome, GenomeError, SearchSpace};
use crate::scalar::Fitness;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("checkpoint schema version {found} is not supported (expected {CHECKPOINT_SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("checkpoint holds an invalid genome: {0}")]
    Genome(#[from] GenomeError),
    #[error("checkpoint is inconsistent: {0}")]
    Inconsistent(String),
    #[error("checkpoint parameters differ from the requested run in: {}", .0.join(", "))]
    ParamsMismatch(Vec<&'static str>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Fitness")]
pub struct CheckpointIndividual<F> {
    pub genome: String,
    pub fitness: Option<F>,
    pub lineage: Lineage<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Fitness")]
pub struct Checkpoint<F> {
    pub schema_version: u32,
    pub space: SearchSpace,
    pub params: GaParams,
    pub generation_index: usize,
    /// Whether `individuals` already carry this generation's fitness.
    pub evaluated: bool,
    pub individuals: Vec<CheckpointIndividual<F>>,
    pub cache: FitnessCache<F>,
    pub best: Option<BestEver<F>>,
}

impl<F: Fitness> Checkpoint<F> {
    pub fn capture(state: &RunState<F>) -> Self {
        Checkpoint {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            space: (*state.space).clone(),
            params: state.params.clone(),
            generation_index: state.generation.index,
            evaluated: state.is_evaluated(),
            individuals: state
                .generation
                .individuals
                .iter()
                .map(|i| CheckpointIndividual {
                    genome: i.genome.to_string(),
                    fitness: i.fitness,
                    lineage: i.lineage.clone(),
                })
                .collect(),
            cache: state.cache.clone(),
            best: state.best.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| CheckpointError::Inconsistent("missing schema_version".into()))?;
        if version != u64::from(CHECKPOINT_SCHEMA_VERSION) {
            return Err(CheckpointError::SchemaVersion {
                found: version as u32,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Rebuilds the run state, checking internal consistency and, when
    /// given, that `expected` matches the stored parameters.
    pub fn into_state(self, expected: Option<&GaParams>) -> Result<RunState<F>, CheckpointError> {
        if let Some(expected) = expected {
            let diff = params_diff(&self.params, expected);
            if !diff.is_empty() {
                return Err(CheckpointError::ParamsMismatch(diff));
            }
        }
        self.params
            .validate()
            .map_err(|e| CheckpointError::Inconsistent(e.to_string()))?;
        let space = Arc::new(self.space);
        let n = self.params.population_size;
        if self.individuals.len() != n {
            return Err(CheckpointError::Inconsistent(format!(
                "{} individuals stored, population_size is {n}",
                self.individuals.len()
            )));
        }
        if self.generation_index > self.params.generations {
            return Err(CheckpointError::Inconsistent(format!(
                "generation {} is past the configured {}",
                self.generation_index, self.params.generations
            )));
        }
        let mut individuals = Vec::with_capacity(n);
        for stored in self.individuals {
            let genome = Genome::parse(Arc::clone(&space), &stored.genome)?;
            if self.evaluated {
                let mean = self.cache.mean(&genome);
                if stored.fitness.is_none() || stored.fitness != mean {
                    return Err(CheckpointError::Inconsistent(format!(
                        "fitness of {} does not match its cache mean",
                        stored.genome
                    )));
                }
            }
            individuals.push(Individual {
                genome,
                fitness: if self.evaluated { stored.fitness } else { None },
                lineage: stored.lineage,
            });
        }
        for (key, _) in self.cache.iter() {
            Genome::parse(Arc::clone(&space), key)?;
        }
        let evaluated_generations = self.generation_index + usize::from(self.evaluated);
        if self.cache.total_evaluations() != evaluated_generations * n {
            return Err(CheckpointError::Inconsistent(format!(
                "cache holds {} measurements, expected {}",
                self.cache.total_evaluations(),
                evaluated_generations * n
            )));
        }
        Ok(RunState {
            space,
            params: self.params,
            generation: Generation {
                index: self.generation_index,
                individuals,
            },
            cache: self.cache,
            best: self.best,
        })
    }
}

fn params_diff(a: &GaParams, b: &GaParams) -> Vec<&'static str> {
    let mut diff = Vec::new();
    if a.population_size != b.population_size {
        diff.push("population_size");
    }
    if a.generations != b.generations {
        diff.push("generations");
    }
    if a.mutation_prob != b.mutation_prob {
        diff.push("mutation_prob");
    }
    if a.mutation_bit_prob != b.mutation_bit_prob {
        diff.push("mutation_bit_prob");
    }
    if a.crossover_prob != b.crossover_prob {
        diff.push("crossover_prob");
    }
    if a.crossover_stage_prob != b.crossover_stage_prob {
        diff.push("crossover_stage_prob");
    }
    if a.seed != b.seed {
        diff.push("seed");
    }
    if a.init_mode != b.init_mode {
        diff.push("init_mode");
    }
    diff
}
