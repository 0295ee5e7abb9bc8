//! Run configuration: what the user writes, and the fully resolved form that
//! lands in `config.json`.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use dagenome::evaluators::{ConstantEvaluator, ExternalEvaluator, NoisyEvaluator, DEFAULT_EVAL_TIMEOUT};
use dagenome::{Evaluator, GaParams, Preset, SearchSpace, SurrogateEvaluator, SurrogateWeights};

fn default_timeout_secs() -> f64 {
    DEFAULT_EVAL_TIMEOUT.as_secs_f64()
}

fn one() -> usize {
    1
}

/// Where fitness comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvaluatorSpec {
    Surrogate {
        #[serde(default)]
        weights: SurrogateWeights,
    },
    Constant {
        value: f64,
    },
    Noisy {
        sigma: f64,
        seed: u64,
        inner: Box<EvaluatorSpec>,
    },
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: f64,
        #[serde(default = "one")]
        max_parallel_evals: usize,
    },
}

impl Default for EvaluatorSpec {
    fn default() -> Self {
        EvaluatorSpec::Surrogate {
            weights: SurrogateWeights::default(),
        }
    }
}

impl EvaluatorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            EvaluatorSpec::Surrogate { weights } => {
                weights.validate().map_err(anyhow::Error::msg)?;
            }
            EvaluatorSpec::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    bail!("constant fitness must lie in [0, 1], got {value}");
                }
            }
            EvaluatorSpec::Noisy { sigma, inner, .. } => {
                if !sigma.is_finite() || *sigma < 0.0 {
                    bail!("noise sigma must be finite and non-negative, got {sigma}");
                }
                inner.validate()?;
            }
            EvaluatorSpec::External {
                command,
                timeout_secs,
                max_parallel_evals,
            } => {
                if command.is_empty() {
                    bail!("external evaluator command is empty");
                }
                if !timeout_secs.is_finite() || *timeout_secs <= 0.0 {
                    bail!("timeout_secs must be positive, got {timeout_secs}");
                }
                if *max_parallel_evals == 0 {
                    bail!("max_parallel_evals must be at least 1");
                }
            }
        }
        Ok(())
    }

    pub fn max_parallel_evals(&self) -> usize {
        match self {
            EvaluatorSpec::External {
                max_parallel_evals, ..
            } => *max_parallel_evals,
            EvaluatorSpec::Noisy { inner, .. } => inner.max_parallel_evals(),
            _ => 1,
        }
    }

    /// `committed` is the number of measurements already in the cache, so a
    /// resumed noisy run continues the same noise sequence.
    pub fn build(&self, committed: u64) -> Box<dyn Evaluator<f64>> {
        match self {
            EvaluatorSpec::Surrogate { weights } => Box::new(SurrogateEvaluator::new(*weights)),
            EvaluatorSpec::Constant { value } => Box::new(ConstantEvaluator(*value)),
            EvaluatorSpec::Noisy { sigma, seed, inner } => Box::new(
                NoisyEvaluator::new(inner.build(committed), *sigma, *seed).starting_at(committed),
            ),
            EvaluatorSpec::External {
                command,
                timeout_secs,
                max_parallel_evals,
            } => Box::new(ExternalEvaluator::new(
                command.clone(),
                Duration::from_secs_f64(*timeout_secs),
                *max_parallel_evals,
            )),
        }
    }
}

/// A config file as written by hand. Anything missing comes from the preset.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub space: Option<SearchSpace>,
    /// Full or partial `GaParams`; given keys override the preset's.
    #[serde(default)]
    pub params: Option<Value>,
    #[serde(default)]
    pub evaluator: Option<EvaluatorSpec>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// The effective configuration of a run, written as `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    pub space: SearchSpace,
    pub params: GaParams,
    pub evaluator: EvaluatorSpec,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid config")
    }

    pub fn resolve(self, overrides: &Overrides) -> Result<ResolvedConfig> {
        let preset = overrides.preset.or(self.preset);
        // a preset given on the command line replaces the file's space and params
        let (space, params) = if overrides.preset.is_some() {
            (None, None)
        } else {
            (self.space, self.params)
        };
        let space = match (space, preset) {
            (Some(s), _) => s,
            (None, Some(p)) => p.space(),
            (None, None) => bail!("config needs a search space or a preset"),
        };
        let mut merged = match preset {
            Some(p) => serde_json::to_value(p.params(0)).expect("params serialize"),
            None => Value::Object(Default::default()),
        };
        match params {
            Some(Value::Object(given)) => {
                let base = merged.as_object_mut().expect("object");
                base.extend(given);
            }
            Some(other) => bail!("params must be a JSON object, got {other}"),
            None if preset.is_none() => bail!("config needs params or a preset"),
            None => {}
        }
        if let Some(seed) = overrides.seed {
            merged["seed"] = Value::from(seed);
        }
        let params: GaParams = serde_json::from_value(merged).context("invalid params")?;
        params.validate()?;
        let evaluator = self.evaluator.unwrap_or_default();
        evaluator.validate()?;
        let output_dir = overrides
            .output_dir
            .clone()
            .or(self.output_dir)
            .context("no output directory: set output_dir in the config or pass --out")?;
        Ok(ResolvedConfig {
            preset,
            space,
            params,
            evaluator,
            output_dir,
        })
    }
}

impl ResolvedConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ResolvedConfig = serde_json::from_str(text).context("invalid config.json")?;
        config.params.validate()?;
        config.evaluator.validate()?;
        Ok(config)
    }
}
