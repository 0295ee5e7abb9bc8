use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};

use super::cache::FitnessCache;
use super::checkpoint::Checkpoint;
use super::operators::{breed, init_population};
use super::params::GaParams;
use super::population::Generation;
use super::sinks::RunSink;
use super::{EvaluationFailure, EvolutionError};
use crate::evaluators::{EvalError, Evaluator};
use crate::genome::{Genome, SearchSpace};
use crate::scalar::Fitness;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineOptions {
    /// Upper bound on concurrent evaluator calls.
    pub max_parallel_evals: usize,
    /// Stop cleanly once this generation is evaluated and checkpointed.
    pub stop_after_generation: Option<usize>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            max_parallel_evals: 1,
            stop_after_generation: None,
        }
    }
}

/// Highest fitness any individual has held, and where it was first seen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Fitness")]
pub struct BestEver<F> {
    pub genome: String,
    pub fitness: F,
    pub generation: usize,
}

/// Everything needed to continue a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState<F> {
    pub space: Arc<SearchSpace>,
    pub params: GaParams,
    pub generation: Generation<F>,
    pub cache: FitnessCache<F>,
    pub best: Option<BestEver<F>>,
}

impl<F: Fitness> RunState<F> {
    /// Fresh run with an unevaluated generation 0.
    pub fn new(space: Arc<SearchSpace>, params: GaParams) -> Result<Self, EvolutionError> {
        params.validate()?;
        let generation = init_population(&space, &params);
        Ok(RunState {
            space,
            params,
            generation,
            cache: FitnessCache::new(),
            best: None,
        })
    }

    /// Fresh run starting from a caller-supplied generation 0.
    pub fn with_population(
        space: Arc<SearchSpace>,
        params: GaParams,
        genomes: Vec<Genome>,
    ) -> Result<Self, EvolutionError> {
        params.validate()?;
        if genomes.len() != params.population_size {
            return Err(EvolutionError::InvalidParams(format!(
                "initial population has {} genomes, population_size is {}",
                genomes.len(),
                params.population_size
            )));
        }
        if genomes.iter().any(|g| g.space() != &*space) {
            return Err(EvolutionError::InvalidParams(
                "initial genome from a different search space".into(),
            ));
        }
        let individuals = genomes
            .into_iter()
            .map(|g| super::population::Individual::new(g, super::population::Lineage::init()))
            .collect();
        Ok(RunState {
            space,
            params,
            generation: Generation {
                index: 0,
                individuals,
            },
            cache: FitnessCache::new(),
            best: None,
        })
    }

    pub fn is_evaluated(&self) -> bool {
        self.generation.is_evaluated()
    }

    pub fn is_finished(&self) -> bool {
        self.is_evaluated() && self.generation.index >= self.params.generations
    }

    fn update_best(&mut self) {
        for ind in &self.generation.individuals {
            let Some(fitness) = ind.fitness else { continue };
            if self.best.as_ref().is_none_or(|b| fitness > b.fitness) {
                self.best = Some(BestEver {
                    genome: ind.genome.to_string(),
                    fitness,
                    generation: self.generation.index,
                });
            }
        }
    }
}

/// Outcome of [`run`] and friends.
#[derive(Debug, Clone)]
pub struct RunResult<F> {
    pub final_generation: Generation<F>,
    pub best: BestEver<F>,
    pub cache: FitnessCache<F>,
    /// False when the run stopped early on `stop_after_generation`.
    pub completed: bool,
}

fn measure_all<F: Fitness, E: Evaluator<F> + ?Sized>(
    genomes: &[&Genome],
    evaluator: &E,
    max_parallel: usize,
) -> Vec<Result<F, EvalError>> {
    let check = |genome: &Genome| {
        evaluator.evaluate(genome).and_then(|m| {
            if m.in_unit_range() {
                Ok(m)
            } else {
                Err(EvalError::OutOfRange(m.as_f64()))
            }
        })
    };
    let workers = max_parallel.max(1).min(genomes.len());
    if workers <= 1 {
        let mut out = Vec::with_capacity(genomes.len());
        for genome in genomes {
            let r = check(genome);
            let failed = r.is_err();
            out.push(r);
            if failed {
                break;
            }
        }
        return out;
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<F, EvalError>>>> =
        genomes.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= genomes.len() {
                    break;
                }
                let r = check(genomes[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

/// Evaluates every individual once more, appends the measurements to the
/// cache in list order and sets each fitness to its genome's cache mean.
/// On failure nothing is committed.
pub fn evaluate_generation<F: Fitness, E: Evaluator<F> + ?Sized>(
    generation: &mut Generation<F>,
    cache: &mut FitnessCache<F>,
    evaluator: &E,
    max_parallel: usize,
) -> Result<(), EvaluationFailure> {
    let genomes: Vec<&Genome> = generation.individuals.iter().map(|i| &i.genome).collect();
    let results = measure_all(&genomes, evaluator, max_parallel);
    let mut measurements = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => measurements.push(m),
            Err(source) => {
                return Err(EvaluationFailure {
                    generation: generation.index,
                    genome: genomes[i].to_string(),
                    source,
                })
            }
        }
    }
    for (ind, &m) in generation.individuals.iter().zip(&measurements) {
        cache.record(&ind.genome, m);
    }
    for ind in &mut generation.individuals {
        ind.fitness = cache.mean(&ind.genome);
    }
    Ok(())
}

fn notify<F: Fitness>(
    sinks: &mut [&mut dyn RunSink<F>],
    mut f: impl FnMut(&mut dyn RunSink<F>) -> Result<(), EvolutionError>,
) -> Result<(), EvolutionError> {
    for sink in sinks.iter_mut() {
        f(&mut **sink)?;
    }
    Ok(())
}

/// Runs a fresh search: evaluate generation 0, then `generations` rounds of
/// select, crossover, mutate, evaluate.
pub fn run<F: Fitness, E: Evaluator<F> + ?Sized>(
    space: Arc<SearchSpace>,
    params: GaParams,
    evaluator: &E,
    options: EngineOptions,
    sinks: &mut [&mut dyn RunSink<F>],
) -> Result<RunResult<F>, EvolutionError> {
    run_from(RunState::new(space, params)?, evaluator, options, sinks)
}

/// Continues from any state: an unevaluated generation is evaluated first,
/// an evaluated one is bred from.
///
/// After each evaluated generation the sinks see the generation, then a
/// checkpoint of the state. If the evaluator fails, the sinks receive a
/// checkpoint of the state before that generation's evaluation and the
/// failure is returned.
pub fn run_from<F: Fitness, E: Evaluator<F> + ?Sized>(
    mut state: RunState<F>,
    evaluator: &E,
    options: EngineOptions,
    sinks: &mut [&mut dyn RunSink<F>],
) -> Result<RunResult<F>, EvolutionError> {
    state.params.validate()?;
    let mut completed = true;
    loop {
        if !state.is_evaluated() {
            if let Err(failure) = evaluate_generation(
                &mut state.generation,
                &mut state.cache,
                evaluator,
                options.max_parallel_evals,
            ) {
                let checkpoint = Checkpoint::capture(&state);
                let written = notify(sinks, |s| s.on_checkpoint(&checkpoint)).is_ok();
                return Err(EvolutionError::Evaluation {
                    failure,
                    checkpoint: Box::new(checkpoint.to_json()),
                    checkpoint_written: written,
                });
            }
            state.update_best();
            notify(sinks, |s| s.on_generation(&state))?;
            let checkpoint = Checkpoint::capture(&state);
            notify(sinks, |s| s.on_checkpoint(&checkpoint))?;
            if options
                .stop_after_generation
                .is_some_and(|stop| state.generation.index >= stop)
                && !state.is_finished()
            {
                completed = false;
                break;
            }
        }
        if state.generation.index >= state.params.generations {
            break;
        }
        state.generation = breed(&state.generation, &state.params)?;
    }
    Ok(RunResult {
        best: state.best.clone().expect("at least one generation evaluated"),
        final_generation: state.generation,
        cache: state.cache,
        completed,
    })
}
