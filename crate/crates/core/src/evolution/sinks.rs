//! Per-generation outputs: statistics and lineage CSV.

use std::io::Write;

use super::checkpoint::Checkpoint;
use super::engine::RunState;
use super::population::{Generation, GenerationStats};
use super::EvolutionError;
use crate::scalar::Fitness;

pub const STATS_HEADER: &str = "generation,max,min,mean,median,stddev,best_genome";
pub const LINEAGE_HEADER: &str =
    "generation,child_genome,origin,parent1,parent2,child_fitness,parent1_fitness,parent2_fitness";

/// Receives each evaluated generation and each checkpoint of a run.
pub trait RunSink<F: Fitness> {
    fn on_generation(&mut self, state: &RunState<F>) -> Result<(), EvolutionError>;

    fn on_checkpoint(&mut self, _checkpoint: &Checkpoint<F>) -> Result<(), EvolutionError> {
        Ok(())
    }
}

pub fn stats_row<F: Fitness>(index: usize, stats: &GenerationStats<F>) -> String {
    format!(
        "{index},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
        stats.max, stats.min, stats.mean, stats.median, stats.stddev, stats.best_genome
    )
}

/// One row per individual of an evaluated generation.
pub fn lineage_rows<F: Fitness>(generation: &Generation<F>) -> Vec<String> {
    let fmt = |v: Option<F>| v.map(|v| format!("{v:.6}")).unwrap_or_default();
    generation
        .individuals
        .iter()
        .map(|ind| {
            let l = &ind.lineage;
            format!(
                "{},{},{},{},{},{},{},{}",
                generation.index,
                ind.genome,
                l.origin.as_str(),
                l.parents.first().map(String::as_str).unwrap_or(""),
                l.parents.get(1).map(String::as_str).unwrap_or(""),
                fmt(ind.fitness),
                fmt(l.parent_fitness.first().copied()),
                fmt(l.parent_fitness.get(1).copied()),
            )
        })
        .collect()
}

fn io_err(e: std::io::Error) -> EvolutionError {
    EvolutionError::Sink(e.to_string())
}

/// Writes `stats.csv` rows.
pub struct StatsCsv<W: Write> {
    out: W,
}

impl<W: Write> StatsCsv<W> {
    /// Writes the header, then rows as generations arrive.
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{STATS_HEADER}")?;
        Ok(StatsCsv { out })
    }

    /// Appends to output that already has a header.
    pub fn append(out: W) -> Self {
        StatsCsv { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<F: Fitness, W: Write> RunSink<F> for StatsCsv<W> {
    fn on_generation(&mut self, state: &RunState<F>) -> Result<(), EvolutionError> {
        let stats = state
            .generation
            .stats()
            .ok_or(EvolutionError::NotEvaluated(state.generation.index))?;
        writeln!(self.out, "{}", stats_row(state.generation.index, &stats)).map_err(io_err)?;
        self.out.flush().map_err(io_err)
    }
}

/// Writes `lineage.csv` rows.
pub struct LineageCsv<W: Write> {
    out: W,
}

impl<W: Write> LineageCsv<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{LINEAGE_HEADER}")?;
        Ok(LineageCsv { out })
    }

    pub fn append(out: W) -> Self {
        LineageCsv { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<F: Fitness, W: Write> RunSink<F> for LineageCsv<W> {
    fn on_generation(&mut self, state: &RunState<F>) -> Result<(), EvolutionError> {
        for row in lineage_rows(&state.generation) {
            writeln!(self.out, "{row}").map_err(io_err)?;
        }
        self.out.flush().map_err(io_err)
    }
}

/// Keeps every evaluated generation and checkpoint in memory.
#[derive(Debug, Default)]
pub struct Recorder<F> {
    pub generations: Vec<Generation<F>>,
    pub checkpoints: Vec<Checkpoint<F>>,
}

impl<F: Fitness> Recorder<F> {
    pub fn new() -> Self {
        Recorder {
            generations: Vec::new(),
            checkpoints: Vec::new(),
        }
    }

    pub fn stats(&self) -> Vec<GenerationStats<F>> {
        self.generations
            .iter()
            .map(|g| g.stats().expect("recorded generations are evaluated"))
            .collect()
    }
}

impl<F: Fitness> RunSink<F> for Recorder<F> {
    fn on_generation(&mut self, state: &RunState<F>) -> Result<(), EvolutionError> {
        self.generations.push(state.generation.clone());
        Ok(())
    }

    fn on_checkpoint(&mut self, checkpoint: &Checkpoint<F>) -> Result<(), EvolutionError> {
        self.checkpoints.push(checkpoint.clone());
        Ok(())
    }
}
