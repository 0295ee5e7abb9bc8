//! Ground truth and run analytics.
//!
//! Small spaces can be enumerated outright, which gives the true optimum for
//! a deterministic evaluator and a rank for every genome. The rest of the
//! module reads a run's CSV outputs back: parent/child fitness scatter with
//! Pearson correlation, and the condensed per-generation table.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluators::{EvalError, Evaluator};
use crate::evolution::{
    run_from, EngineOptions, EvolutionError, GaParams, Origin, Recorder, RunSink, RunState,
    LINEAGE_HEADER, STATS_HEADER,
};
use crate::genome::{Genome, SearchSpace};
use crate::scalar::Fitness;

/// Default cap on the number of genomes [`enumerate`] will visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 1 << 24;
pub const HISTOGRAM_BINS: usize = 100;
/// Generations shown by [`generation_table`] when present.
pub const TABLE_GENERATIONS: [usize; 10] = [0, 1, 2, 3, 5, 8, 10, 20, 30, 50];

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration needs a deterministic evaluator, {0} is not")]
    NonDeterministic(String),
    #[error("space has {size} genomes, over the enumeration budget of {budget}")]
    BudgetExceeded { size: String, budget: u64 },
    #[error("evaluating {genome} failed: {source}")]
    Evaluation {
        genome: String,
        #[source]
        source: EvalError,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub budget: u64,
    pub workers: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            budget: DEFAULT_ENUMERATION_BUDGET,
            workers: thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Fitness of every genome in a space.
///
/// Genomes are ordered by fitness descending, ties broken by genome string
/// ascending; [`EnumerationReport::rank`] is the 1-based position in that
/// order.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "F: Fitness")]
pub struct EnumerationReport<F> {
    pub space: SearchSpace,
    pub evaluator: String,
    pub total_genomes: u64,
    pub max_fitness: F,
    /// Every genome attaining `max_fitness`, sorted.
    pub argmax: Vec<String>,
    pub min_fitness: F,
    pub argmin: Vec<String>,
    /// Counts over 100 equal bins of `[0, 1]`; the last bin is closed.
    pub histogram: Vec<u64>,
    /// Fitness by genome index (bit `l` of the index is genome bit `l`).
    #[serde(skip)]
    pub values: Vec<F>,
}

fn histogram_bin<F: Fitness>(v: F) -> usize {
    let bin = (v.as_f64() * HISTOGRAM_BINS as f64).floor();
    (bin.max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

/// Evaluates every genome of `space`.
pub fn enumerate<F: Fitness, E: Evaluator<F> + ?Sized>(
    space: &Arc<SearchSpace>,
    evaluator: &E,
    options: EnumerationOptions,
) -> Result<EnumerationReport<F>, OracleError> {
    if !evaluator.info().deterministic {
        return Err(OracleError::NonDeterministic(evaluator.describe()));
    }
    let size = space.size();
    let total = match size.exact() {
        Some(n) if n <= u128::from(options.budget) => n as u64,
        _ => {
            return Err(OracleError::BudgetExceeded {
                size: size.to_string(),
                budget: options.budget,
            })
        }
    };

    let workers = (options.workers.max(1) as u64).min(total) as usize;
    let chunk = total.div_ceil(workers as u64);
    let shards: Vec<Result<Vec<F>, OracleError>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let space = Arc::clone(space);
                scope.spawn(move || {
                    let start = w * chunk;
                    let end = ((w + 1) * chunk).min(total);
                    (start..end)
                        .map(|index| {
                            let genome = Genome::from_index(Arc::clone(&space), index);
                            evaluator.evaluate(&genome).map_err(|source| OracleError::Evaluation {
                                genome: genome.to_string(),
                                source,
                            })
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("enumeration worker panicked"))
            .collect()
    });
    let mut values = Vec::with_capacity(total as usize);
    for shard in shards {
        values.extend(shard?);
    }

    let max = values.iter().copied().fold(F::neg_infinity(), F::max);
    let min = values.iter().copied().fold(F::infinity(), F::min);
    let mut histogram = vec![0u64; HISTOGRAM_BINS];
    let mut argmax = Vec::new();
    let mut argmin = Vec::new();
    for (index, &v) in values.iter().enumerate() {
        histogram[histogram_bin(v)] += 1;
        if v == max {
            argmax.push(Genome::from_index(Arc::clone(space), index as u64).to_string());
        }
        if v == min {
            argmin.push(Genome::from_index(Arc::clone(space), index as u64).to_string());
        }
    }
    argmax.sort();
    argmin.sort();

    Ok(EnumerationReport {
        space: (**space).clone(),
        evaluator: evaluator.describe(),
        total_genomes: total,
        max_fitness: max,
        argmax,
        min_fitness: min,
        argmin,
        histogram,
        values,
    })
}

/// Index of `genome` in enumeration order.
pub fn genome_index(genome: &Genome) -> u64 {
    genome
        .bits()
        .iter()
        .enumerate()
        .fold(0u64, |acc, (l, &b)| if b { acc | (1 << l) } else { acc })
}

impl<F: Fitness> EnumerationReport<F> {
    pub fn fitness_of(&self, genome: &Genome) -> Option<F> {
        self.values.get(genome_index(genome) as usize).copied()
    }

    /// 1-based rank under (fitness descending, genome string ascending).
    pub fn rank(&self, genome: &Genome) -> u64 {
        let own = self.fitness_of(genome).expect("genome belongs to the enumerated space");
        let key = genome.to_string();
        let space = Arc::new(self.space.clone());
        let mut ahead = 0u64;
        for (index, &v) in self.values.iter().enumerate() {
            match v.partial_cmp(&own) {
                Some(Ordering::Greater) => ahead += 1,
                Some(Ordering::Equal) => {
                    let other = Genome::from_index(Arc::clone(&space), index as u64);
                    if other.to_string() < key {
                        ahead += 1;
                    }
                }
                _ => {}
            }
        }
        ahead + 1
    }

    /// All genome indices in rank order.
    pub fn ranking(&self) -> Vec<u64> {
        let space = Arc::new(self.space.clone());
        let mut keyed: Vec<(F, String, u64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, Genome::from_index(Arc::clone(&space), i as u64).to_string(), i as u64))
            .collect();
        keyed.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.cmp(&b.1))
        });
        keyed.into_iter().map(|(_, _, i)| i).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

/// One seeded run measured against the enumeration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub best_genome: String,
    pub best_fitness: f64,
    pub rank: u64,
    pub reached_optimum: bool,
    pub initial_mean: f64,
    pub final_mean: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessStats {
    pub runs: Vec<SeedOutcome>,
    /// Fraction of runs whose best-ever genome attains the global maximum.
    pub success_rate: f64,
    pub mean_rank: f64,
    /// Lower-middle rank for an even number of runs.
    pub median_rank: u64,
}

impl SuccessStats {
    fn from_runs(runs: Vec<SeedOutcome>) -> Self {
        let n = runs.len().max(1) as f64;
        let success_rate = runs.iter().filter(|r| r.reached_optimum).count() as f64 / n;
        let mean_rank = runs.iter().map(|r| r.rank as f64).sum::<f64>() / n;
        let mut ranks: Vec<u64> = runs.iter().map(|r| r.rank).collect();
        ranks.sort_unstable();
        let median_rank = ranks.get(ranks.len().saturating_sub(1) / 2).copied().unwrap_or(0);
        SuccessStats {
            runs,
            success_rate,
            mean_rank,
            median_rank,
        }
    }
}

/// Runs the search from each given starting state and scores every run
/// against `report`.
pub fn success_rate_from<F, E, I>(
    report: &EnumerationReport<F>,
    evaluator: &E,
    options: EngineOptions,
    starts: I,
) -> Result<SuccessStats, OracleError>
where
    F: Fitness,
    E: Evaluator<F> + ?Sized,
    I: IntoIterator<Item = RunState<F>>,
{
    let mut runs = Vec::new();
    for state in starts {
        let seed = state.params.seed;
        let space = Arc::clone(&state.space);
        let mut recorder = Recorder::new();
        let result = {
            let mut sinks: [&mut dyn RunSink<F>; 1] = [&mut recorder];
            run_from(state, evaluator, options, &mut sinks)?
        };
        let best = Genome::parse(space, &result.best.genome).expect("engine emits valid genomes");
        let true_fitness = report.fitness_of(&best).expect("same space");
        let stats = recorder.stats();
        runs.push(SeedOutcome {
            seed,
            best_genome: result.best.genome.clone(),
            best_fitness: result.best.fitness.as_f64(),
            rank: report.rank(&best),
            reached_optimum: true_fitness >= report.max_fitness,
            initial_mean: stats.first().map_or(f64::NAN, |s| s.mean.as_f64()),
            final_mean: stats.last().map_or(f64::NAN, |s| s.mean.as_f64()),
        });
    }
    Ok(SuccessStats::from_runs(runs))
}

/// Runs the search with seeds `params.seed, params.seed + 1, ...`.
pub fn success_rate<F: Fitness, E: Evaluator<F> + ?Sized>(
    space: &Arc<SearchSpace>,
    params: &GaParams,
    evaluator: &E,
    report: &EnumerationReport<F>,
    num_seeds: usize,
) -> Result<SuccessStats, OracleError> {
    let starts = (0..num_seeds as u64)
        .map(|i| {
            let mut p = params.clone();
            p.seed = params.seed.wrapping_add(i);
            RunState::new(Arc::clone(space), p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    success_rate_from(report, evaluator, EngineOptions::default(), starts)
}

/// One mutation or crossover event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub generation: usize,
    pub origin: Origin,
    /// Parent fitness; the mean of both parents for crossover.
    pub parent_fitness: f64,
    pub child_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub events: usize,
    /// `None` with fewer than two events or zero variance.
    pub pearson: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageAnalysis {
    pub rows: Vec<ScatterRow>,
    pub mutation: CorrelationSummary,
    pub crossover: CorrelationSummary,
    pub overall: CorrelationSummary,
}

impl LineageAnalysis {
    pub fn scatter_csv(&self) -> String {
        let mut out = String::from("generation,origin,parent_fitness,child_fitness\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6}",
                r.generation,
                r.origin.as_str(),
                r.parent_fitness,
                r.child_fitness
            );
        }
        out
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn summarize<'a>(rows: impl Iterator<Item = &'a ScatterRow>) -> CorrelationSummary {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows.map(|r| (r.parent_fitness, r.child_fitness)).unzip();
    CorrelationSummary {
        events: xs.len(),
        pearson: pearson(&xs, &ys),
    }
}

fn csv_reader<'a>(text: &'a str, header: &str) -> Result<csv::Reader<&'a [u8]>, OracleError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let found = reader
        .headers()
        .map_err(|e| OracleError::Csv(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(OracleError::Csv(format!("expected header {header:?}, found {found:?}")));
    }
    Ok(reader)
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: u64) -> Result<T, OracleError> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| OracleError::Csv(format!("line {line}: bad value in column {}", i + 1)))
}

/// Parent/child fitness pairs of every mutation and crossover event in a
/// lineage CSV, with Pearson correlation per origin.
pub fn parent_child_analysis(lineage_csv: &str) -> Result<LineageAnalysis, OracleError> {
    let mut reader = csv_reader(lineage_csv, LINEAGE_HEADER)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| OracleError::Csv(e.to_string()))?;
        if record.len() != 8 {
            return Err(OracleError::Csv(format!("line {line}: expected 8 fields")));
        }
        let origin = Origin::parse(&record[2])
            .ok_or_else(|| OracleError::Csv(format!("line {line}: unknown origin {:?}", &record[2])))?;
        let parent_fitness = match origin {
            Origin::Mutation => field::<f64>(&record, 6, line)?,
            Origin::Crossover => {
                (field::<f64>(&record, 6, line)? + field::<f64>(&record, 7, line)?) / 2.0
            }
            Origin::Init | Origin::SelectionCopy => continue,
        };
        rows.push(ScatterRow {
            generation: field(&record, 0, line)?,
            origin,
            parent_fitness,
            child_fitness: field(&record, 5, line)?,
        });
    }
    Ok(LineageAnalysis {
        mutation: summarize(rows.iter().filter(|r| r.origin == Origin::Mutation)),
        crossover: summarize(rows.iter().filter(|r| r.origin == Origin::Crossover)),
        overall: summarize(rows.iter()),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub generation: usize,
    pub max: String,
    pub min: String,
    pub mean: String,
    pub median: String,
    pub stddev: String,
    pub best_genome: String,
}

/// Reads a `stats.csv`.
pub fn parse_stats_csv(text: &str) -> Result<Vec<StatsRow>, OracleError> {
    let mut reader = csv_reader(text, STATS_HEADER)?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| OracleError::Csv(e.to_string()))?;
        if record.len() != 7 {
            return Err(OracleError::Csv(format!("line {line}: expected 7 fields")));
        }
        for col in 1..6 {
            field::<f64>(&record, col, line)?;
        }
        rows.push(StatsRow {
            generation: field(&record, 0, line)?,
            max: record[1].to_string(),
            min: record[2].to_string(),
            mean: record[3].to_string(),
            median: record[4].to_string(),
            stddev: record[5].to_string(),
            best_genome: record[6].to_string(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationTable {
    pub rows: Vec<StatsRow>,
    /// Generations from the standard row set that the run did not have.
    pub missing: Vec<usize>,
}

impl GenerationTable {
    pub fn render_text(&self) -> String {
        let header = ["Gen", "Max", "Min", "Avg", "Med", "Std-D", "Best Network Structure"];
        let cells: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    format!("{:02}", r.generation),
                    r.max.clone(),
                    r.min.clone(),
                    r.mean.clone(),
                    r.median.clone(),
                    r.stddev.clone(),
                    r.best_genome.clone(),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, row: &[&str]| {
            let mut parts = Vec::new();
            for (i, (c, w)) in row.iter().zip(&widths).enumerate() {
                if i == 0 || i == 6 {
                    parts.push(format!("{c:<w$}"));
                } else {
                    parts.push(format!("{c:>w$}"));
                }
            }
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&mut out, &rule.iter().map(String::as_str).collect::<Vec<_>>());
        for row in &cells {
            line(&mut out, &row.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = format!("{STATS_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.generation, r.max, r.min, r.mean, r.median, r.stddev, r.best_genome
            );
        }
        out
    }
}

/// Generations 0, 1, 2, 3, 5, 8, 10, 20, 30 and 50 of a `stats.csv`, where
/// present.
pub fn generation_table(stats_csv: &str) -> Result<GenerationTable, OracleError> {
    let all = parse_stats_csv(stats_csv)?;
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for g in TABLE_GENERATIONS {
        match all.iter().find(|r| r.generation == g) {
            Some(r) => rows.push(r.clone()),
            None => missing.push(g),
        }
    }
    Ok(GenerationTable { rows, missing })
}
