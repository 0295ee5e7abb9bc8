//! `dagenome`: run, resume and inspect genetic searches over staged network
//! structures.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use dagenome::evolution::{run_from, RunSink};
use dagenome::oracle::{self, EnumerationOptions};
use dagenome::{
    decode_network, export_graph, Checkpoint, EngineOptions, ExportFormat, Genome, Preset,
    RunState, SearchSpace,
};

use config::{Overrides, ResolvedConfig, RunConfig};
use output::RunDir;

#[derive(Parser)]
#[command(name = "dagenome", version, about = "Genetic search over staged DAG network encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    #[value(name = "mnist-paper")]
    MnistPaper,
    #[value(name = "cifar10-paper")]
    Cifar10Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::MnistPaper => Preset::MnistPaper,
            PresetArg::Cifar10Paper => Preset::Cifar10Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Start a search; writes config.json, stats.csv, lineage.csv,
    /// checkpoint.json and best.json to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop cleanly after this generation has been checkpointed.
        #[arg(long, hide = true)]
        stop_after_generation: Option<usize>,
    },
    /// Continue a search from its checkpoint.json.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, hide = true)]
        stop_after_generation: Option<usize>,
    },
    /// Score every genome of the configured space and print a JSON report.
    Enumerate {
        #[arg(long)]
        config: PathBuf,
        /// Largest number of genomes to score.
        #[arg(long, default_value_t = oracle::DEFAULT_ENUMERATION_BUDGET)]
        budget: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the network a genome string decodes to.
    Decode {
        #[arg(long)]
        space: SearchSpace,
        #[arg(long)]
        genome: String,
        #[arg(long, value_enum, default_value = "dot")]
        format: FormatArg,
    },
    /// Summary table of a run's statistics.
    Stats {
        #[arg(long)]
        run: PathBuf,
        /// Print the selected rows as CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
    /// Parent/child fitness correlation of a run's mutation and crossover events.
    Lineage {
        #[arg(long)]
        run: PathBuf,
        /// Also write the scatter points to this CSV file.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Config(anyhow::Error),
    Evaluator(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Evaluator(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(io_err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            preset,
            seed,
            out,
            stop_after_generation,
        } => cmd_run(
            &config,
            Overrides {
                preset: preset.map(Preset::from),
                seed,
                output_dir: out,
            },
            stop_after_generation,
        ),
        Command::Resume {
            checkpoint,
            stop_after_generation,
        } => cmd_resume(&checkpoint, stop_after_generation),
        Command::Enumerate {
            config,
            budget,
            workers,
        } => cmd_enumerate(&config, budget, workers),
        Command::Decode {
            space,
            genome,
            format,
        } => cmd_decode(space, &genome, format),
        Command::Stats { run, csv } => cmd_stats(&run, csv),
        Command::Lineage { run, scatter } => cmd_lineage(&run, scatter.as_deref()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            let (label, err) = match &failure {
                Failure::Config(e) => ("configuration error", e),
                Failure::Evaluator(e) => ("evaluator failure", e),
                Failure::Io(e) => ("i/o error", e),
            };
            eprintln!("error: {label}: {err:#}");
            ExitCode::from(failure.code())
        }
    }
}

fn cmd_run(path: &Path, overrides: Overrides, stop: Option<usize>) -> CliResult {
    let config = RunConfig::parse(&read(path)?)
        .and_then(|c| c.resolve(&overrides))
        .map_err(config_err)?;
    let dir = RunDir::create(&config.output_dir).map_err(io_err)?;
    dir.write_config(&config).map_err(io_err)?;
    let state = RunState::new(Arc::new(config.space.clone()), config.params.clone())
        .map_err(config_err)?;
    execute(&config, dir, state, true, stop)
}

fn cmd_resume(checkpoint_path: &Path, stop: Option<usize>) -> CliResult {
    let run_dir = checkpoint_path
        .parent()
        .map(|p| if p.as_os_str().is_empty() { Path::new(".") } else { p })
        .ok_or_else(|| config_err(anyhow!("checkpoint path has no directory")))?;
    let config = ResolvedConfig::from_json(&read(&run_dir.join(output::CONFIG_FILE))?)
        .map_err(config_err)?;
    let checkpoint = Checkpoint::from_json(&read(checkpoint_path)?).map_err(config_err)?;
    let state = checkpoint
        .into_state(Some(&config.params))
        .map_err(config_err)?;
    if state.space.nodes_per_stage() != config.space.nodes_per_stage() {
        return Err(config_err(anyhow!(
            "checkpoint space {} differs from config space {}",
            state.space,
            config.space
        )));
    }
    let dir = RunDir::open(run_dir);
    // drop rows of generations the checkpoint does not cover
    let keep_below = state.generation.index + usize::from(state.is_evaluated());
    dir.truncate_csvs(keep_below).map_err(io_err)?;
    execute(&config, dir, state, false, stop)
}

fn execute(
    config: &ResolvedConfig,
    dir: RunDir,
    state: RunState,
    fresh: bool,
    stop: Option<usize>,
) -> CliResult {
    let evaluator = config
        .evaluator
        .build(state.cache.total_evaluations() as u64);
    let options = EngineOptions {
        max_parallel_evals: config.evaluator.max_parallel_evals(),
        stop_after_generation: stop,
    };
    let mut files = dir.sinks(fresh).map_err(io_err)?;
    let result = {
        let mut sinks: Vec<&mut dyn RunSink<f64>> = files.as_sinks();
        run_from(state, evaluator.as_ref(), options, &mut sinks)
    };
    drop(evaluator);
    match result {
        Ok(result) => {
            dir.write_best(&result.best).map_err(io_err)?;
            if result.completed {
                println!(
                    "best {} fitness {:.6} (generation {})",
                    result.best.genome, result.best.fitness, result.best.generation
                );
            } else {
                println!(
                    "stopped after generation {}; resume with --checkpoint {}",
                    result.final_generation.index,
                    dir.checkpoint_path().display()
                );
            }
            Ok(())
        }
        Err(dagenome::evolution::EvolutionError::Evaluation {
            failure,
            checkpoint,
            checkpoint_written,
        }) => {
            if !checkpoint_written {
                dir.write_checkpoint_json(&checkpoint).map_err(io_err)?;
            }
            Err(Failure::Evaluator(anyhow!(
                "[{}] {failure}; checkpoint saved to {}",
                failure.source.kind(),
                dir.checkpoint_path().display()
            )))
        }
        Err(e @ dagenome::evolution::EvolutionError::Sink(_)) => Err(io_err(e)),
        Err(e) => Err(config_err(e)),
    }
}

fn cmd_enumerate(path: &Path, budget: u64, workers: Option<usize>) -> CliResult {
    let file = RunConfig::parse(&read(path)?).map_err(config_err)?;
    let preset = file.preset;
    let space = file
        .space
        .or_else(|| preset.map(Preset::space))
        .ok_or_else(|| config_err(anyhow!("config needs a search space or a preset")))?;
    let spec = file.evaluator.unwrap_or_default();
    spec.validate().map_err(config_err)?;
    let evaluator = spec.build(0);
    let mut options = EnumerationOptions {
        budget,
        ..Default::default()
    };
    if let Some(w) = workers {
        options.workers = w.max(1);
    }
    let report = oracle::enumerate(&Arc::new(space), evaluator.as_ref(), options).map_err(
        |e| match e {
            oracle::OracleError::Evaluation { .. } => Failure::Evaluator(e.into()),
            other => config_err(other),
        },
    )?;
    println!("{}", report.to_json());
    Ok(())
}

fn cmd_decode(space: SearchSpace, genome: &str, format: FormatArg) -> CliResult {
    let genome = Genome::parse(Arc::new(space), genome).map_err(config_err)?;
    let format = match format {
        FormatArg::Dot => ExportFormat::Dot,
        FormatArg::Json => ExportFormat::Json,
    };
    print!("{}", export_graph(&decode_network(&genome), format));
    Ok(())
}

fn cmd_stats(run: &Path, csv: bool) -> CliResult {
    let table = oracle::generation_table(&read(&run.join(output::STATS_FILE))?).map_err(config_err)?;
    if csv {
        print!("{}", table.render_csv());
    } else {
        print!("{}", table.render_text());
    }
    if !table.missing.is_empty() {
        let missing: Vec<String> = table.missing.iter().map(usize::to_string).collect();
        eprintln!("note: run has no rows for generations {}", missing.join(", "));
    }
    Ok(())
}

fn cmd_lineage(run: &Path, scatter: Option<&Path>) -> CliResult {
    let analysis =
        oracle::parent_child_analysis(&read(&run.join(output::LINEAGE_FILE))?).map_err(config_err)?;
    let show = |name: &str, s: &oracle::CorrelationSummary| match s.pearson {
        Some(r) => println!("{name:<10} events {:>6}  pearson {r:+.4}", s.events),
        None => println!("{name:<10} events {:>6}  pearson n/a", s.events),
    };
    show("mutation", &analysis.mutation);
    show("crossover", &analysis.crossover);
    show("overall", &analysis.overall);
    if let Some(path) = scatter {
        fs::write(path, analysis.scatter_csv())
            .with_context(|| format!("writing {}", path.display()))
            .map_err(io_err)?;
    }
    Ok(())
}
