//! Reference evaluator process for the line protocol.
//!
//! Reads one JSON request per line from stdin and answers each with
//! `{"id":<id>,"fitness":<value>}` on stdout. A trainer only has to do the
//! same: read `id` and `genome` (or the embedded `network`), train, reply.
//!
//! `--score surrogate` replies with the built-in structural score instead
//! of the constant, and `--delay-ms` slows every reply down.
//!
//! `--fault` makes it misbehave after `--after` good replies, for testing:
//! `timeout` stops answering, `malformed` sends non-JSON, `out-of-range`
//! replies 1.2, `die` exits, `error` sends an error reply. With
//! `--fail-once-marker PATH` the fault fires only while PATH does not exist
//! and creates it, so a restarted evaluator behaves.

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use dagenome::evaluators::surrogate_fitness;
use dagenome::{Genome, SearchSpace, SurrogateWeights};
use serde_json::{json, Value};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Score {
    Constant,
    Surrogate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    None,
    Timeout,
    Malformed,
    OutOfRange,
    Die,
    Error,
}

#[derive(Parser)]
#[command(name = "stub-evaluator", about = "Reference evaluator speaking the line protocol")]
struct Args {
    /// Fitness returned for every genome.
    #[arg(long, default_value_t = 0.5)]
    fitness: f64,
    #[arg(long, value_enum, default_value = "constant")]
    score: Score,
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    #[arg(long, value_enum, default_value = "none")]
    fault: Fault,
    /// Good replies before the fault fires.
    #[arg(long, default_value_t = 0)]
    after: u64,
    #[arg(long)]
    fail_once_marker: Option<PathBuf>,
    /// How long the `timeout` fault stalls.
    #[arg(long, default_value_t = 3600.0)]
    stall_secs: f64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let armed = match &args.fail_once_marker {
        Some(marker) => !marker.exists(),
        None => true,
    };
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    let mut served = 0u64;
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let request = serde_json::from_str::<Value>(&line).unwrap_or(Value::Null);
        let id = request.get("id").cloned().unwrap_or(Value::Null);
        if args.delay_ms > 0 {
            thread::sleep(Duration::from_millis(args.delay_ms));
        }
        let reply = if armed && args.fault != Fault::None && served >= args.after {
            if let Some(marker) = &args.fail_once_marker {
                let _ = std::fs::write(marker, b"fired\n");
            }
            match args.fault {
                Fault::Timeout => {
                    thread::sleep(Duration::from_secs_f64(args.stall_secs));
                    return ExitCode::SUCCESS;
                }
                Fault::Die => return ExitCode::from(1),
                Fault::Malformed => "{\"id\": oops".to_string(),
                Fault::OutOfRange => json!({"id": id, "fitness": 1.2}).to_string(),
                Fault::Error => json!({"id": id, "error": "training diverged"}).to_string(),
                Fault::None => unreachable!(),
            }
        } else {
            match score(&args, &request) {
                Ok(fitness) => json!({"id": id, "fitness": fitness}).to_string(),
                Err(message) => json!({"id": id, "error": message}).to_string(),
            }
        };
        served += 1;
        if writeln!(stdout, "{reply}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}

fn score(args: &Args, request: &Value) -> Result<f64, String> {
    if args.score == Score::Constant {
        return Ok(args.fitness);
    }
    let space: SearchSpace = request
        .get("space")
        .cloned()
        .ok_or("request has no space")
        .and_then(|v| serde_json::from_value(v).map_err(|_| "bad space"))?;
    let text = request
        .get("genome")
        .and_then(Value::as_str)
        .ok_or("request has no genome")?;
    let genome = Genome::parse(Arc::new(space), text).map_err(|e| e.to_string())?;
    Ok(surrogate_fitness(&genome, &SurrogateWeights::default()))
}
