//! Newline-delimited JSON protocol to an external trainer process.
//!
//! The child reads one request per line on stdin and answers with one line
//! on stdout:
//!
//! ```text
//! > {"id":0,"genome":"0-01|...","space":{"stages":[3,4,5]},"network":{...}}
//! < {"id":0,"fitness":0.7606}
//! < {"id":0,"error":"out of memory"}
//! ```
//!
//! `network` is the decoder's JSON network document. Up to `max_sessions`
//! children run at once; each handles its requests one at a time.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{CostHint, EvalError, Evaluator, EvaluatorInfo};
use crate::decoder::{decode_network, NetworkDocument};
use crate::genome::{Genome, SearchSpace};
use crate::scalar::Fitness;

pub const DEFAULT_EVAL_TIMEOUT: Duration = Duration::from_secs(3600);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolRequest {
    pub id: u64,
    pub genome: String,
    pub space: SearchSpace,
    pub network: NetworkDocument,
}

impl ProtocolRequest {
    pub fn new(id: u64, genome: &Genome) -> Self {
        ProtocolRequest {
            id,
            genome: genome.to_string(),
            space: genome.space().clone(),
            network: NetworkDocument::from_graph(&decode_network(genome)),
        }
    }

    /// The request as sent on the wire, including the trailing newline.
    pub fn to_line(&self) -> String {
        let mut line = serde_json::to_string(self).expect("plain data serializes");
        line.push('\n');
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResponse {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ProtocolResponse {
    /// Checks a raw response line against request `id`.
    pub fn interpret(line: &str, id: u64) -> Result<f64, EvalError> {
        let response: ProtocolResponse = serde_json::from_str(line.trim_end())
            .map_err(|e| EvalError::Malformed(format!("{e}: {:?}", truncate(line))))?;
        if response.id != id {
            return Err(EvalError::Malformed(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        match (response.fitness, response.error) {
            (_, Some(message)) => Err(EvalError::Reported(message)),
            (Some(value), None) if value.is_finite() && (0.0..=1.0).contains(&value) => Ok(value),
            (Some(value), None) => Err(EvalError::OutOfRange(value)),
            (None, None) => Err(EvalError::Malformed(
                "response has neither fitness nor error".into(),
            )),
        }
    }
}

fn truncate(line: &str) -> &str {
    match line.char_indices().nth(200) {
        Some((i, _)) => &line[..i],
        None => line,
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(command: &[String]) -> Result<Self, EvalError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| EvalError::Spawn(std::io::Error::other("empty command")))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(EvalError::Spawn)?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let failed = line.is_err();
                if tx.send(line).is_err() || failed {
                    break;
                }
            }
        });
        Ok(Session {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exit_status(&mut self) -> String {
        // give the child a moment to be reaped after closing stdout
        for _ in 0..50 {
            if let Ok(Some(status)) = self.child.try_wait() {
                return status.to_string();
            }
            thread::sleep(Duration::from_millis(10));
        }
        "still running but closed its output".into()
    }

    fn round_trip(&mut self, line: &str, id: u64, timeout: Duration) -> Result<f64, EvalError> {
        if let Err(e) = self
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
        {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Err(EvalError::ProcessExited(self.exit_status()));
            }
            return Err(EvalError::Io(e));
        }
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(reply)) => ProtocolResponse::interpret(&reply, id),
            Ok(Err(e)) => Err(EvalError::Io(e)),
            Err(RecvTimeoutError::Timeout) => Err(EvalError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(EvalError::ProcessExited(self.exit_status())),
        }
    }

    fn shutdown(mut self) {
        drop(self.stdin);
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

struct Pool {
    idle: Vec<Session>,
    live: usize,
}

/// Evaluator backed by external processes speaking the line protocol.
pub struct ExternalEvaluator {
    command: Vec<String>,
    timeout: Duration,
    max_sessions: usize,
    next_id: AtomicU64,
    pool: Mutex<Pool>,
    available: Condvar,
}

impl ExternalEvaluator {
    /// `command[0]` is the program, the rest its arguments. Children are
    /// started lazily on first use.
    pub fn new(command: Vec<String>, timeout: Duration, max_sessions: usize) -> Self {
        ExternalEvaluator {
            command,
            timeout,
            max_sessions: max_sessions.max(1),
            next_id: AtomicU64::new(0),
            pool: Mutex::new(Pool {
                idle: Vec::new(),
                live: 0,
            }),
            available: Condvar::new(),
        }
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn acquire(&self) -> Result<Session, EvalError> {
        let mut pool = self.pool.lock().expect("pool lock");
        loop {
            if let Some(session) = pool.idle.pop() {
                return Ok(session);
            }
            if pool.live < self.max_sessions {
                pool.live += 1;
                drop(pool);
                return Session::spawn(&self.command).inspect_err(|_| {
                    self.pool.lock().expect("pool lock").live -= 1;
                    self.available.notify_one();
                });
            }
            pool = self.available.wait(pool).expect("pool lock");
        }
    }

    fn release(&self, session: Session, healthy: bool) {
        let mut pool = self.pool.lock().expect("pool lock");
        if healthy {
            pool.idle.push(session);
        } else {
            pool.live -= 1;
            drop(pool);
            session.shutdown();
        }
        self.available.notify_one();
    }

    pub fn evaluate_raw(&self, genome: &Genome) -> Result<f64, EvalError> {
        let mut session = self.acquire()?;
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let line = ProtocolRequest::new(id, genome).to_line();
        let result = session.round_trip(&line, id, self.timeout);
        // the session stays in sync only when a well-formed line came back
        let healthy = matches!(
            result,
            Ok(_) | Err(EvalError::OutOfRange(_)) | Err(EvalError::Reported(_))
        );
        self.release(session, healthy);
        result
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        if let Ok(pool) = self.pool.get_mut() {
            for session in pool.idle.drain(..) {
                session.shutdown();
            }
        }
    }
}

impl<F: Fitness> Evaluator<F> for ExternalEvaluator {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        self.evaluate_raw(genome).map(F::from_f64_lossy)
    }

    fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            deterministic: false,
            cost_hint: CostHint::Expensive,
        }
    }

    fn describe(&self) -> String {
        format!("external({})", self.command.join(" "))
    }
}
