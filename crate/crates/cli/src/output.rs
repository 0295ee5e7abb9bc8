//! Files of a run directory.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use dagenome::evolution::{EvolutionError, LineageCsv, RunSink, StatsCsv};
use dagenome::{BestEver, Checkpoint, RunState};

use crate::config::ResolvedConfig;

pub const CONFIG_FILE: &str = "config.json";
pub const STATS_FILE: &str = "stats.csv";
pub const LINEAGE_FILE: &str = "lineage.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const BEST_FILE: &str = "best.json";

/// Replaces `path` with `contents` via a temporary file and a rename, so a
/// reader never sees a partial file.
fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn best_json(best: &BestEver) -> String {
    serde_json::to_string_pretty(best).expect("best serializes") + "\n"
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(RunDir::open(root))
    }

    pub fn open(root: &Path) -> Self {
        RunDir {
            root: root.to_path_buf(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.path(CHECKPOINT_FILE)
    }

    pub fn write_config(&self, config: &ResolvedConfig) -> Result<()> {
        let path = self.path(CONFIG_FILE);
        write_atomic(&path, &config.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_best(&self, best: &BestEver) -> Result<()> {
        let path = self.path(BEST_FILE);
        write_atomic(&path, &best_json(best)).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_checkpoint_json(&self, json: &str) -> Result<()> {
        let path = self.checkpoint_path();
        write_atomic(&path, json).with_context(|| format!("writing {}", path.display()))
    }

    /// Keeps the header and the rows of generations below `keep_below` in
    /// both CSV files.
    pub fn truncate_csvs(&self, keep_below: usize) -> Result<()> {
        for name in [STATS_FILE, LINEAGE_FILE] {
            let path = self.path(name);
            let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            let mut kept = String::new();
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.with_context(|| format!("reading {}", path.display()))?;
                let generation = line.split(',').next().and_then(|g| g.parse::<usize>().ok());
                let keep = match generation {
                    Some(g) => g < keep_below,
                    None => i == 0,
                };
                if keep {
                    kept.push_str(&line);
                    kept.push('\n');
                }
            }
            write_atomic(&path, &kept).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// Opens the per-generation outputs; `fresh` starts new CSV files,
    /// otherwise rows are appended.
    pub fn sinks(&self, fresh: bool) -> Result<RunFiles> {
        let open = |name: &str| -> Result<BufWriter<File>> {
            let path = self.path(name);
            let file = if fresh {
                File::create(&path)
            } else {
                OpenOptions::new().append(true).open(&path)
            }
            .with_context(|| format!("opening {}", path.display()))?;
            Ok(BufWriter::new(file))
        };
        let (stats, lineage) = if fresh {
            (StatsCsv::new(open(STATS_FILE)?)?, LineageCsv::new(open(LINEAGE_FILE)?)?)
        } else {
            (StatsCsv::append(open(STATS_FILE)?), LineageCsv::append(open(LINEAGE_FILE)?))
        };
        Ok(RunFiles {
            stats,
            lineage,
            snapshots: Snapshots { dir: self.clone() },
        })
    }
}

/// Writes `best.json` after every generation and `checkpoint.json` at every
/// checkpoint.
pub struct Snapshots {
    dir: RunDir,
}

fn sink_err(e: anyhow::Error) -> EvolutionError {
    EvolutionError::Sink(format!("{e:#}"))
}

impl RunSink<f64> for Snapshots {
    fn on_generation(&mut self, state: &RunState) -> Result<(), EvolutionError> {
        match &state.best {
            Some(best) => self.dir.write_best(best).map_err(sink_err),
            None => Ok(()),
        }
    }

    fn on_checkpoint(&mut self, checkpoint: &Checkpoint) -> Result<(), EvolutionError> {
        self.dir.write_checkpoint_json(&checkpoint.to_json()).map_err(sink_err)
    }
}

pub struct RunFiles {
    stats: StatsCsv<BufWriter<File>>,
    lineage: LineageCsv<BufWriter<File>>,
    snapshots: Snapshots,
}

impl RunFiles {
    pub fn as_sinks(&mut self) -> Vec<&mut dyn RunSink<f64>> {
        vec![&mut self.stats, &mut self.lineage, &mut self.snapshots]
    }
}
