//! Run-log files. One directory per seed run:
//!
//! - `iterations.jsonl`: the pre-training state on line one, then one
//!   diagnostics row per update, appended and flushed as they happen.
//! - `episodes.jsonl`: every training episode in collection order.
//! - `summary.json`: end-of-run scalars (or the failure marker).
//! - `snapshot.json`: the best policy measured on the benchmark, with
//!   everything needed to re-evaluate it standalone.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::IterationRow;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::estimator::{EpisodeRecord, SuccessIndicator};
use crate::learner::HistoryPolicy;

use super::config::EnvironmentConfig;

pub const ITERATIONS_FILE: &str = "iterations.jsonl";
pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

/// The state before any update: line one of `iterations.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialRow {
    /// Always 0; updates count from 1.
    pub iter: usize,
    pub scheduler: String,
    pub entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_success: Option<f64>,
}

/// End-of-run scalars. `failure` marks a partial log: everything written
/// before the error stands, nothing after it exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub scheduler: String,
    pub iterations_run: usize,
    pub training_episodes: usize,
    pub eval_episodes: usize,
    pub final_entropy: f64,
    pub best_global_success: f64,
    pub best_iteration: usize,
    pub entropy_at_best: f64,
    pub final_phi: DistributionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// A self-contained best-policy record: enough to re-run evaluation
/// without the original config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub environment: EnvironmentConfig,
    pub indicator: SuccessIndicator,
    pub scheduler: String,
    pub seed: u64,
    /// Update index the snapshot was measured after (0 = untrained).
    pub iteration: usize,
    /// Training episodes consumed by then; fixes ambient competence for
    /// environments that grow with it.
    pub training_episodes: usize,
    pub global_success: f64,
    pub phi: DistributionSpec,
    pub policy: HistoryPolicy,
}

impl SnapshotFile {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Streaming writer; every line is flushed so a crash mid-run leaves a
/// readable partial log.
pub struct RunLogWriter {
    dir: PathBuf,
    iterations: BufWriter<File>,
    episodes: BufWriter<File>,
}

impl RunLogWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let iterations = BufWriter::new(File::create(dir.join(ITERATIONS_FILE))?);
        let episodes = BufWriter::new(File::create(dir.join(EPISODES_FILE))?);
        Ok(Self {
            dir: dir.to_path_buf(),
            iterations,
            episodes,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_initial(&mut self, row: &InitialRow) -> Result<()> {
        writeln!(self.iterations, "{}", serde_json::to_string(row)?)?;
        self.iterations.flush()?;
        Ok(())
    }

    pub fn write_row(&mut self, row: &IterationRow) -> Result<()> {
        writeln!(self.iterations, "{}", serde_json::to_string(row)?)?;
        self.iterations.flush()?;
        Ok(())
    }

    pub fn write_episodes(&mut self, records: &[EpisodeRecord]) -> Result<()> {
        for record in records {
            writeln!(self.episodes, "{}", serde_json::to_string(record)?)?;
        }
        self.episodes.flush()?;
        Ok(())
    }

    pub fn write_summary(&self, summary: &RunSummary) -> Result<()> {
        write_json(&self.dir.join(SUMMARY_FILE), summary)
    }

    pub fn write_snapshot(&self, snapshot: &SnapshotFile) -> Result<()> {
        snapshot.save(&self.dir.join(SNAPSHOT_FILE))
    }
}

/// Everything one seed run wrote, read back.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub initial: InitialRow,
    pub rows: Vec<IterationRow>,
    pub episodes: Vec<EpisodeRecord>,
    pub summary: RunSummary,
}

impl RunLog {
    pub fn load(dir: &Path) -> Result<Self> {
        let mut lines = read_lines(&dir.join(ITERATIONS_FILE))?;
        if lines.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "empty iteration log in {}",
                dir.display()
            )));
        }
        let initial: InitialRow = serde_json::from_str(&lines.remove(0))?;
        let rows: std::result::Result<Vec<IterationRow>, _> =
            lines.iter().map(|l| serde_json::from_str(l)).collect();
        let episodes: std::result::Result<Vec<EpisodeRecord>, _> = read_lines(
            &dir.join(EPISODES_FILE),
        )?
        .iter()
        .map(|l| serde_json::from_str(l))
        .collect();
        let summary: RunSummary =
            serde_json::from_str(&std::fs::read_to_string(dir.join(SUMMARY_FILE))?)?;
        Ok(Self {
            initial,
            rows: rows?,
            episodes: episodes?,
            summary,
        })
    }

    /// Iteration indices as written: 0 for the initial state, then each
    /// update's 1-based index in order.
    pub fn iteration_indices(&self) -> Vec<usize> {
        let mut ids = vec![self.initial.iter];
        ids.extend(self.rows.iter().map(|r| r.iter));
        ids
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}
