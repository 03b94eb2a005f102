//! Result rows, per-cell aggregates, and their CSV and JSON files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{AnomalyKind, TrialResult};
use crate::error::{Error, Result};

use super::plan::{Cell, ExperimentPlan, Format, Task};

pub const SCHEMA_VERSION: &str = "popproto-results/1";

/// One trial. Field order is the CSV column order; `y` is appended after
/// the fixed columns and is empty outside majority runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub task: Task,
    pub n: u64,
    pub x: u64,
    pub m: Option<u64>,
    pub seed: u64,
    pub trial: u64,
    /// Empty when the run ended without a common output.
    pub output: String,
    pub correct: bool,
    pub panic: bool,
    pub anomaly_kind: Option<AnomalyKind>,
    pub interactions: u64,
    pub parallel_time: f64,
    pub silent: bool,
    pub distinct_states: u64,
    pub y: Option<u64>,
}

impl TrialRow {
    pub fn new(cell: &Cell, seed: u64, trial: u64, r: &TrialResult, correct: bool) -> Self {
        TrialRow {
            task: cell.task,
            n: cell.n as u64,
            x: cell.x as u64,
            m: cell.m,
            seed,
            trial,
            output: r.output.map(|o| o.to_string()).unwrap_or_default(),
            correct,
            panic: r.anomaly.is_some(),
            anomaly_kind: r.anomaly.map(|a| a.kind),
            interactions: r.interactions_total,
            parallel_time: r.parallel_time,
            silent: r.silent,
            distinct_states: r.distinct_states,
            y: cell.y.map(|y| y as u64),
        }
    }

    /// Drills stop at their first anomaly, so such rows carry no answer.
    pub fn completed(&self) -> bool {
        !(self.task.is_drill() && self.panic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub task: Task,
    pub n: u64,
    pub x: u64,
    pub m: Option<u64>,
    pub y: Option<u64>,
    pub trials: u64,
    /// Trials that ran to the end (all but anomaly-stopped drill trials).
    pub completed: u64,
    /// Share of completed trials with a correct answer.
    pub correctness_rate: Option<f64>,
    pub panic_rate: f64,
    pub clock_anomalies: u64,
    pub protocol_anomalies: u64,
    /// Parallel time to silence over silent trials.
    pub mean_parallel_time: Option<f64>,
    pub median_parallel_time: Option<f64>,
    pub p95_parallel_time: Option<f64>,
    pub mean_interactions: f64,
    pub max_distinct_states: u64,
}

/// Nearest-rank quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Groups rows by (task, n, x, m, y) in order of first appearance.
pub fn aggregate(rows: &[TrialRow]) -> Vec<AggregateStats> {
    let mut groups: Vec<((Task, u64, u64, Option<u64>, Option<u64>), Vec<&TrialRow>)> = Vec::new();
    for r in rows {
        let key = (r.task, r.n, r.x, r.m, r.y);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((task, n, x, m, y), rs)| {
            let trials = rs.len() as u64;
            let completed = rs.iter().filter(|r| r.completed()).count() as u64;
            let correct = rs.iter().filter(|r| r.completed() && r.correct).count() as u64;
            let kind = |k| rs.iter().filter(|r| r.anomaly_kind == Some(k)).count() as u64;
            let mut times: Vec<f64> = rs.iter().filter(|r| r.silent).map(|r| r.parallel_time).collect();
            times.sort_by(f64::total_cmp);
            AggregateStats {
                task,
                n,
                x,
                m,
                y,
                trials,
                completed,
                correctness_rate: (completed > 0).then(|| correct as f64 / completed as f64),
                panic_rate: rs.iter().filter(|r| r.panic).count() as f64 / trials as f64,
                clock_anomalies: kind(AnomalyKind::Clock),
                protocol_anomalies: kind(AnomalyKind::Protocol),
                mean_parallel_time: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
                median_parallel_time: quantile(&times, 0.5),
                p95_parallel_time: quantile(&times, 0.95),
                mean_interactions: rs.iter().map(|r| r.interactions as f64).sum::<f64>() / trials as f64,
                max_distinct_states: rs.iter().map(|r| r.distinct_states).max().unwrap_or(0),
            }
        })
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_owned(),
            source,
        },
        kind => Error::Format {
            path: path.to_owned(),
            message: format!("{kind:?}"),
        },
    }
}

fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "# schema_version: {SCHEMA_VERSION}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(io_err(path))?;
    let version = first.trim().strip_prefix("# schema_version: ");
    if version != Some(SCHEMA_VERSION) {
        return Err(Error::Format {
            path: path.to_owned(),
            message: format!("expected schema {SCHEMA_VERSION}, found {:?}", first.trim()),
        });
    }
    csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}

pub fn read_csv_rows(path: &Path) -> Result<Vec<TrialRow>> {
    read_csv(path)
}

pub fn read_csv_aggregates(path: &Path) -> Result<Vec<AggregateStats>> {
    read_csv(path)
}

/// `results.csv` → `results.aggregate.csv`.
pub fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(Default::default, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.aggregate.csv"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JsonResults {
    pub schema_version: String,
    pub trials: Vec<TrialRow>,
    pub aggregates: Vec<AggregateStats>,
}

pub fn read_json(path: &Path) -> Result<JsonResults> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Writes rows and aggregates. CSV puts the aggregates in a sibling file;
/// JSON keeps both in one document. Returns the files written.
pub fn write_results(
    stats: &[AggregateStats],
    rows: &[TrialRow],
    path: &Path,
    format: Format,
) -> Result<Vec<PathBuf>> {
    match format {
        Format::Csv => {
            write_csv(path, rows)?;
            let agg = aggregate_path(path);
            write_csv(&agg, stats)?;
            Ok(vec![path.to_owned(), agg])
        }
        Format::Json => {
            let doc = JsonResults {
                schema_version: SCHEMA_VERSION.to_owned(),
                trials: rows.to_vec(),
                aggregates: stats.to_vec(),
            };
            let file = File::create(path).map_err(io_err(path))?;
            let mut out = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Format {
                path: path.to_owned(),
                message: e.to_string(),
            })?;
            out.flush().map_err(io_err(path))?;
            Ok(vec![path.to_owned()])
        }
    }
}

/// Runs the plan, aggregates, and writes the files if an output path is set.
pub fn execute_plan(plan: &ExperimentPlan, workers: usize) -> Result<(Vec<TrialRow>, Vec<AggregateStats>)> {
    let rows: Vec<TrialRow> = super::run::run_plan(plan, workers)?.into_iter().map(|r| r.row).collect();
    let stats = aggregate(&rows);
    if let Some(path) = &plan.output_path {
        write_results(&stats, &rows, path, plan.format)?;
    }
    Ok((rows, stats))
}
