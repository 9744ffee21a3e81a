use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::table::write_rows;
use super::{Environment, ExperimentConfig, HarnessError, Method, ResultsTable, RunRow};
use crate::derive_seed;
use crate::envs::{
    baseline_random, baseline_repeat, build_ladder, CrawlerLadder, CrawlerLevel, CrawlerLevelEnv, Exploration,
};
use crate::urmax::{diagonal_run, Event, LogRecord};

/// Identifies the run (and, for learners, the diagonal cell) a log line
/// belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTag {
    pub method: Method,
    pub level: usize,
    pub seed: u64,
    /// Parameter rank of the diagonal cell; absent for baselines.
    pub rank: Option<usize>,
}

/// One JSONL log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub step: u64,
    pub cell: CellTag,
    pub event: Event,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    /// One row per (method, level, seed), sorted.
    pub runs: Vec<RunRow>,
    pub results: ResultsTable,
    pub log: Vec<LogLine>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &RunRow> {
        self.runs.iter().filter(|r| r.error.is_some())
    }

    /// Writes `results.csv`, `runs.csv` and `log.jsonl` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        self.results.write_csv(File::create(dir.join("results.csv")).map_err(io)?)?;
        write_rows(File::create(dir.join("runs.csv")).map_err(io)?, &self.runs)?;
        let mut log = BufWriter::new(File::create(dir.join("log.jsonl")).map_err(io)?);
        write_log(&mut log, &self.log)?;
        log.flush().map_err(io)
    }
}

pub fn write_log<W: Write>(mut w: W, lines: &[LogLine]) -> Result<(), HarnessError> {
    for l in lines {
        serde_json::to_writer(&mut w, l).map_err(|e| HarnessError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    Ok(())
}

fn method_index(m: Method) -> u64 {
    m as u64
}

/// Runs every (method, level, seed) combination of `cfg` in parallel. A run
/// that fails is reported in its row and does not stop the others; only
/// level construction errors abort the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let Environment::Crawler { crawler, sampling } = &cfg.environment;
    let levels = build_ladder(crawler, &cfg.levels, *sampling)
        .map_err(|e| HarnessError::Field { field: "environment".into(), message: e.to_string() })?;
    let mut jobs = Vec::new();
    for &method in &cfg.methods {
        for level in &levels {
            for &seed in &cfg.seeds {
                jobs.push((method, level.clone(), seed));
            }
        }
    }
    let mut done: Vec<(RunRow, Vec<LogLine>)> =
        jobs.into_par_iter().map(|(method, level, seed)| run_one(cfg, method, level, seed)).collect();
    done.sort_by(|a, b| (a.0.method, a.0.level, a.0.seed).cmp(&(b.0.method, b.0.level, b.0.seed)));
    let mut out = ExperimentOutcome::default();
    for (row, log) in done {
        out.runs.push(row);
        out.log.extend(log);
    }
    out.results = ResultsTable::aggregate(&out.runs);
    Ok(out)
}

/// One cell of the grid, with its own random stream.
pub fn run_one(cfg: &ExperimentConfig, method: Method, level: Arc<CrawlerLevel>, seed: u64) -> (RunRow, Vec<LogLine>) {
    let summary = level.summary();
    let mut row = RunRow::new(method, seed, &summary);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[method_index(method), summary.level as u64]));
    let tag = |rank| CellTag { method, level: summary.level, seed, rank };
    let mut log = Vec::new();
    let budget = cfg.budget.total;
    let outcome: Result<(), String> = match method.exploration(cfg.discovery.apprenticeship_beta) {
        Some(exploration) => {
            let ladder = CrawlerLadder::new(vec![level], exploration).with_discovery(cfg.discovery.model.clone());
            diagonal_run(&ladder, &mut rng, budget, &cfg.diagonal()).map_err(|e| e.to_string()).map(|(_, report)| {
                row.budget_consumed = report.budget_consumed;
                row.best_avg_reward = report.cells.iter().map(|c| c.measured_reward).fold(0.0, f64::max);
                row.useful_found = report.cells.iter().map(|c| c.aware_actions).max().unwrap_or(0);
                log.extend(report.log.into_iter().map(|((_, rank), r): (_, LogRecord)| LogLine {
                    step: r.step,
                    cell: tag(Some(rank)),
                    event: r.event,
                    payload: r.payload,
                }));
            })
        }
        None => {
            let mut env = CrawlerLevelEnv::new(level, Exploration::Random);
            let opts = cfg.baseline();
            let report = if method == Method::BaselineRandom {
                baseline_random(&mut env, budget, &opts, &mut rng).map(|r| (serde_json::to_value(&r), r))
            } else {
                baseline_repeat(&mut env, budget, &opts, &mut rng).map(|r| (serde_json::to_value(&r), r.report))
            };
            report.map_err(|e| e.to_string()).map(|(payload, r)| {
                row.budget_consumed = r.steps;
                row.best_avg_reward = r.best_avg_reward;
                row.useful_found = r.useful_found;
                log.push(LogLine {
                    step: r.steps,
                    cell: tag(None),
                    event: Event::Evaluate,
                    payload: payload.unwrap_or(json!(null)),
                });
            })
        }
    };
    if let Err(e) = outcome {
        row = RunRow { error: Some(e), ..RunRow::new(method, seed, &summary) };
    }
    (row, log)
}
