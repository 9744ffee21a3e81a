use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Method};
use crate::envs::LevelSummary;

/// Outcome of one (method, level, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: Method,
    pub level: usize,
    pub seed: u64,
    pub states: usize,
    pub basic_actions: usize,
    pub potential_actions: u64,
    pub time_step: f64,
    pub action_length: f64,
    pub budget_consumed: u64,
    pub best_avg_reward: f64,
    /// Distinct action ids the run has seen to be useful: aware actions for
    /// learners, moving actions for baselines.
    pub useful_found: usize,
    /// Set when the run failed; the numeric fields are then zero.
    pub error: Option<String>,
}

impl RunRow {
    pub fn new(method: Method, seed: u64, level: &LevelSummary) -> Self {
        Self {
            method,
            level: level.level,
            seed,
            states: level.states,
            basic_actions: level.basic_actions,
            potential_actions: level.potential_actions,
            time_step: level.time_step,
            action_length: level.action_length,
            budget_consumed: 0,
            best_avg_reward: 0.0,
            useful_found: 0,
            error: None,
        }
    }
}

/// One line of the results table: the best over seeds of a (method, level)
/// pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub level: usize,
    pub states: usize,
    pub basic_actions: usize,
    pub potential_actions: u64,
    pub time_step: f64,
    pub action_length: f64,
    pub budget_consumed: u64,
    pub best_avg_reward: f64,
    pub useful_found: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Maxima over seeds of the successful runs, one row per (method, level)
    /// in (method, level) order. Pairs whose runs all failed are left out.
    pub fn aggregate(runs: &[RunRow]) -> Self {
        let mut groups: BTreeMap<(Method, usize), ResultRow> = BTreeMap::new();
        for r in runs.iter().filter(|r| r.error.is_none()) {
            groups
                .entry((r.method, r.level))
                .and_modify(|g| {
                    g.budget_consumed = g.budget_consumed.max(r.budget_consumed);
                    g.best_avg_reward = g.best_avg_reward.max(r.best_avg_reward);
                    g.useful_found = g.useful_found.max(r.useful_found);
                })
                .or_insert_with(|| ResultRow {
                    method: r.method,
                    level: r.level,
                    states: r.states,
                    basic_actions: r.basic_actions,
                    potential_actions: r.potential_actions,
                    time_step: r.time_step,
                    action_length: r.action_length,
                    budget_consumed: r.budget_consumed,
                    best_avg_reward: r.best_avg_reward,
                    useful_found: r.useful_found,
                });
        }
        Self { rows: groups.into_values().collect() }
    }

    pub fn get(&self, method: Method, level: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.level == level)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), HarnessError> {
        write_rows(w, &self.rows)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, HarnessError> {
        Ok(Self { rows: read_rows(r)? })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

pub fn write_rows<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>, HarnessError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| HarnessError::Io(e.to_string()))
}
