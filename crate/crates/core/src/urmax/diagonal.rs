use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{urmax_iteration, Event, LearningEnv, LogRecord, UrmaxError, UrmaxParams};
use crate::discovery::DiscoveryModel;
use crate::mdp::{Policy, EXPLORE};

/// A sequence of learning environments indexed by level `1..=levels()`,
/// built on demand.
pub trait Ladder {
    type Env: LearningEnv;

    fn levels(&self) -> usize;

    fn build(&self, level: usize) -> Result<Self::Env, UrmaxError>;

    /// Discovery model used to size the explore budget at `level`.
    fn discovery(&self, level: usize) -> DiscoveryModel;

    fn params(&self, level: usize, rank: usize, cfg: &DiagonalConfig) -> Result<UrmaxParams, UrmaxError> {
        let mut p = UrmaxParams::for_rank(rank, cfg.epsilon, cfg.delta, &self.discovery(level))?;
        p.planning_sweeps = cfg.planning_sweeps;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Interactions given to every cell.
    pub cell_budget: u64,
    /// Evaluation episodes after each cell; `None` uses `⌈8 ln(2/δ)/ε²⌉`.
    pub eval_runs: Option<usize>,
    /// Steps per evaluation episode.
    pub eval_horizon: usize,
    pub planning_sweeps: usize,
}

impl Default for DiagonalConfig {
    fn default() -> Self {
        Self { epsilon: 0.1, delta: 0.1, cell_budget: 2_000, eval_runs: None, eval_horizon: 50, planning_sweeps: 5_000 }
    }
}

/// Anti-diagonal walk over (level, rank): `(1,1), (1,2), (2,1), (1,3), …`,
/// skipping levels the ladder does not have.
#[derive(Debug, Clone)]
pub struct DiagonalSchedule {
    levels: usize,
    diagonal: usize,
    level: usize,
}

impl DiagonalSchedule {
    pub fn new(levels: usize) -> Self {
        Self { levels, diagonal: 1, level: 1 }
    }
}

impl Iterator for DiagonalSchedule {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        if self.levels == 0 {
            return None;
        }
        if self.level > self.diagonal.min(self.levels) {
            self.diagonal += 1;
            self.level = 1;
        }
        let cell = (self.level, self.diagonal + 1 - self.level);
        self.level += 1;
        Some(cell)
    }
}

/// 1-based step at which the unrestricted schedule reaches `(i, k)`.
pub fn cell_position(i: usize, k: usize) -> u64 {
    let d = (i + k - 1) as u64;
    (d - 1) * d / 2 + i as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub level: usize,
    pub rank: usize,
    /// Interactions consumed up to and including this cell.
    pub budget_consumed: u64,
    pub measured_reward: f64,
    /// Best measured reward so far, the retained policy's.
    pub retained_reward: f64,
    pub discoveries: u64,
    pub aware_actions: usize,
    pub explore_plays: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagonalReport {
    pub cells: Vec<CellReport>,
    /// `(level, rank)` of the retained policy.
    pub best_cell: Option<(usize, usize)>,
    pub budget_consumed: u64,
    /// Learner records tagged with their cell.
    pub log: Vec<((usize, usize), LogRecord)>,
}

/// Mean per-step reward of `policy` over `runs` episodes of `horizon`
/// steps from reset. Unplanned states and `a0` idle with reward zero, and
/// terminal states end the episode's earnings.
pub fn evaluate_in_env<E: LearningEnv + ?Sized>(
    env: &mut E,
    policy: &Policy,
    runs: usize,
    horizon: usize,
    rng: &mut dyn RngCore,
) -> Result<f64, UrmaxError> {
    if runs == 0 || horizon == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for _ in 0..runs {
        let mut s = env.reset(rng);
        for _ in 0..horizon {
            if env.is_terminal(s) {
                break;
            }
            match policy.action(s) {
                Some(a) if a != EXPLORE => {
                    let tr = env.step(a, rng)?;
                    total += tr.reward;
                    s = tr.next;
                }
                _ => {}
            }
        }
    }
    Ok(total / (runs * horizon) as f64)
}

/// Runs one URMAX iteration per schedule cell, each on a fresh environment
/// for the cell's level and with `cfg.cell_budget` interactions, until
/// `total_budget` is spent. After every cell the candidate policy is
/// evaluated and the best one measured so far is kept.
pub fn diagonal_run<L: Ladder>(
    ladder: &L,
    rng: &mut dyn RngCore,
    total_budget: u64,
    cfg: &DiagonalConfig,
) -> Result<(Policy, DiagonalReport), UrmaxError> {
    if ladder.levels() == 0 {
        return Err(UrmaxError::EmptyLadder);
    }
    if cfg.cell_budget == 0 {
        return Err(UrmaxError::Params("cell_budget must be positive".into()));
    }
    let mut report = DiagonalReport::default();
    let mut best: Option<(f64, Policy)> = None;
    for (level, rank) in DiagonalSchedule::new(ladder.levels()) {
        let left = total_budget - report.budget_consumed;
        if left == 0 {
            break;
        }
        let slice = cfg.cell_budget.min(left);
        let params = ladder.params(level, rank, cfg)?;
        let mut env = ladder.build(level)?;
        let (policy, state) = urmax_iteration(&mut env, &params, rng, slice)?;
        let runs = cfg.eval_runs.unwrap_or_else(|| params.default_eval_runs());
        let measured = evaluate_in_env(&mut env, &policy, runs, cfg.eval_horizon, rng)?;
        let offset = report.budget_consumed;
        report.budget_consumed += slice;
        for mut r in state.log.iter().cloned() {
            r.step += offset;
            report.log.push(((level, rank), r));
        }
        report.log.push((
            (level, rank),
            LogRecord {
                step: report.budget_consumed,
                event: Event::Evaluate,
                payload: json!({ "measured_reward": measured, "runs": runs, "horizon": cfg.eval_horizon }),
            },
        ));
        if best.as_ref().is_none_or(|(b, _)| measured > *b) {
            best = Some((measured, policy));
            report.best_cell = Some((level, rank));
        }
        report.cells.push(CellReport {
            level,
            rank,
            budget_consumed: report.budget_consumed,
            measured_reward: measured,
            retained_reward: best.as_ref().map_or(measured, |b| b.0),
            discoveries: state.discoveries,
            aware_actions: state.aware_actions().len(),
            explore_plays: state.explore_plays,
        });
    }
    let policy = best.map(|b| b.1).unwrap_or_else(|| Policy::new(Vec::new()));
    Ok((policy, report))
}
