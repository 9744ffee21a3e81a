//! URMAX: RMAX with an explore action, and its diagonal execution over
//! (discretization level, parameter rank) cells.
//!
//! The learner plans, by average-reward value iteration, in an optimistic
//! model. Any aware pair visited fewer than `known_threshold` times leads
//! to a fictitious state paying `r_max_guess` forever. The explore action
//! `a0` leads there too until `explore_budget` consecutive plays at a state
//! have found nothing, after which it is a zero-reward self-loop.

mod diagonal;
mod learner;
mod tabular;

use std::collections::BTreeSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discovery::{exploration_threshold, DiscoveryError, DiscoveryModel};
use crate::mdp::{ActionId, MdpError, StateId};

pub use diagonal::{
    cell_position, diagonal_run, evaluate_in_env, CellReport, DiagonalConfig, DiagonalReport, DiagonalSchedule, Ladder,
};
pub use learner::{
    candidate_optimal_policy, continue_iteration, optimistic_model, urmax_iteration, LearnerState, PairStats,
};
pub use tabular::{MdpuEnv, TabularLadder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UrmaxError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("action {action} is not available at state {state}")]
    Unavailable { state: StateId, action: ActionId },
    #[error("step called on terminal state {0}")]
    TerminalStep(StateId),
    #[error("the ladder has no levels")]
    EmptyLadder,
    #[error("environment: {0}")]
    Env(String),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next: StateId,
    pub reward: f64,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreOutcome {
    Discovered(ActionId),
    Nothing,
    /// The environment will never reveal anything more at this state.
    Exhausted,
}

/// What the learner may ask of an environment. Environments are stateful:
/// `step` and `explore` act on the current state.
pub trait LearningEnv {
    fn n_states(&self) -> usize;
    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId;
    fn state(&self) -> StateId;
    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<Transition, UrmaxError>;
    fn is_terminal(&self, s: StateId) -> bool;
    /// Actions the agent is aware of at `s` before learning starts.
    fn initial_aware(&self, s: StateId) -> BTreeSet<ActionId>;
    /// One play of `a0` at the current state, the `clock`-th since the last
    /// discovery there. `aware` is what the agent already knows at that
    /// state, so only actions outside it can be revealed.
    fn explore(&mut self, clock: u64, aware: &BTreeSet<ActionId>, rng: &mut dyn RngCore) -> ExploreOutcome;
    /// States where a discovered action is available, for global awareness.
    fn available_states(&self, a: ActionId) -> Vec<StateId>;
    /// Reward bound, when the environment knows one.
    fn reward_bound(&self) -> Option<f64> {
        None
    }
}

/// Hyperparameters of one URMAX iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrmaxParams {
    pub n_states_guess: usize,
    pub n_actions_guess: usize,
    pub r_max_guess: f64,
    pub mixing_time_guess: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub known_threshold: u64,
    pub explore_budget: u64,
    /// Discoveries become aware everywhere the action is available, rather
    /// than only where they were found.
    #[serde(default = "yes")]
    pub global_awareness: bool,
    /// Value-iteration sweeps per replan.
    #[serde(default = "default_sweeps")]
    pub planning_sweeps: usize,
}

fn yes() -> bool {
    true
}

fn default_sweeps() -> usize {
    5_000
}

/// Visits after which the empirical mean of a reward in `[-r_max, r_max]`
/// is within `epsilon` with probability `1 - delta` (Hoeffding).
pub fn hoeffding_threshold(r_max: f64, epsilon: f64, delta: f64) -> u64 {
    ((r_max * r_max * (2.0 / delta).ln()) / (2.0 * epsilon * epsilon)).ceil().max(1.0) as u64
}

impl UrmaxParams {
    /// Parameters with the Hoeffding visit threshold and the exploration
    /// threshold of `model` for `n = n_states · n_actions` pairs.
    pub fn derived(
        n_states: usize,
        n_actions: usize,
        r_max: f64,
        mixing_time: usize,
        epsilon: f64,
        delta: f64,
        model: &DiscoveryModel,
    ) -> Result<Self, UrmaxError> {
        let pairs = (n_states * n_actions).max(1) as u64;
        let p = Self {
            n_states_guess: n_states,
            n_actions_guess: n_actions,
            r_max_guess: r_max,
            mixing_time_guess: mixing_time,
            epsilon,
            delta,
            known_threshold: hoeffding_threshold(r_max, epsilon, delta),
            explore_budget: exploration_threshold(model, pairs, delta)?,
            global_awareness: true,
            planning_sweeps: default_sweeps(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Rank-`k` guesses for the diagonal schedule: every size, reward and
    /// mixing guess is `k`, the visit threshold is `k`, and the explore
    /// budget is the exploration threshold for `k²` pairs.
    pub fn for_rank(k: usize, epsilon: f64, delta: f64, model: &DiscoveryModel) -> Result<Self, UrmaxError> {
        let k = k.max(1);
        let p = Self {
            n_states_guess: k,
            n_actions_guess: k,
            r_max_guess: k as f64,
            mixing_time_guess: k,
            epsilon,
            delta,
            known_threshold: k as u64,
            explore_budget: exploration_threshold(model, (k * k) as u64, delta)?,
            global_awareness: true,
            planning_sweeps: default_sweeps(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), UrmaxError> {
        let bad = |m: &str| Err(UrmaxError::Params(m.to_string()));
        if self.n_states_guess == 0 || self.n_actions_guess == 0 || self.mixing_time_guess == 0 {
            return bad("size and mixing guesses must be positive");
        }
        if !(self.r_max_guess > 0.0) || !(self.epsilon > 0.0) {
            return bad("r_max_guess and epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.known_threshold == 0 || self.planning_sweeps == 0 {
            return bad("known_threshold and planning_sweeps must be positive");
        }
        Ok(())
    }

    /// Default number of evaluation episodes, `⌈8 ln(2/δ) / ε²⌉`.
    pub fn default_eval_runs(&self) -> usize {
        (8.0 * (2.0 / self.delta).ln() / (self.epsilon * self.epsilon)).ceil() as usize
    }
}

/// Kinds of learner log records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Discover,
    Known,
    Replan,
    Evaluate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub event: Event,
    pub payload: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_counts() {
        // ln 40 / (2 · 0.0025) = 737.8
        assert_eq!(hoeffding_threshold(1.0, 0.05, 0.05), 738);
        assert_eq!(hoeffding_threshold(1.0, 10.0, 0.5), 1);
    }

    #[test]
    fn rank_parameters() {
        let p = UrmaxParams::for_rank(3, 0.1, 0.1, &DiscoveryModel::constant(0.1)).unwrap();
        assert_eq!((p.n_states_guess, p.n_actions_guess, p.known_threshold), (3, 3, 3));
        assert_eq!(p.r_max_guess, 3.0);
        // ln(4·9/0.1)/0.1 = 58.9
        assert_eq!(p.explore_budget, 59);
        assert_eq!(p.default_eval_runs(), 2397);
    }

    #[test]
    fn validation() {
        let mut p = UrmaxParams::for_rank(1, 0.1, 0.1, &DiscoveryModel::constant(1.0)).unwrap();
        p.delta = 1.0;
        assert!(p.validate().is_err());
        assert!(UrmaxParams::for_rank(1, 0.1, 0.1, &DiscoveryModel::power_law(0.1, 2.0)).is_err());
    }

    #[test]
    fn event_names() {
        assert_eq!(serde_json::to_string(&Event::Replan).unwrap(), "\"replan\"");
    }
}
