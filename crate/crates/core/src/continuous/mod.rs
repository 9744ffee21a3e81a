//! Continuous MDPs over piecewise-constant paths and their discretization.
//!
//! A [`ContinuousMdp`] exposes a transition *sampler* rather than a density.
//! A [`DiscretizationLevel`] fixes grids, a time slice and a resolution;
//! [`discretize_transition`] turns sampled continuous state paths into a
//! distribution over level state paths, and [`LevelModel`] caches those
//! distributions to evaluate level policies.

mod grid;
mod kernel;
mod level;
mod path;
mod value;

use rand::RngCore;
use thiserror::Error;

use crate::Scalar;

pub use grid::{BoxSpace, Grid, UniformAxis};
pub use kernel::{classify_useful, discretize_transition, LevelOutcome, TransitionEstimate, STILL_TOLERANCE};
pub use level::{
    best_approximation, best_approximation_digits, enumerate_level_actions, potential_action_count, project_policy,
    DiscretizationLevel, Enumeration, LevelActions, Membership,
};
pub use path::{action_distance, l1_distance, pair_distance, path_distance, ActionPath, PiecewisePath, StatePath};
pub use value::{
    estimate_continuous_value, evaluate_discretized_policy, ConvergenceReport, EvalOptions, LevelModel, ValueEstimate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuousError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("path lengths differ: {left} vs {right}")]
    LengthMismatch { left: f64, right: f64 },
    #[error("paths need at least one segment")]
    EmptyPath,
    #[error("segment duration {0} is not positive")]
    BadDuration(f64),
    #[error("box bounds are inverted or not finite")]
    BadBox,
    #[error("length {length} is shorter than one time slice {step}")]
    TooShort { length: f64, step: f64 },
    #[error("resolution {resolution} does not cover the grids (needs {needed})")]
    NotCovering { resolution: f64, needed: f64 },
    #[error("no level action with identifier {0}")]
    UnknownAction(u64),
    #[error("state {0} is terminal")]
    TerminalState(usize),
    #[error("action path is infeasible")]
    Infeasible,
    #[error("more than {0} level paths lie within the resolution ball")]
    BallTooLarge(usize),
    #[error("policy has no action at level state {0}")]
    InvalidPolicy(usize),
    #[error("resolutions must strictly decrease along the ladder")]
    NotRefining,
}

/// A continuous-state, continuous-action MDP with path-valued actions.
pub trait ContinuousMdp<F: Scalar>: Sync {
    fn state_box(&self) -> &BoxSpace<F>;
    fn action_box(&self) -> &BoxSpace<F>;
    /// Upper bound `T` on action length.
    fn max_action_length(&self) -> F;

    fn feasible(&self, a: &ActionPath<F>) -> bool {
        a.length() <= self.max_action_length() * (F::one() + F::of(1e-9))
            && a.segments().iter().all(|(v, _)| self.action_box().contains(v))
    }

    /// Draws a state path realizing the transition from `s` under `a`.
    fn sample_path(&self, s: &[F], a: &ActionPath<F>, rng: &mut dyn RngCore) -> StatePath<F>;

    fn reward(&self, s: &[F], sc: &StatePath<F>, a: &ActionPath<F>) -> F;

    /// `c` with `|reward| < c |a|`.
    fn reward_rate_bound(&self) -> F;

    fn is_terminal(&self, s: &[F]) -> bool;

    /// States that count as destroyed or uncontrollable.
    fn is_failed(&self, s: &[F]) -> bool {
        self.is_terminal(s)
    }
}
