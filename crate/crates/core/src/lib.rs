//! MDPs with unawareness (MDPUs) and the machinery for learning in them.
//!
//! * [`mdp`]: tabular MDPs and MDPUs, the exact planner, policy evaluation
//!   and the ε-return mixing time.
//! * [`discovery`]: discovery-probability models `D(j, t)`, the partial sums
//!   `Ψ(T)`, learnability classification and the exploration threshold.
//! * [`urmax`]: the URMAX learner (RMAX with an explore action) and its
//!   diagonal execution over (discretization level, parameter guess) cells.
//! * [`continuous`]: continuous MDPs over piecewise-constant action and state
//!   paths, their distances, discretization levels, best approximation,
//!   policy projection and discretized transition kernels.
//! * [`envs`]: the arena crawler, a closed-form continuous control task with
//!   a failure region, plus the two search baselines.
//! * [`harness`]: configuration-driven experiment runner, results tables and
//!   run logs.
//!
//! The tabular and continuous layers are generic over [`Scalar`]; the aliases
//! below fix the scalar to `f64` (and `f32` for the tabular MDP).

pub mod continuous;
pub mod discovery;
pub mod envs;
pub mod harness;
mod linalg;
pub mod mdp;
mod scalar;
mod seed;
pub mod urmax;

pub use scalar::Scalar;
pub use seed::derive_seed;

pub use mdp::{ActionId, Policy, StateId, EXPLORE};

/// Tabular MDP over `f64`.
pub type Mdp = mdp::DiscreteMdp<f64>;
/// Tabular MDP over `f32`.
pub type Mdp32 = mdp::DiscreteMdp<f32>;
/// MDP with unawareness over `f64`.
pub type Mdpu = mdp::Mdpu<f64>;
/// Value function over `f64`.
pub type ValueFunction = mdp::ValueFunction<f64>;
/// Piecewise-constant action path over `f64`.
pub type ActionPath = continuous::ActionPath<f64>;
/// Piecewise-constant state path over `f64`.
pub type StatePath = continuous::StatePath<f64>;
/// Discretization level over `f64`.
pub type DiscretizationLevel = continuous::DiscretizationLevel<f64>;
