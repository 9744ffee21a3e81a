//! Tabular MDPs, MDPs with unawareness, the exact planner and policy
//! evaluation.
//!
//! States are dense indices `0..n_states`; actions are arbitrary identifiers
//! kept sorted per state so that every "smallest identifier" tie-break is a
//! plain linear scan. Terminal states have no outgoing rows and absorb with
//! reward zero.

mod eval;
mod io;
mod mdpu;
mod plan;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

pub use eval::{
    epsilon_return_mixing_time, epsilon_return_mixing_time_with_cutoff, evaluate_policy, long_run_average,
    DEFAULT_MIXING_CUTOFF,
};
pub use io::{MdpDocument, TransitionRecord};
pub use mdpu::Mdpu;
pub(crate) use plan::{relative_value_iteration, PlanRow};
pub use plan::{value_iteration, value_iteration_warm, Plan};

pub type StateId = usize;
pub type ActionId = usize;

/// Identifier of the explore action `a0`. It is larger than every real
/// action identifier, so smallest-identifier tie-breaks prefer real actions.
pub const EXPLORE: ActionId = ActionId::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("MDP has no states")]
    Empty,
    #[error("state {0} is out of range")]
    UnknownState(StateId),
    #[error("transition row ({state}, {action}) sums to {sum}, not 1")]
    NotStochastic { state: StateId, action: ActionId, sum: f64 },
    #[error("negative or non-finite probability {prob} on ({state}, {action}, {next})")]
    BadProbability { state: StateId, action: ActionId, next: StateId, prob: f64 },
    #[error("non-finite reward on ({state}, {action}, {next})")]
    BadReward { state: StateId, action: ActionId, next: StateId },
    #[error("duplicate transition ({state}, {action}, {next})")]
    Duplicate { state: StateId, action: ActionId, next: StateId },
    #[error("terminal state {0} has outgoing transitions")]
    TerminalWithActions(StateId),
    #[error("non-terminal state {0} has no available action")]
    NoActions(StateId),
    #[error("policy has no valid action for state {0}")]
    InvalidPolicy(StateId),
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("mixing time exceeds the cutoff of {cutoff} steps")]
    MixingCutoff { cutoff: usize },
    #[error("action {0} is used but not listed")]
    UnlistedAction(ActionId),
    #[error("malformed MDP document: {0}")]
    Parse(String),
    #[error("MDPU invariant violated: {0}")]
    Awareness(String),
}

/// One successor of a state–action pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome<F> {
    pub next: StateId,
    pub prob: F,
    pub reward: F,
}

#[derive(Debug, Clone, PartialEq)]
struct ActionRow<F> {
    action: ActionId,
    outcomes: Vec<Outcome<F>>,
    expected_reward: F,
}

/// A finite MDP `(S, A, g, P, R)` with optional terminal states.
///
/// Built through [`MdpBuilder`], which enforces that every row is a
/// probability vector and every non-terminal state has an action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpDocument<F>", into = "MdpDocument<F>")]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct DiscreteMdp<F: Scalar> {
    rows: Vec<Vec<ActionRow<F>>>,
    terminal: Vec<bool>,
}

impl<F: Scalar> DiscreteMdp<F> {
    pub fn builder(n_states: usize) -> MdpBuilder<F> {
        MdpBuilder::new(n_states)
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Union of all action identifiers used anywhere.
    pub fn actions(&self) -> BTreeSet<ActionId> {
        self.rows.iter().flat_map(|rows| rows.iter().map(|r| r.action)).collect()
    }

    /// Actions available at `s`, ascending.
    pub fn available(&self, s: StateId) -> impl Iterator<Item = ActionId> + '_ {
        self.rows[s].iter().map(|r| r.action)
    }

    pub fn is_available(&self, s: StateId, a: ActionId) -> bool {
        s < self.rows.len() && self.row(s, a).is_some()
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s]
    }

    pub fn outcomes(&self, s: StateId, a: ActionId) -> Option<&[Outcome<F>]> {
        self.row(s, a).map(|r| r.outcomes.as_slice())
    }

    /// `Σ_{s'} P(s, s', a) R(s, s', a)`.
    pub fn expected_reward(&self, s: StateId, a: ActionId) -> Option<F> {
        self.row(s, a).map(|r| r.expected_reward)
    }

    /// Largest `|R(s, s', a)|` over positive-probability transitions.
    pub fn max_abs_reward(&self) -> F {
        self.rows.iter().flatten().flat_map(|r| r.outcomes.iter()).fold(F::zero(), |m, o| m.max(o.reward.abs()))
    }

    /// Same MDP with every reward multiplied by `factor`.
    pub fn scale_rewards(&self, factor: F) -> Self {
        let mut out = self.clone();
        for row in out.rows.iter_mut().flatten() {
            for o in row.outcomes.iter_mut() {
                o.reward *= factor;
            }
            row.expected_reward = row.outcomes.iter().map(|o| o.prob * o.reward).sum();
        }
        out
    }

    /// Rebuilds a builder holding every transition of this MDP, so callers
    /// can add actions or states to a copy.
    pub fn to_builder(&self) -> MdpBuilder<F> {
        let mut b = MdpBuilder::new(self.n_states());
        for (s, rows) in self.rows.iter().enumerate() {
            if self.terminal[s] {
                b = b.terminal(s);
            }
            for row in rows {
                for o in &row.outcomes {
                    b = b.transition(s, row.action, o.next, o.prob, o.reward);
                }
            }
        }
        b
    }

    fn row(&self, s: StateId, a: ActionId) -> Option<&ActionRow<F>> {
        let rows = &self.rows[s];
        rows.binary_search_by_key(&a, |r| r.action).ok().map(|i| &rows[i])
    }

    fn rows_of(&self, s: StateId) -> &[ActionRow<F>] {
        &self.rows[s]
    }
}

/// Accumulates sparse `(s, a, s', p, r)` triples and validates them.
#[derive(Debug, Clone)]
pub struct MdpBuilder<F> {
    n_states: usize,
    triples: Vec<(StateId, ActionId, StateId, F, F)>,
    terminal: BTreeSet<StateId>,
}

impl<F: Scalar> MdpBuilder<F> {
    pub fn new(n_states: usize) -> Self {
        Self { n_states, triples: Vec::new(), terminal: BTreeSet::new() }
    }

    pub fn transition(mut self, s: StateId, a: ActionId, next: StateId, prob: F, reward: F) -> Self {
        self.triples.push((s, a, next, prob, reward));
        self
    }

    pub fn add_transition(&mut self, s: StateId, a: ActionId, next: StateId, prob: F, reward: F) {
        self.triples.push((s, a, next, prob, reward));
    }

    pub fn terminal(mut self, s: StateId) -> Self {
        self.terminal.insert(s);
        self
    }

    pub fn build(self) -> Result<DiscreteMdp<F>, MdpError> {
        if self.n_states == 0 {
            return Err(MdpError::Empty);
        }
        let n = self.n_states;
        let mut triples = self.triples;
        triples.sort_by(|x, y| (x.0, x.1, x.2).cmp(&(y.0, y.1, y.2)));

        let mut rows: Vec<Vec<ActionRow<F>>> = vec![Vec::new(); n];
        for &(s, a, next, prob, reward) in &triples {
            if s >= n {
                return Err(MdpError::UnknownState(s));
            }
            if next >= n {
                return Err(MdpError::UnknownState(next));
            }
            if !prob.is_finite() || prob < F::zero() {
                return Err(MdpError::BadProbability { state: s, action: a, next, prob: prob.as_f64() });
            }
            if !reward.is_finite() {
                return Err(MdpError::BadReward { state: s, action: a, next });
            }
            if self.terminal.contains(&s) {
                return Err(MdpError::TerminalWithActions(s));
            }
            let row = match rows[s].last_mut() {
                Some(r) if r.action == a => r,
                _ => {
                    rows[s].push(ActionRow { action: a, outcomes: Vec::new(), expected_reward: F::zero() });
                    rows[s].last_mut().expect("just pushed")
                }
            };
            if row.outcomes.last().is_some_and(|o| o.next == next) {
                return Err(MdpError::Duplicate { state: s, action: a, next });
            }
            if prob > F::zero() {
                row.outcomes.push(Outcome { next, prob, reward });
            }
        }

        let tol = row_tolerance::<F>();
        for (s, state_rows) in rows.iter_mut().enumerate() {
            for row in state_rows.iter_mut() {
                let sum: F = row.outcomes.iter().map(|o| o.prob).sum();
                if (sum - F::one()).abs() > tol {
                    return Err(MdpError::NotStochastic { state: s, action: row.action, sum: sum.as_f64() });
                }
                row.expected_reward = row.outcomes.iter().map(|o| o.prob * o.reward).sum();
            }
        }

        let mut terminal = vec![false; n];
        for &s in &self.terminal {
            if s >= n {
                return Err(MdpError::UnknownState(s));
            }
            terminal[s] = true;
        }
        for s in 0..n {
            if !terminal[s] && rows[s].is_empty() {
                return Err(MdpError::NoActions(s));
            }
        }
        Ok(DiscreteMdp { rows, terminal })
    }
}

/// Row sums must be within `1e-9` of one, loosened to a few ulps for
/// scalars too coarse to represent that.
fn row_tolerance<F: Scalar>() -> F {
    F::of(1e-9).max(F::epsilon() * F::of(64.0))
}

/// A stationary deterministic policy: one action per state, `None` on
/// terminal states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Policy {
    pub choice: Vec<Option<ActionId>>,
}

impl Policy {
    pub fn new(choice: Vec<Option<ActionId>>) -> Self {
        Self { choice }
    }

    /// Same action in every state.
    pub fn constant(n_states: usize, action: ActionId) -> Self {
        Self { choice: vec![Some(action); n_states] }
    }

    pub fn action(&self, s: StateId) -> Option<ActionId> {
        self.choice.get(s).copied().flatten()
    }

    /// Checks `choice(s) ∈ available(s)` for every non-terminal state.
    pub fn validate<F: Scalar>(&self, mdp: &DiscreteMdp<F>) -> Result<(), MdpError> {
        for s in 0..mdp.n_states() {
            if mdp.is_terminal(s) {
                continue;
            }
            match self.action(s) {
                Some(a) if mdp.is_available(s, a) => {}
                _ => return Err(MdpError::InvalidPolicy(s)),
            }
        }
        Ok(())
    }
}

/// Long-run (or horizon-averaged) reward per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction<F> {
    pub value: Vec<F>,
}

impl<F: Scalar> ValueFunction<F> {
    pub fn get(&self, s: StateId) -> F {
        self.value[s]
    }

    /// Largest absolute entry, the `R_max` the values are bounded by.
    pub fn max_abs(&self) -> F {
        self.value.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> DiscreteMdp<f64> {
        DiscreteMdp::builder(3)
            .transition(0, 1, 1, 0.25, 1.0)
            .transition(0, 1, 2, 0.75, 2.0)
            .transition(0, 0, 0, 1.0, 0.0)
            .transition(1, 0, 2, 1.0, 0.5)
            .terminal(2)
            .build()
            .unwrap()
    }

    #[test]
    fn actions_are_sorted_per_state() {
        let m = chain();
        assert_eq!(m.available(0).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(m.actions().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!((m.expected_reward(0, 1).unwrap() - 1.75).abs() < 1e-12);
        assert_eq!(m.max_abs_reward(), 2.0);
        assert!(m.is_terminal(2));
        assert_eq!(m.available(2).count(), 0);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = DiscreteMdp::<f64>::builder(2)
            .transition(0, 0, 1, 0.5, 0.0)
            .transition(1, 0, 1, 1.0, 0.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, MdpError::NotStochastic { state: 0, action: 0, .. }));
    }

    #[test]
    fn rejects_empty_and_dangling() {
        assert_eq!(DiscreteMdp::<f64>::builder(0).build().unwrap_err(), MdpError::Empty);
        let err = DiscreteMdp::<f64>::builder(2).transition(0, 0, 0, 1.0, 0.0).build().unwrap_err();
        assert_eq!(err, MdpError::NoActions(1));
        let err = DiscreteMdp::<f64>::builder(1).transition(0, 0, 3, 1.0, 0.0).build().unwrap_err();
        assert_eq!(err, MdpError::UnknownState(3));
    }

    #[test]
    fn rejects_terminal_rows_and_duplicates() {
        let err = DiscreteMdp::<f64>::builder(1).transition(0, 0, 0, 1.0, 0.0).terminal(0).build().unwrap_err();
        assert_eq!(err, MdpError::TerminalWithActions(0));
        let err = DiscreteMdp::<f64>::builder(1)
            .transition(0, 0, 0, 0.5, 0.0)
            .transition(0, 0, 0, 0.5, 0.0)
            .build()
            .unwrap_err();
        assert!(matches!(err, MdpError::Duplicate { .. }));
    }

    #[test]
    fn policy_validation() {
        let m = chain();
        assert!(Policy::new(vec![Some(1), Some(0), None]).validate(&m).is_ok());
        assert_eq!(Policy::new(vec![Some(2), Some(0), None]).validate(&m), Err(MdpError::InvalidPolicy(0)));
    }

    #[test]
    fn f32_rows_use_a_coarser_tolerance() {
        let m = DiscreteMdp::<f32>::builder(1).transition(0, 0, 0, 0.1, 0.0).transition(0, 1, 0, 1.0, 0.0).build();
        assert!(m.is_err());
        let third = 1.0f32 / 3.0;
        let m = DiscreteMdp::<f32>::builder(3)
            .transition(0, 0, 0, third, 0.0)
            .transition(0, 0, 1, third, 0.0)
            .transition(0, 0, 2, third, 0.0)
            .terminal(1)
            .terminal(2)
            .build();
        assert!(m.is_ok());
    }
}
