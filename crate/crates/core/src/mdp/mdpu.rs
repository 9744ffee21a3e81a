use std::collections::BTreeSet;

use super::{ActionId, DiscreteMdp, MdpError, StateId, EXPLORE};
use crate::discovery::DiscoveryModel;
use crate::Scalar;

/// An MDP with unawareness: the underlying MDP plus which actions the agent
/// knows about, where it is aware of them, which useful actions are still
/// hidden, and how likely exploring is to reveal one.
#[derive(Debug, Clone)]
pub struct Mdpu<F: Scalar> {
    underlying: DiscreteMdp<F>,
    known_actions: BTreeSet<ActionId>,
    aware: Vec<BTreeSet<ActionId>>,
    discovery: DiscoveryModel,
    hidden_useful: Vec<BTreeSet<ActionId>>,
}

impl<F: Scalar> Mdpu<F> {
    pub fn new(
        underlying: DiscreteMdp<F>,
        known_actions: BTreeSet<ActionId>,
        aware: Vec<BTreeSet<ActionId>>,
        discovery: DiscoveryModel,
        hidden_useful: Vec<BTreeSet<ActionId>>,
    ) -> Result<Self, MdpError> {
        let n = underlying.n_states();
        if aware.len() != n || hidden_useful.len() != n {
            return Err(MdpError::Awareness(format!(
                "awareness maps cover {} and {} states, MDP has {n}",
                aware.len(),
                hidden_useful.len()
            )));
        }
        if underlying.actions().contains(&EXPLORE) {
            return Err(MdpError::Awareness("explore action used by the underlying MDP".into()));
        }
        for s in 0..n {
            for &a in &aware[s] {
                if !known_actions.contains(&a) || !underlying.is_available(s, a) {
                    return Err(MdpError::Awareness(format!(
                        "state {s} is aware of action {a} outside known ∩ available"
                    )));
                }
            }
            for &a in &hidden_useful[s] {
                if aware[s].contains(&a) {
                    return Err(MdpError::Awareness(format!("action {a} both aware and hidden at {s}")));
                }
                if !underlying.is_available(s, a) {
                    return Err(MdpError::Awareness(format!("hidden action {a} unavailable at {s}")));
                }
            }
        }
        Ok(Self { underlying, known_actions, aware, discovery, hidden_useful })
    }

    /// Every action known and aware everywhere it is available; nothing to
    /// discover.
    pub fn fully_aware(underlying: DiscreteMdp<F>, discovery: DiscoveryModel) -> Self {
        let n = underlying.n_states();
        let aware = (0..n).map(|s| underlying.available(s).collect()).collect();
        let known = underlying.actions();
        Self::new(underlying, known, aware, discovery, vec![BTreeSet::new(); n])
            .expect("full awareness satisfies every invariant")
    }

    pub fn underlying(&self) -> &DiscreteMdp<F> {
        &self.underlying
    }

    pub fn known_actions(&self) -> &BTreeSet<ActionId> {
        &self.known_actions
    }

    pub fn explore_action(&self) -> ActionId {
        EXPLORE
    }

    pub fn aware(&self, s: StateId) -> &BTreeSet<ActionId> {
        &self.aware[s]
    }

    pub fn hidden_useful(&self, s: StateId) -> &BTreeSet<ActionId> {
        &self.hidden_useful[s]
    }

    pub fn discovery(&self) -> &DiscoveryModel {
        &self.discovery
    }

    pub fn n_states(&self) -> usize {
        self.underlying.n_states()
    }

    /// The underlying MDP cut down to the actions the agent is aware of.
    pub fn aware_mdp(&self) -> Result<DiscreteMdp<F>, MdpError> {
        self.underlying.restricted(|s, a| self.aware[s].contains(&a))
    }
}

impl<F: Scalar> DiscreteMdp<F> {
    /// Keeps only the rows for which `keep(s, a)` holds.
    pub fn restricted(&self, keep: impl Fn(StateId, ActionId) -> bool) -> Result<Self, MdpError> {
        let mut b = DiscreteMdp::builder(self.n_states());
        for s in 0..self.n_states() {
            if self.is_terminal(s) {
                b = b.terminal(s);
            }
            for row in self.rows_of(s).iter().filter(|r| keep(s, r.action)) {
                for o in &row.outcomes {
                    b.add_transition(s, row.action, o.next, o.prob, o.reward);
                }
            }
        }
        b.build()
    }
}
