//! JSON document form of a [`DiscreteMdp`]. See `docs/mdp-format.md`.

use serde::{Deserialize, Serialize};

use super::{ActionId, DiscreteMdp, MdpError, StateId};
use crate::Scalar;

/// One sparse transition `(from, action) -> to` with probability and reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord<F> {
    pub from: StateId,
    pub action: ActionId,
    pub to: StateId,
    pub prob: F,
    pub reward: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument<F> {
    /// Number of states; states are `0..states`.
    pub states: usize,
    /// Every action identifier the transitions may use.
    pub actions: Vec<ActionId>,
    #[serde(default)]
    pub terminal: Vec<StateId>,
    pub transitions: Vec<TransitionRecord<F>>,
}

impl<F: Scalar> TryFrom<MdpDocument<F>> for DiscreteMdp<F> {
    type Error = MdpError;

    fn try_from(doc: MdpDocument<F>) -> Result<Self, MdpError> {
        let listed: std::collections::BTreeSet<_> = doc.actions.iter().copied().collect();
        let mut b = DiscreteMdp::builder(doc.states);
        for t in &doc.transitions {
            if !listed.contains(&t.action) {
                return Err(MdpError::UnlistedAction(t.action));
            }
            b.add_transition(t.from, t.action, t.to, t.prob, t.reward);
        }
        for &s in &doc.terminal {
            b = b.terminal(s);
        }
        b.build()
    }
}

impl<F: Scalar> From<DiscreteMdp<F>> for MdpDocument<F> {
    fn from(mdp: DiscreteMdp<F>) -> Self {
        let mut transitions = Vec::new();
        for (s, rows) in mdp.rows.iter().enumerate() {
            for row in rows {
                for o in &row.outcomes {
                    transitions.push(TransitionRecord {
                        from: s,
                        action: row.action,
                        to: o.next,
                        prob: o.prob,
                        reward: o.reward,
                    });
                }
            }
        }
        MdpDocument {
            states: mdp.n_states(),
            actions: mdp.actions().into_iter().collect(),
            terminal: (0..mdp.n_states()).filter(|&s| mdp.is_terminal(s)).collect(),
            transitions,
        }
    }
}

impl<F: Scalar> DiscreteMdp<F> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("MDP documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        serde_json::from_str(text).map_err(|e| MdpError::Parse(e.to_string()))
    }
}
