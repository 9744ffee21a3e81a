use std::collections::BTreeSet;

use rand::{Rng, RngCore};

use super::{ExploreOutcome, Ladder, LearningEnv, Transition, UrmaxError};
use crate::discovery::{sample_discovery, DiscoveryModel};
use crate::mdp::{ActionId, Mdpu, StateId, EXPLORE};

/// A tabular MDPU as a learning environment.
///
/// Exploring at `s` with `j` useful actions still hidden there succeeds with
/// probability `D(j, t)` and reveals one of them uniformly. Systematic
/// models instead walk a per-state scan position that is never reset.
#[derive(Debug, Clone)]
pub struct MdpuEnv {
    mdpu: Mdpu<f64>,
    start: StateId,
    current: StateId,
    scan: Vec<u64>,
}

impl MdpuEnv {
    pub fn new(mdpu: Mdpu<f64>, start: StateId) -> Self {
        let n = mdpu.n_states();
        Self { mdpu, start, current: start, scan: vec![0; n] }
    }

    pub fn mdpu(&self) -> &Mdpu<f64> {
        &self.mdpu
    }
}

impl LearningEnv for MdpuEnv {
    fn n_states(&self) -> usize {
        self.mdpu.n_states()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> StateId {
        self.current = self.start;
        self.current
    }

    fn state(&self) -> StateId {
        self.current
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<Transition, UrmaxError> {
        let s = self.current;
        let m = self.mdpu.underlying();
        if m.is_terminal(s) {
            return Err(UrmaxError::TerminalStep(s));
        }
        if action == EXPLORE {
            return Ok(Transition { next: s, reward: 0.0, terminal: false });
        }
        let outcomes = m.outcomes(s, action).ok_or(UrmaxError::Unavailable { state: s, action })?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = *outcomes.last().expect("rows are nonempty");
        for o in outcomes {
            acc += o.prob;
            if u < acc {
                pick = *o;
                break;
            }
        }
        self.current = pick.next;
        Ok(Transition { next: pick.next, reward: pick.reward, terminal: m.is_terminal(pick.next) })
    }

    fn is_terminal(&self, s: StateId) -> bool {
        self.mdpu.underlying().is_terminal(s)
    }

    fn initial_aware(&self, s: StateId) -> BTreeSet<ActionId> {
        self.mdpu.aware(s).clone()
    }

    fn explore(&mut self, clock: u64, aware: &BTreeSet<ActionId>, rng: &mut dyn RngCore) -> ExploreOutcome {
        let s = self.current;
        let hidden: Vec<ActionId> = self.mdpu.hidden_useful(s).difference(aware).copied().collect();
        let model = self.mdpu.discovery();
        if let (Some(positions), Some(total)) = (model.useful_positions(), model.scan_length()) {
            // a systematic scan walks candidates in order, ignoring the clock
            self.scan[s] += 1;
            let pos = self.scan[s];
            if pos > total {
                return ExploreOutcome::Exhausted;
            }
            return match hidden.first() {
                Some(&a) if positions.binary_search(&pos).is_ok() => ExploreOutcome::Discovered(a),
                _ => ExploreOutcome::Nothing,
            };
        }
        if hidden.is_empty() {
            return ExploreOutcome::Nothing;
        }
        if sample_discovery(model, hidden.len() as u64, clock, rng) {
            ExploreOutcome::Discovered(hidden[rng.random_range(0..hidden.len())])
        } else {
            ExploreOutcome::Nothing
        }
    }

    fn available_states(&self, a: ActionId) -> Vec<StateId> {
        let m = self.mdpu.underlying();
        (0..m.n_states()).filter(|&s| m.is_available(s, a)).collect()
    }

    fn reward_bound(&self) -> Option<f64> {
        Some(self.mdpu.underlying().max_abs_reward())
    }
}
/// A single-level ladder over one tabular MDPU, started at a fixed state.
#[derive(Debug, Clone)]
pub struct TabularLadder {
    pub env: MdpuEnv,
}

impl Ladder for TabularLadder {
    type Env = MdpuEnv;

    fn levels(&self) -> usize {
        1
    }

    fn build(&self, level: usize) -> Result<MdpuEnv, UrmaxError> {
        if level != 1 {
            return Err(UrmaxError::Env(format!("ladder has no level {level}")));
        }
        let mut env = self.env.clone();
        env.scan.iter_mut().for_each(|p| *p = 0);
        env.current = env.start;
        Ok(env)
    }

    fn discovery(&self, _level: usize) -> DiscoveryModel {
        self.env.mdpu.discovery().clone()
    }
}
