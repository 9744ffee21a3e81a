use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;
use serde_json::json;

use super::{Event, ExploreOutcome, LearningEnv, LogRecord, UrmaxError, UrmaxParams};
use crate::mdp::{relative_value_iteration, ActionId, DiscreteMdp, MdpError, PlanRow, Policy, StateId, EXPLORE};

/// Empirical statistics of one state–action pair. Successor counts stop
/// changing once the pair is known; `visits` keeps counting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairStats {
    pub visits: u64,
    pub reward_sum: f64,
    /// Successor → (count, reward sum).
    pub next: BTreeMap<StateId, (u64, f64)>,
}

impl PairStats {
    fn samples(&self) -> u64 {
        self.next.values().map(|c| c.0).sum()
    }
}

#[derive(Debug, Clone)]
struct Row {
    action: ActionId,
    reward: f64,
    next: Vec<(StateId, f64)>,
}

impl PlanRow<f64> for Row {
    fn action(&self) -> ActionId {
        self.action
    }
    fn reward(&self) -> f64 {
        self.reward
    }
    fn expect(&self, v: &[f64]) -> f64 {
        self.next.iter().map(|&(t, p)| p * v[t]).sum()
    }
}

impl Row {
    fn empirical(a: ActionId, p: &PairStats) -> Self {
        let total = p.samples() as f64;
        let reward = p.next.values().map(|c| c.1).sum::<f64>() / total;
        let next = p.next.iter().map(|(&t, &(c, _))| (t, c as f64 / total)).collect();
        Row { action: a, reward, next }
    }
}

/// Everything URMAX knows: awareness, the empirical model, explore clocks
/// and the current candidate policy.
#[derive(Debug, Clone)]
pub struct LearnerState {
    pub aware: Vec<BTreeSet<ActionId>>,
    pub pairs: Vec<BTreeMap<ActionId, PairStats>>,
    /// Explore plays at each state since its last discovery.
    pub explore_clock: Vec<u64>,
    pub explore_exhausted: Vec<bool>,
    pub terminal: Vec<bool>,
    pub candidate_policy: Policy,
    pub log: Vec<LogRecord>,
    pub steps: u64,
    pub explore_plays: u64,
    pub discoveries: u64,
    pub replans: u64,
    bias: Vec<f64>,
    known_rows: Vec<Vec<Row>>,
    rows: Vec<Vec<Row>>,
    dirty: Vec<bool>,
}

impl LearnerState {
    pub fn new<E: LearningEnv + ?Sized>(env: &E) -> Self {
        let n = env.n_states();
        Self {
            aware: (0..n).map(|s| env.initial_aware(s)).collect(),
            pairs: vec![BTreeMap::new(); n],
            explore_clock: vec![0; n],
            explore_exhausted: vec![false; n],
            terminal: (0..n).map(|s| env.is_terminal(s)).collect(),
            candidate_policy: Policy::new(vec![None; n]),
            log: Vec::new(),
            steps: 0,
            explore_plays: 0,
            discoveries: 0,
            replans: 0,
            bias: Vec::new(),
            known_rows: vec![Vec::new(); n],
            rows: vec![Vec::new(); n + 1],
            dirty: vec![true; n + 1],
        }
    }

    pub fn n_states(&self) -> usize {
        self.aware.len()
    }

    pub fn visit_count(&self, s: StateId, a: ActionId) -> u64 {
        self.pairs[s].get(&a).map_or(0, |p| p.visits)
    }

    /// Distinct actions the learner is aware of anywhere.
    pub fn aware_actions(&self) -> BTreeSet<ActionId> {
        self.aware.iter().flatten().copied().collect()
    }

    pub fn is_known(&self, s: StateId, a: ActionId, params: &UrmaxParams) -> bool {
        self.visit_count(s, a) >= params.known_threshold
    }

    fn explore_optimistic(&self, s: StateId, params: &UrmaxParams) -> bool {
        !self.explore_exhausted[s] && self.explore_clock[s] < params.explore_budget
    }

    fn record(&mut self, event: Event, payload: serde_json::Value) {
        self.log.push(LogRecord { step: self.steps, event, payload });
    }

    /// The empirical MDP over known pairs only (a0 as a zero self-loop).
    pub fn empirical_model(&self, params: &UrmaxParams) -> Result<DiscreteMdp<f64>, MdpError> {
        let n = self.n_states();
        let mut b = DiscreteMdp::builder(n);
        for s in 0..n {
            if self.terminal[s] {
                b = b.terminal(s);
                continue;
            }
            for &a in &self.aware[s] {
                if let Some(p) = self.pairs[s].get(&a).filter(|p| p.visits >= params.known_threshold) {
                    add_empirical(&mut b, s, a, p);
                }
            }
            b.add_transition(s, EXPLORE, s, 1.0, 0.0);
        }
        b.build()
    }

    /// Greedy average-reward policy of the empirical model: the best the
    /// learner can vouch for so far.
    pub fn exploit_policy(&self, params: &UrmaxParams) -> Policy {
        let n = self.n_states();
        let rows: Vec<Vec<Row>> = (0..n)
            .map(|s| {
                let mut r: Vec<Row> =
                    self.known_rows[s].iter().filter(|r| self.aware[s].contains(&r.action)).cloned().collect();
                r.push(Row { action: EXPLORE, reward: 0.0, next: vec![(s, 1.0)] });
                r
            })
            .collect();
        let solved = relative_value_iteration(
            n,
            |s| self.terminal[s],
            |s| rows[s].as_slice(),
            params.planning_sweeps,
            1e-9,
            None,
        );
        Policy::new(solved.choice)
    }

    fn mark_known(&mut self, s: StateId, a: ActionId) {
        let row = Row::empirical(a, &self.pairs[s][&a]);
        let at = self.known_rows[s].partition_point(|r| r.action < a);
        self.known_rows[s].insert(at, row);
        self.dirty[s] = true;
    }

    /// Refreshes the cached optimistic rows of dirty states. Unknown aware
    /// actions all share one row, so only the smallest is kept.
    fn refresh_rows(&mut self, params: &UrmaxParams) {
        let n = self.n_states();
        let r = params.r_max_guess;
        for s in 0..n {
            if !self.dirty[s] {
                continue;
            }
            self.dirty[s] = false;
            let mut rows = Vec::new();
            if !self.terminal[s] {
                let unknown = self.aware[s].iter().copied().find(|&a| self.visit_count(s, a) < params.known_threshold);
                let mut placed = unknown.is_none();
                for row in &self.known_rows[s] {
                    if !self.aware[s].contains(&row.action) {
                        continue;
                    }
                    if let Some(u) = unknown.filter(|&u| !placed && u < row.action) {
                        rows.push(Row { action: u, reward: r, next: vec![(n, 1.0)] });
                        placed = true;
                    }
                    rows.push(row.clone());
                }
                if let Some(u) = unknown.filter(|_| !placed) {
                    rows.push(Row { action: u, reward: r, next: vec![(n, 1.0)] });
                }
                if self.explore_optimistic(s, params) {
                    rows.push(Row { action: EXPLORE, reward: r, next: vec![(n, 1.0)] });
                } else {
                    rows.push(Row { action: EXPLORE, reward: 0.0, next: vec![(s, 1.0)] });
                }
            }
            self.rows[s] = rows;
        }
        if self.dirty[n] {
            self.dirty[n] = false;
            self.rows[n] = vec![Row { action: 0, reward: r, next: vec![(n, 1.0)] }];
        }
    }
}

fn add_empirical(b: &mut crate::mdp::MdpBuilder<f64>, s: StateId, a: ActionId, p: &PairStats) {
    let total = p.samples() as f64;
    for (&next, &(count, rsum)) in &p.next {
        b.add_transition(s, a, next, count as f64 / total, rsum / count as f64);
    }
}

/// The optimistic planning model. State `n` is the fictitious state.
pub fn optimistic_model(state: &LearnerState, params: &UrmaxParams) -> Result<DiscreteMdp<f64>, MdpError> {
    let n = state.n_states();
    let heaven = n;
    let r = params.r_max_guess;
    let mut b = DiscreteMdp::builder(n + 1);
    for s in 0..n {
        if state.terminal[s] {
            b = b.terminal(s);
            continue;
        }
        for &a in &state.aware[s] {
            match state.pairs[s].get(&a) {
                Some(p) if p.visits >= params.known_threshold => add_empirical(&mut b, s, a, p),
                _ => b.add_transition(s, a, heaven, 1.0, r),
            }
        }
        if state.explore_optimistic(s, params) {
            b.add_transition(s, EXPLORE, heaven, 1.0, r);
        } else {
            b.add_transition(s, EXPLORE, s, 1.0, 0.0);
        }
    }
    b.add_transition(heaven, 0, heaven, 1.0, r);
    b.build()
}

/// Average-reward optimal policy of the optimistic model, restricted to the
/// real states.
pub fn candidate_optimal_policy(state: &LearnerState, params: &UrmaxParams) -> Policy {
    let mut st = state.clone();
    st.dirty.iter_mut().for_each(|d| *d = true);
    plan(&mut st, params, None).0
}

fn plan(state: &mut LearnerState, params: &UrmaxParams, warm: Option<&[f64]>) -> (Policy, Vec<f64>) {
    state.refresh_rows(params);
    let n = state.n_states();
    let rows = &state.rows;
    let solved = relative_value_iteration(
        n + 1,
        |s| s < n && state.terminal[s],
        |s| rows[s].as_slice(),
        params.planning_sweeps,
        1e-9,
        warm,
    );
    let mut choice = solved.choice;
    choice.truncate(n);
    (Policy::new(choice), solved.bias)
}

fn replan(state: &mut LearnerState, params: &UrmaxParams) {
    let warm = std::mem::take(&mut state.bias);
    let warm = (warm.len() == state.n_states() + 1).then_some(warm);
    let (policy, bias) = plan(state, params, warm.as_deref());
    state.candidate_policy = policy;
    state.bias = bias;
    state.replans += 1;
    let step = state.steps;
    state.log.push(LogRecord { step, event: super::Event::Replan, payload: json!({ "replans": state.replans }) });
}

/// Runs URMAX for `step_budget` environment interactions (steps, explore
/// plays and resets after terminal states) from a fresh learner state.
/// Returns the exploit policy of the final model and the learner state,
/// whose `candidate_policy` is the optimistic one.
pub fn urmax_iteration<E: LearningEnv + ?Sized>(
    env: &mut E,
    params: &UrmaxParams,
    rng: &mut dyn RngCore,
    step_budget: u64,
) -> Result<(Policy, LearnerState), UrmaxError> {
    let state = LearnerState::new(env);
    continue_iteration(env, params, rng, step_budget, state)
}

/// Continues a learner for `step_budget` more interactions.
pub fn continue_iteration<E: LearningEnv + ?Sized>(
    env: &mut E,
    params: &UrmaxParams,
    rng: &mut dyn RngCore,
    step_budget: u64,
    mut state: LearnerState,
) -> Result<(Policy, LearnerState), UrmaxError> {
    params.validate()?;
    if state.n_states() != env.n_states() {
        return Err(UrmaxError::Env("learner and environment disagree on the state count".into()));
    }
    let mut s = env.reset(rng);
    replan(&mut state, params);
    let end = state.steps + step_budget;
    while state.steps < end {
        if state.terminal[s] || env.is_terminal(s) {
            if !state.terminal[s] {
                state.terminal[s] = true;
                state.dirty[s] = true;
                replan(&mut state, params);
            }
            s = env.reset(rng);
            state.steps += 1;
            continue;
        }
        let a = match state.candidate_policy.action(s) {
            Some(a) => a,
            None => {
                replan(&mut state, params);
                state.candidate_policy.action(s).unwrap_or(EXPLORE)
            }
        };
        state.steps += 1;
        let mut changed = false;
        if a == EXPLORE {
            state.explore_plays += 1;
            state.explore_clock[s] += 1;
            let clock = state.explore_clock[s];
            match env.explore(clock, &state.aware[s], rng) {
                ExploreOutcome::Discovered(found) => {
                    state.discoveries += 1;
                    state.explore_clock[s] = 0;
                    let targets = if params.global_awareness { env.available_states(found) } else { vec![s] };
                    for t in targets.into_iter().chain(std::iter::once(s)) {
                        if state.aware[t].insert(found) {
                            state.dirty[t] = true;
                        }
                    }
                    state.dirty[s] = true;
                    state.record(Event::Discover, json!({ "state": s, "action": found, "clock": clock }));
                    changed = true;
                }
                ExploreOutcome::Exhausted => {
                    if !state.explore_exhausted[s] {
                        state.explore_exhausted[s] = true;
                        state.dirty[s] = true;
                        changed = true;
                    }
                }
                ExploreOutcome::Nothing => {}
            }
            if clock == params.explore_budget {
                state.dirty[s] = true;
                changed = true;
            }
        } else {
            let tr = env.step(a, rng)?;
            let p = state.pairs[s].entry(a).or_default();
            p.visits += 1;
            if p.visits <= params.known_threshold {
                p.reward_sum += tr.reward;
                let e = p.next.entry(tr.next).or_insert((0, 0.0));
                e.0 += 1;
                e.1 += tr.reward;
            }
            if p.visits == params.known_threshold {
                state.mark_known(s, a);
                state.record(Event::Known, json!({ "state": s, "action": a }));
                changed = true;
            }
            if tr.terminal && !state.terminal[tr.next] {
                state.terminal[tr.next] = true;
                state.dirty[tr.next] = true;
                changed = true;
            }
            s = tr.next;
        }
        if changed {
            replan(&mut state, params);
        }
    }
    Ok((state.exploit_policy(params), state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::DiscoveryModel;
    use crate::mdp::{value_iteration, Mdpu};
    use crate::urmax::MdpuEnv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k1: u64, budget: u64) -> UrmaxParams {
        UrmaxParams {
            n_states_guess: 3,
            n_actions_guess: 2,
            r_max_guess: 1.0,
            mixing_time_guess: 1,
            epsilon: 0.1,
            delta: 0.1,
            known_threshold: k1,
            explore_budget: budget,
            global_awareness: true,
            planning_sweeps: 5_000,
        }
    }

    #[test]
    fn single_self_loop() {
        let m = DiscreteMdp::builder(1).transition(0, 0, 0, 1.0, 1.0).build().unwrap();
        let mut env = MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (pi, st) = urmax_iteration(&mut env, &params(5, 0), &mut rng, 50).unwrap();
        assert_eq!(pi.choice, vec![Some(0)]);
        assert_eq!(st.visit_count(0, 0), 50);
    }

    #[test]
    fn no_visits_means_uniform_optimism() {
        let m = DiscreteMdp::builder(2)
            .transition(0, 0, 1, 1.0, 0.0)
            .transition(0, 1, 0, 1.0, 0.0)
            .transition(1, 1, 0, 1.0, 0.0)
            .build()
            .unwrap();
        let env = MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0);
        let st = LearnerState::new(&env);
        let pi = candidate_optimal_policy(&st, &params(5, 10));
        assert_eq!(pi.choice, vec![Some(0), Some(1)]);
        // with no real action a0 is the only optimistic choice
        let m = DiscreteMdp::builder(1).transition(0, 0, 0, 1.0, 0.0).build().unwrap();
        let env = MdpuEnv::new(
            Mdpu::new(m, BTreeSet::new(), vec![BTreeSet::new()], DiscoveryModel::constant(1.0), vec![[0].into()])
                .unwrap(),
            0,
        );
        let st = LearnerState::new(&env);
        assert_eq!(candidate_optimal_policy(&st, &params(5, 10)).choice, vec![Some(EXPLORE)]);
    }

    #[test]
    fn known_model_reduces_to_value_iteration() {
        let m = DiscreteMdp::builder(2)
            .transition(0, 0, 1, 1.0, 0.2)
            .transition(0, 1, 0, 1.0, 0.5)
            .transition(1, 0, 0, 1.0, 1.0)
            .transition(1, 1, 1, 1.0, 0.1)
            .build()
            .unwrap();
        let mut env = MdpuEnv::new(Mdpu::fully_aware(m.clone(), DiscoveryModel::constant(1.0)), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (pi, _) = urmax_iteration(&mut env, &params(3, 0), &mut rng, 500).unwrap();
        let (_, best) = value_iteration(&m, 10_000, 1e-12).unwrap();
        assert_eq!(pi, best);
    }

    #[test]
    fn discovers_hidden_action() {
        let m = DiscreteMdp::builder(1).transition(0, 0, 0, 1.0, 0.1).transition(0, 1, 0, 1.0, 1.0).build().unwrap();
        let mdpu = Mdpu::new(m, [0].into(), vec![[0].into()], DiscoveryModel::constant(0.5), vec![[1].into()]).unwrap();
        let mut env = MdpuEnv::new(mdpu, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (pi, st) = urmax_iteration(&mut env, &params(2, 20), &mut rng, 200).unwrap();
        assert_eq!(pi.action(0), Some(1));
        assert_eq!(st.discoveries, 1);
        assert!(st.log.iter().any(|r| r.event == Event::Discover));
    }

    #[test]
    fn terminal_states_are_learned() {
        let m = DiscreteMdp::builder(3)
            .transition(0, 0, 1, 1.0, 1.0)
            .transition(0, 1, 2, 1.0, 0.3)
            .transition(2, 0, 0, 1.0, 0.3)
            .terminal(1)
            .build()
            .unwrap();
        let mut env = MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (pi, st) = urmax_iteration(&mut env, &params(2, 0), &mut rng, 100).unwrap();
        assert!(st.terminal[1]);
        assert_eq!(pi.action(0), Some(1));
    }

    #[test]
    fn compact_rows_match_full_model() {
        let m = DiscreteMdp::builder(3)
            .transition(0, 0, 1, 1.0, 0.2)
            .transition(0, 1, 0, 0.5, 0.5)
            .transition(0, 1, 2, 0.5, 0.1)
            .transition(0, 2, 2, 1.0, 0.9)
            .transition(1, 0, 0, 1.0, 1.0)
            .transition(1, 2, 2, 1.0, 0.0)
            .transition(2, 0, 1, 1.0, 0.4)
            .build()
            .unwrap();
        let mut env = MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for budget in [0, 3, 7, 20, 60] {
            let (_, st) = urmax_iteration(&mut env, &params(3, 4), &mut rng, budget).unwrap();
            let full = optimistic_model(&st, &params(3, 4)).unwrap();
            let p = crate::mdp::value_iteration_warm(&full, 5_000, 1e-9, None).unwrap();
            let mut choice = p.policy.choice;
            choice.truncate(3);
            assert_eq!(candidate_optimal_policy(&st, &params(3, 4)).choice, choice, "budget {budget}");
        }
    }
}
