use std::collections::{BTreeMap, BTreeSet};

use mdpu::discovery::DiscoveryModel;
use mdpu::envs::{build_ladder, CrawlerConfig, CrawlerLadder, Exploration, LevelOptions};
use mdpu::mdp::{value_iteration, ActionId, DiscreteMdp, Mdpu, Policy, StateId};
use mdpu::urmax::{
    cell_position, continue_iteration, diagonal_run, urmax_iteration, DiagonalConfig, DiagonalSchedule, Event,
    ExploreOutcome, LearnerState, LearningEnv, MdpuEnv, TabularLadder, Transition, UrmaxError, UrmaxParams,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_mdp(seed: u64, n: usize, k: usize) -> DiscreteMdp<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DiscreteMdp::builder(n);
    for s in 0..n {
        for a in 0..k {
            let t1 = rng.random_range(0..n);
            let t2 = (t1 + rng.random_range(1..n)) % n;
            let p = rng.random_range(0.2..0.8);
            b.add_transition(s, a, t1, p, rng.random_range(0.1..1.0));
            b.add_transition(s, a, t2, 1.0 - p, rng.random_range(0.1..1.0));
        }
    }
    b.build().unwrap()
}

/// Records every real step taken through it.
struct Recorder {
    inner: MdpuEnv,
    steps: Vec<(StateId, ActionId)>,
}

impl LearningEnv for Recorder {
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }
    fn reset(&mut self, rng: &mut dyn RngCore) -> StateId {
        self.inner.reset(rng)
    }
    fn state(&self) -> StateId {
        self.inner.state()
    }
    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<Transition, UrmaxError> {
        self.steps.push((self.inner.state(), action));
        self.inner.step(action, rng)
    }
    fn is_terminal(&self, s: StateId) -> bool {
        self.inner.is_terminal(s)
    }
    fn initial_aware(&self, s: StateId) -> BTreeSet<ActionId> {
        self.inner.initial_aware(s)
    }
    fn explore(&mut self, clock: u64, aware: &BTreeSet<ActionId>, rng: &mut dyn RngCore) -> ExploreOutcome {
        self.inner.explore(clock, aware, rng)
    }
    fn available_states(&self, a: ActionId) -> Vec<StateId> {
        self.inner.available_states(a)
    }
}

/// Textbook RMAX: unknown pairs lead to an absorbing state paying `r_max`,
/// the model is frozen after `k` samples, and the policy is recomputed
/// whenever a pair becomes known.
fn rmax_trajectory(m: &DiscreteMdp<f64>, k: u64, r_max: f64, steps: usize, seed: u64) -> Vec<(StateId, ActionId)> {
    let n = m.n_states();
    let mut counts: Vec<BTreeMap<ActionId, BTreeMap<StateId, (u64, f64)>>> = vec![BTreeMap::new(); n];
    let plan = |counts: &Vec<BTreeMap<ActionId, BTreeMap<StateId, (u64, f64)>>>| -> Policy {
        let mut b = DiscreteMdp::builder(n + 1);
        for s in 0..n {
            for a in m.available(s) {
                match counts[s].get(&a).filter(|c| c.values().map(|x| x.0).sum::<u64>() >= k) {
                    Some(c) => {
                        for (&t, &(cnt, rsum)) in c {
                            b.add_transition(s, a, t, cnt as f64 / k as f64, rsum / cnt as f64);
                        }
                    }
                    None => b.add_transition(s, a, n, 1.0, r_max),
                }
            }
        }
        b.add_transition(n, 0, n, 1.0, r_max);
        value_iteration(&b.build().unwrap(), 5_000, 1e-9).unwrap().1
    };
    let mut env = MdpuEnv::new(Mdpu::fully_aware(m.clone(), DiscoveryModel::constant(1.0)), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = env.reset(&mut rng);
    let mut pi = plan(&counts);
    let mut out = Vec::new();
    for _ in 0..steps {
        let a = pi.action(s).unwrap();
        out.push((s, a));
        let tr = env.step(a, &mut rng).unwrap();
        let c = counts[s].entry(a).or_default();
        let seen: u64 = c.values().map(|x| x.0).sum();
        if seen < k {
            let e = c.entry(tr.next).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += tr.reward;
            if seen + 1 == k {
                pi = plan(&counts);
            }
        }
        s = tr.next;
    }
    out
}

#[test]
fn no_hidden_actions_and_no_exploring_is_rmax() {
    for seed in 0..20 {
        let m = random_mdp(seed, 4, 3);
        let k = 4;
        let params = UrmaxParams {
            n_states_guess: 4,
            n_actions_guess: 3,
            r_max_guess: 2.0,
            mixing_time_guess: 1,
            epsilon: 0.1,
            delta: 0.1,
            known_threshold: k,
            explore_budget: 0,
            global_awareness: true,
            planning_sweeps: 5_000,
        };
        let mut env = Recorder {
            inner: MdpuEnv::new(Mdpu::fully_aware(m.clone(), DiscoveryModel::constant(1.0)), 0),
            steps: Vec::new(),
        };
        let (_, state) = urmax_iteration(&mut env, &params, &mut ChaCha8Rng::seed_from_u64(seed), 1_000).unwrap();
        assert_eq!(state.explore_plays, 0);
        assert_eq!(env.steps, rmax_trajectory(&m, k, 2.0, 1_000, seed), "seed {seed}");
    }
}

fn hidden_jackpot() -> MdpuEnv {
    let m = DiscreteMdp::builder(1).transition(0, 0, 0, 1.0, 1.0).transition(0, 1, 0, 1.0, 10.0).build().unwrap();
    let aware = vec![BTreeSet::from([0])];
    let hidden = vec![BTreeSet::from([1])];
    MdpuEnv::new(Mdpu::new(m, BTreeSet::from([0, 1]), aware, DiscoveryModel::constant(0.5), hidden).unwrap(), 0)
}

#[test]
fn hidden_jackpot_is_found_quickly_and_used() {
    let mut params = UrmaxParams::derived(1, 2, 10.0, 1, 0.1, 0.1, &DiscoveryModel::constant(0.5)).unwrap();
    params.known_threshold = 2;
    let mut found_at = Vec::new();
    for seed in 0..200 {
        let mut env = hidden_jackpot();
        let (pi, state) = urmax_iteration(&mut env, &params, &mut ChaCha8Rng::seed_from_u64(seed), 200).unwrap();
        let first = state.log.iter().find(|r| r.event == Event::Discover).expect("discovered");
        found_at.push(first.step);
        assert_eq!(pi.action(0), Some(1), "seed {seed}");
    }
    found_at.sort_unstable();
    assert!(found_at[99] <= 4, "median {}", found_at[99]);
}

#[test]
fn awareness_only_grows() {
    let m = random_mdp(3, 5, 4);
    let aware: Vec<BTreeSet<ActionId>> = (0..5).map(|_| BTreeSet::from([0])).collect();
    let hidden: Vec<BTreeSet<ActionId>> = (0..5).map(|_| BTreeSet::from([1, 2, 3])).collect();
    let mdpu = Mdpu::new(m, BTreeSet::from([0, 1, 2, 3]), aware, DiscoveryModel::constant(0.2), hidden).unwrap();
    let mut env = MdpuEnv::new(mdpu, 0);
    let params = UrmaxParams::for_rank(3, 0.1, 0.1, &DiscoveryModel::constant(0.2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut state = LearnerState::new(&env);
    let mut before = state.aware.clone();
    for _ in 0..30 {
        state = continue_iteration(&mut env, &params, &mut rng, 50, state).unwrap().1;
        for (old, new) in before.iter().zip(&state.aware) {
            assert!(old.is_subset(new));
        }
        before = state.aware.clone();
    }
    assert!(state.discoveries > 0);
}

#[test]
fn every_cell_is_reached_in_time() {
    let mut seen = BTreeMap::new();
    for (step, (i, k)) in DiagonalSchedule::new(usize::MAX).take(99 * 100 / 2).enumerate() {
        seen.insert((i, k), step as u64 + 1);
    }
    for i in 1..=50 {
        for k in 1..=50 {
            let at = seen[&(i, k)];
            assert!(at <= ((i + k - 1) * (i + k) / 2) as u64);
            assert_eq!(at, cell_position(i, k));
        }
    }
    let first: Vec<_> = DiagonalSchedule::new(3).take(6).collect();
    assert_eq!(first, vec![(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)]);
}

#[test]
fn single_level_walks_the_ranks() {
    let m = DiscreteMdp::builder(1).transition(0, 0, 0, 1.0, 1.0).build().unwrap();
    let ladder = TabularLadder { env: MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0) };
    let cfg = DiagonalConfig { cell_budget: 10, eval_runs: Some(1), eval_horizon: 5, ..DiagonalConfig::default() };
    let (pi, report) = diagonal_run(&ladder, &mut ChaCha8Rng::seed_from_u64(0), 30, &cfg).unwrap();
    let cells: Vec<_> = report.cells.iter().map(|c| (c.level, c.rank)).collect();
    assert_eq!(cells, vec![(1, 1), (1, 2), (1, 3)]);
    assert_eq!(pi.action(0), Some(0));
    assert!(report.cells.iter().all(|c| (c.measured_reward - 1.0).abs() < 1e-12));
}

#[test]
fn retained_reward_is_a_running_maximum_on_the_crawler() {
    let levels = build_ladder(
        &CrawlerConfig::default(),
        &[2, 3],
        LevelOptions { kernel_samples: 1, useful_samples: 1, seed: 0 },
    )
    .unwrap();
    let ladder = CrawlerLadder::new(levels, Exploration::Systematic);
    let cfg = DiagonalConfig { cell_budget: 1_500, eval_runs: Some(1), eval_horizon: 50, ..DiagonalConfig::default() };
    let (_, report) = diagonal_run(&ladder, &mut ChaCha8Rng::seed_from_u64(4), 18_000, &cfg).unwrap();
    assert!(report.cells.len() >= 10);
    let mut best = f64::NEG_INFINITY;
    for c in &report.cells {
        best = best.max(c.measured_reward);
        assert_eq!(c.retained_reward, best);
    }
    assert!(report.cells.windows(2).all(|w| w[1].retained_reward >= w[0].retained_reward));
    assert!(report.cells.iter().any(|c| c.level == 2) && report.cells.iter().any(|c| c.level == 1));
}
