use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::crawler::{Crawler, CrawlerConfig};
use super::EnvError;
use crate::continuous::{
    classify_useful, discretize_transition, BoxSpace, ContinuousMdp, DiscretizationLevel, Grid, Membership,
    TransitionEstimate,
};
use crate::derive_seed;
use crate::discovery::{DiscoveryKind, DiscoveryModel};
use crate::mdp::{ActionId, StateId};
use crate::urmax::{DiagonalConfig, ExploreOutcome, Ladder, LearningEnv, Transition, UrmaxError, UrmaxParams};

/// How explore plays search for new actions at a crawler level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exploration {
    /// Walks the action ids in order, one per play, separately per state.
    Systematic,
    /// Tries a uniformly random action id.
    Random,
    /// Expert hints: mirror images of known useful actions are proposed
    /// first; otherwise with probability `beta` a hidden useful action is
    /// revealed, preferring alternating one-joint strides, and otherwise a
    /// random action is tried. The rest action is known from the start.
    Apprenticeship { beta: f64 },
}

impl Exploration {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Exploration::Apprenticeship { beta } if !(*beta > 0.0 && *beta <= 1.0) => {
                Err(format!("apprenticeship beta {beta} must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Sampling knobs shared by every level of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelOptions {
    /// Continuous samples per transition estimate; noiseless crawlers need 1.
    pub kernel_samples: usize,
    /// Samples per usefulness check.
    pub useful_samples: usize,
    pub seed: u64,
}

impl Default for LevelOptions {
    fn default() -> Self {
        Self { kernel_samples: 16, useful_samples: 4, seed: 0 }
    }
}

/// Summary of one level, as published in run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub states: usize,
    pub basic_actions: usize,
    pub potential_actions: u64,
    pub time_step: f64,
    pub action_length: f64,
    pub resolution: f64,
}

/// One discretization level of the crawler with lazily filled kernel and
/// usefulness tables. Shared between environments through an `Arc`.
pub struct CrawlerLevel {
    crawler: Arc<Crawler>,
    level: DiscretizationLevel<f64>,
    n_actions: usize,
    opts: LevelOptions,
    kernels: Mutex<HashMap<(StateId, ActionId), Arc<TransitionEstimate<f64>>>>,
    useful: Mutex<HashMap<StateId, Arc<Vec<bool>>>>,
    terminal: Vec<bool>,
}

impl std::fmt::Debug for CrawlerLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CrawlerLevel").field("level", &self.level.index).field("n_actions", &self.n_actions).finish()
    }
}

/// `(2π n)/i + 2R + 1/2`: the summed covering radii of the level's state
/// and action grids. Position is not refined, the standing flag has two
/// values and every joint has `i`.
pub fn crawler_resolution(cfg: &CrawlerConfig, i: usize) -> f64 {
    2.0 * PI * cfg.n_joints as f64 / i as f64 + 2.0 * cfg.arena_radius + 0.5
}

/// Builds the crawler's discretization levels.
pub fn build_ladder(
    cfg: &CrawlerConfig,
    levels: &[usize],
    opts: LevelOptions,
) -> Result<Vec<Arc<CrawlerLevel>>, EnvError> {
    let crawler = Arc::new(Crawler::new(cfg.clone()).map_err(EnvError::Config)?);
    levels.iter().map(|&i| CrawlerLevel::new(crawler.clone(), i, opts).map(Arc::new)).collect()
}

impl CrawlerLevel {
    pub fn new(crawler: Arc<Crawler>, i: usize, opts: LevelOptions) -> Result<Self, EnvError> {
        if i < 2 {
            return Err(EnvError::Level(i));
        }
        let cfg = crawler.config().clone();
        let n = cfg.n_joints;
        let mut counts = vec![1, 1, 2];
        counts.extend(std::iter::repeat_n(i, n));
        let state_grid = Grid::over(crawler.state_box(), &counts)?;
        let action_grid = Grid::over(&BoxSpace::new(vec![-PI; n], vec![PI; n])?, &vec![i; n])?;
        let level = DiscretizationLevel::new(
            i,
            state_grid,
            action_grid,
            cfg.t_step_base,
            cfg.max_action_length,
            crawler_resolution(&cfg, i),
        )?
        .with_membership(Membership::Nearest);
        let n_actions = level
            .n_potential_actions()
            .and_then(|c| usize::try_from(c).ok())
            .filter(|&c| c < EXPLORE_GUARD)
            .ok_or(EnvError::TooManyActions(i))?;
        let terminal = (0..level.n_states()).map(|s| crawler.is_terminal(&level.state_grid.point(s))).collect();
        Ok(Self {
            crawler,
            level,
            n_actions,
            opts,
            kernels: Mutex::new(HashMap::new()),
            useful: Mutex::new(HashMap::new()),
            terminal,
        })
    }

    pub fn crawler(&self) -> &Crawler {
        &self.crawler
    }

    pub fn level(&self) -> &DiscretizationLevel<f64> {
        &self.level
    }

    pub fn index(&self) -> usize {
        self.level.index
    }

    pub fn n_states(&self) -> usize {
        self.level.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn summary(&self) -> LevelSummary {
        LevelSummary {
            level: self.level.index,
            states: self.n_states(),
            basic_actions: self.level.n_basic_actions(),
            potential_actions: self.n_actions as u64,
            time_step: self.level.time_step,
            action_length: self.level.max_action_length(),
            resolution: self.level.resolution,
        }
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.terminal[s]
    }

    /// Grid state nearest the crawler's rest pose.
    pub fn rest_state(&self) -> StateId {
        self.level.state_grid.nearest(&self.crawler.rest().to_vec())
    }

    /// One-slice action to the grid targets nearest the rest pose.
    pub fn rest_action(&self) -> ActionId {
        let n = self.crawler.config().n_joints;
        let basic = self.level.action_grid.nearest(&vec![0.0; n]);
        self.level.encode(&[basic]) as ActionId
    }

    /// The action with every segment's joint targets in reverse order.
    pub fn mirror(&self, a: ActionId) -> ActionId {
        let digits = self.level.decode(a as u64).expect("action id in range");
        let grid = &self.level.action_grid;
        let flipped: Vec<usize> = digits
            .iter()
            .map(|&d| {
                let mut c = grid.coords(d);
                c.reverse();
                grid.flat(&c)
            })
            .collect();
        self.level.encode(&flipped) as ActionId
    }

    /// Every segment moves exactly one joint, and consecutive segments move
    /// different joints.
    pub fn is_stride_pattern(&self, s: StateId, a: ActionId) -> bool {
        let grid = &self.level.action_grid;
        let start = self.level.state_grid.coords(s);
        let mut joints: Vec<usize> = start[3..].to_vec();
        let mut last_moved = None;
        for d in self.level.decode(a as u64).expect("action id in range") {
            let target = grid.coords(d);
            let moved: Vec<usize> = (0..joints.len()).filter(|&j| joints[j] != target[j]).collect();
            if moved.len() != 1 || last_moved == Some(moved[0]) {
                return false;
            }
            last_moved = Some(moved[0]);
            joints = target;
        }
        true
    }

    pub fn transition(&self, s: StateId, a: ActionId) -> Result<Arc<TransitionEstimate<f64>>, EnvError> {
        if let Some(t) = self.kernels.lock().expect("kernel cache").get(&(s, a)) {
            return Ok(t.clone());
        }
        let path = self.level.action_path(a as u64)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.opts.seed, &[0, s as u64, a as u64]));
        let est =
            Arc::new(discretize_transition(&*self.crawler, &self.level, s, &path, self.opts.kernel_samples, &mut rng)?);
        self.kernels.lock().expect("kernel cache").insert((s, a), est.clone());
        Ok(est)
    }

    pub fn is_useful(&self, s: StateId, a: ActionId) -> bool {
        if let Some(t) = self.useful.lock().expect("useful cache").get(&s) {
            return t[a];
        }
        self.check_useful(s, a)
    }

    fn check_useful(&self, s: StateId, a: ActionId) -> bool {
        let path = self.level.action_path(a as u64).expect("action id in range");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.opts.seed, &[1, s as u64, a as u64]));
        classify_useful(&*self.crawler, &self.level, s, &path, &mut rng, self.opts.useful_samples)
    }

    /// Usefulness of every action at `s`.
    pub fn useful_table(&self, s: StateId) -> Arc<Vec<bool>> {
        if let Some(t) = self.useful.lock().expect("useful cache").get(&s) {
            return t.clone();
        }
        let table: Arc<Vec<bool>> = Arc::new((0..self.n_actions).map(|a| self.check_useful(s, a)).collect());
        self.useful.lock().expect("useful cache").entry(s).or_insert(table).clone()
    }

    pub fn useful_count(&self, s: StateId) -> usize {
        self.useful_table(s).iter().filter(|u| **u).count()
    }
}

/// Action ids must stay clear of the explore action's id.
const EXPLORE_GUARD: usize = usize::MAX / 2;

/// A crawler level as an URMAX learning environment.
#[derive(Debug, Clone)]
pub struct CrawlerLevelEnv {
    level: Arc<CrawlerLevel>,
    exploration: Exploration,
    current: StateId,
    scan: Vec<usize>,
}

impl CrawlerLevelEnv {
    pub fn new(level: Arc<CrawlerLevel>, exploration: Exploration) -> Self {
        let n = level.n_states();
        let current = level.rest_state();
        Self { level, exploration, current, scan: vec![0; n] }
    }

    pub fn level(&self) -> &CrawlerLevel {
        &self.level
    }

    pub fn exploration(&self) -> Exploration {
        self.exploration
    }

    /// Moves the crawler to grid state `s` without acting.
    pub fn place(&mut self, s: StateId) {
        assert!(s < self.level.n_states(), "state {s} out of range");
        self.current = s;
    }

    fn reveal(&self, a: ActionId, aware: &BTreeSet<ActionId>) -> ExploreOutcome {
        if !aware.contains(&a) && self.level.is_useful(self.current, a) {
            ExploreOutcome::Discovered(a)
        } else {
            ExploreOutcome::Nothing
        }
    }
}

impl LearningEnv for CrawlerLevelEnv {
    fn n_states(&self) -> usize {
        self.level.n_states()
    }

    fn reset(&mut self, _rng: &mut dyn RngCore) -> StateId {
        self.current = self.level.rest_state();
        self.current
    }

    fn state(&self) -> StateId {
        self.current
    }

    fn step(&mut self, action: ActionId, rng: &mut dyn RngCore) -> Result<Transition, UrmaxError> {
        let s = self.current;
        if self.level.is_terminal(s) {
            return Err(UrmaxError::TerminalStep(s));
        }
        if action >= self.level.n_actions() {
            return Err(UrmaxError::Unavailable { state: s, action });
        }
        let est = self.level.transition(s, action).map_err(|e| UrmaxError::Env(e.to_string()))?;
        let pick = if est.outcomes.len() == 1 {
            &est.outcomes[0]
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            est.outcomes
                .iter()
                .find(|o| {
                    acc += o.mass;
                    u < acc
                })
                .unwrap_or_else(|| est.outcomes.last().expect("kernels are nonempty"))
        };
        self.current = pick.end();
        Ok(Transition { next: self.current, reward: pick.reward, terminal: self.level.is_terminal(self.current) })
    }

    fn is_terminal(&self, s: StateId) -> bool {
        self.level.is_terminal(s)
    }

    fn initial_aware(&self, s: StateId) -> BTreeSet<ActionId> {
        match self.exploration {
            Exploration::Apprenticeship { .. } if !self.level.is_terminal(s) => [self.level.rest_action()].into(),
            _ => BTreeSet::new(),
        }
    }

    fn explore(&mut self, _clock: u64, aware: &BTreeSet<ActionId>, rng: &mut dyn RngCore) -> ExploreOutcome {
        let s = self.current;
        let n = self.level.n_actions();
        match self.exploration {
            Exploration::Systematic => {
                let pos = self.scan[s];
                if pos >= n {
                    return ExploreOutcome::Exhausted;
                }
                self.scan[s] += 1;
                self.reveal(pos, aware)
            }
            Exploration::Random => self.reveal(rng.random_range(0..n), aware),
            Exploration::Apprenticeship { beta } => {
                let useful = self.level.useful_table(s);
                if let Some(m) = aware.iter().map(|&a| self.level.mirror(a)).find(|m| useful[*m] && !aware.contains(m))
                {
                    return ExploreOutcome::Discovered(m);
                }
                if rng.random::<f64>() < beta {
                    let hidden: Vec<ActionId> = (0..n).filter(|a| useful[*a] && !aware.contains(a)).collect();
                    let strides: Vec<ActionId> =
                        hidden.iter().copied().filter(|&a| self.level.is_stride_pattern(s, a)).collect();
                    let pool = if strides.is_empty() { hidden } else { strides };
                    if pool.is_empty() {
                        return ExploreOutcome::Nothing;
                    }
                    return ExploreOutcome::Discovered(pool[rng.random_range(0..pool.len())]);
                }
                self.reveal(rng.random_range(0..n), aware)
            }
        }
    }

    fn available_states(&self, _a: ActionId) -> Vec<StateId> {
        (0..self.level.n_states()).filter(|&s| !self.level.is_terminal(s)).collect()
    }

    fn reward_bound(&self) -> Option<f64> {
        Some(self.level.crawler().reward_rate_bound() * self.level.level().max_action_length())
    }
}

/// Crawler levels wrapped for [`crate::urmax::diagonal_run`]; ladder level
/// `k` is the `k`-th entry of `levels`.
#[derive(Debug, Clone)]
pub struct CrawlerLadder {
    pub levels: Vec<Arc<CrawlerLevel>>,
    pub exploration: Exploration,
    /// Replaces the per-level discovery model when set.
    pub model: Option<DiscoveryModel>,
}

impl CrawlerLadder {
    pub fn new(levels: Vec<Arc<CrawlerLevel>>, exploration: Exploration) -> Self {
        Self { levels, exploration, model: None }
    }

    pub fn with_discovery(mut self, model: Option<DiscoveryModel>) -> Self {
        self.model = model;
        self
    }

    fn entry(&self, level: usize) -> Result<&Arc<CrawlerLevel>, UrmaxError> {
        level
            .checked_sub(1)
            .and_then(|k| self.levels.get(k))
            .ok_or_else(|| UrmaxError::Env(format!("ladder has no level {level}")))
    }
}

impl Ladder for CrawlerLadder {
    type Env = CrawlerLevelEnv;

    fn levels(&self) -> usize {
        self.levels.len()
    }

    fn build(&self, level: usize) -> Result<CrawlerLevelEnv, UrmaxError> {
        Ok(CrawlerLevelEnv::new(self.entry(level)?.clone(), self.exploration))
    }

    /// An explicit `model` wins. Otherwise brute force uses the exact model for the rest state's useful count;
    /// apprenticeship uses its guaranteed rate `beta`.
    fn discovery(&self, level: usize) -> DiscoveryModel {
        if let Some(m) = &self.model {
            return m.clone();
        }
        let Ok(l) = self.entry(level) else {
            return DiscoveryModel::constant(1.0);
        };
        let total = l.n_actions() as u64;
        let useful = l.useful_count(l.rest_state()).max(1) as u64;
        let kind = match self.exploration {
            Exploration::Systematic => DiscoveryKind::BruteForceSystematic { total, useful, positions: None },
            Exploration::Random => DiscoveryKind::BruteForceRandom { total, useful },
            Exploration::Apprenticeship { beta } => return DiscoveryModel::constant(beta),
        };
        DiscoveryModel::new(kind).expect("useful count within the action count")
    }

    fn params(&self, level: usize, rank: usize, cfg: &DiagonalConfig) -> Result<UrmaxParams, UrmaxError> {
        let mut p = UrmaxParams::for_rank(rank, cfg.epsilon, cfg.delta, &self.discovery(level))?;
        p.planning_sweeps = cfg.planning_sweeps;
        Ok(p)
    }
}
