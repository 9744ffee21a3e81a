use std::collections::BTreeSet;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::ladder::CrawlerLevelEnv;
use crate::mdp::ActionId;
use crate::urmax::{LearningEnv, MdpuEnv, UrmaxError};

/// A learning environment whose whole action set can be listed, so that
/// baselines can pick actions without any discovery mechanism.
pub trait GaitEnv: LearningEnv {
    fn action_count(&self) -> usize;
    fn action_at(&self, index: usize) -> ActionId;
}

impl GaitEnv for CrawlerLevelEnv {
    fn action_count(&self) -> usize {
        self.level().n_actions()
    }
    fn action_at(&self, index: usize) -> ActionId {
        index
    }
}

impl GaitEnv for MdpuEnv {
    fn action_count(&self) -> usize {
        self.mdpu().underlying().actions().len()
    }
    fn action_at(&self, index: usize) -> ActionId {
        *self.mdpu().underlying().actions().iter().nth(index).expect("index below action_count")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineOptions {
    /// Steps per episode, and the divisor of the average reward.
    pub horizon: usize,
    /// Cumulative reward that counts as reaching the arena wall.
    pub goal: f64,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        Self { horizon: 50, goal: 5.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    /// Interactions used, resets included.
    pub steps: u64,
    pub episodes: u64,
    /// Largest cumulative reward reached within an episode.
    pub max_distance: f64,
    /// Best episode reward divided by the horizon.
    pub best_avg_reward: f64,
    /// Distinct actions seen to move the agent without ending the episode.
    pub useful_found: usize,
    /// Some episode reached the goal without entering a terminal state.
    pub stable_trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableGait {
    pub action: ActionId,
    /// Reward per step while repeating it.
    pub speed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    #[serde(flatten)]
    pub report: BaselineReport,
    pub stable_gaits: Vec<StableGait>,
}

struct Episode {
    reward: f64,
    steps: usize,
    fell: bool,
}

/// Plays `choose` from reset for one episode, stopping at the horizon, a
/// terminal state or the end of the budget.
fn episode<E: GaitEnv + ?Sized>(
    env: &mut E,
    report: &mut BaselineReport,
    useful: &mut BTreeSet<ActionId>,
    budget: u64,
    horizon: usize,
    rng: &mut dyn RngCore,
    mut choose: impl FnMut(&E, &mut dyn RngCore) -> ActionId,
) -> Result<Episode, UrmaxError> {
    let mut s = env.reset(rng);
    report.steps += 1;
    report.episodes += 1;
    let mut ep = Episode { reward: 0.0, steps: 0, fell: false };
    while ep.steps < horizon && report.steps < budget {
        if env.is_terminal(s) {
            ep.fell = true;
            break;
        }
        let a = choose(env, rng);
        let tr = env.step(a, rng)?;
        report.steps += 1;
        ep.steps += 1;
        ep.reward += tr.reward;
        if tr.next != s && !tr.terminal {
            useful.insert(a);
        }
        report.max_distance = report.max_distance.max(ep.reward);
        s = tr.next;
    }
    ep.fell |= env.is_terminal(s);
    Ok(ep)
}

fn random_action<E: GaitEnv + ?Sized>(env: &E, rng: &mut dyn RngCore) -> ActionId {
    env.action_at(rng.random_range(0..env.action_count()))
}

/// Uniformly random actions, episode after episode, until the budget is
/// spent.
pub fn baseline_random<E: GaitEnv + ?Sized>(
    env: &mut E,
    budget: u64,
    opts: &BaselineOptions,
    rng: &mut dyn RngCore,
) -> Result<BaselineReport, UrmaxError> {
    let mut report = BaselineReport::default();
    let mut useful = BTreeSet::new();
    if env.action_count() == 0 || opts.horizon == 0 {
        return Ok(report);
    }
    while report.steps < budget {
        let ep = episode(env, &mut report, &mut useful, budget, opts.horizon, rng, random_action)?;
        report.best_avg_reward = report.best_avg_reward.max(ep.reward / opts.horizon as f64);
        report.stable_trajectory |= !ep.fell && ep.reward >= opts.goal;
    }
    report.useful_found = useful.len();
    Ok(report)
}

/// Half the budget probes random actions for useful ones; the rest repeats
/// each useful action from reset, in discovery order, to look for a stable
/// gait.
pub fn baseline_repeat<E: GaitEnv + ?Sized>(
    env: &mut E,
    budget: u64,
    opts: &BaselineOptions,
    rng: &mut dyn RngCore,
) -> Result<RepeatReport, UrmaxError> {
    let mut out = RepeatReport::default();
    if env.action_count() == 0 || opts.horizon == 0 {
        return Ok(out);
    }
    let report = &mut out.report;
    let mut useful = BTreeSet::new();
    let mut found = Vec::new();
    let probe_budget = budget / 2;
    while report.steps < probe_budget {
        let before = useful.len();
        let ep = episode(env, report, &mut useful, probe_budget, opts.horizon, rng, random_action)?;
        report.best_avg_reward = report.best_avg_reward.max(ep.reward / opts.horizon as f64);
        report.stable_trajectory |= !ep.fell && ep.reward >= opts.goal;
        if useful.len() > before {
            let fresh: Vec<ActionId> = useful.iter().copied().filter(|a| !found.contains(a)).collect();
            found.extend(fresh);
        }
    }
    for &a in &found {
        if report.steps >= budget {
            break;
        }
        let ep = episode(env, report, &mut useful, budget, opts.horizon, rng, |_, _| a)?;
        report.best_avg_reward = report.best_avg_reward.max(ep.reward / opts.horizon as f64);
        if !ep.fell && ep.reward >= opts.goal {
            report.stable_trajectory = true;
            out.stable_gaits.push(StableGait { action: a, speed: ep.reward / ep.steps as f64 });
        }
    }
    out.report.useful_found = useful.len();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::DiscoveryModel;
    use crate::envs::{build_ladder, CrawlerConfig, Exploration, LevelOptions};
    use crate::mdp::{DiscreteMdp, Mdpu};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn level2() -> CrawlerLevelEnv {
        let l = build_ladder(
            &CrawlerConfig::default(),
            &[2],
            LevelOptions { kernel_samples: 1, useful_samples: 1, seed: 0 },
        )
        .unwrap()
        .remove(0);
        CrawlerLevelEnv::new(l, Exploration::Random)
    }

    #[test]
    fn zero_budget_goes_nowhere() {
        let r =
            baseline_random(&mut level2(), 0, &BaselineOptions::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.max_distance, 0.0);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn reproducible() {
        let run = || {
            let r =
                baseline_random(&mut level2(), 2_000, &BaselineOptions::default(), &mut ChaCha8Rng::seed_from_u64(9))
                    .unwrap();
            serde_json::to_string(&r).unwrap()
        };
        assert_eq!(run(), run());
    }

    fn env_from(m: DiscreteMdp<f64>) -> MdpuEnv {
        MdpuEnv::new(Mdpu::fully_aware(m, DiscoveryModel::constant(1.0)), 0)
    }

    #[test]
    fn no_useful_actions_no_gaits() {
        // every action falls into the terminal state
        let m = DiscreteMdp::builder(2)
            .transition(0, 0, 1, 1.0, 0.0)
            .transition(0, 1, 1, 1.0, 0.0)
            .terminal(1)
            .build()
            .unwrap();
        let r = baseline_repeat(
            &mut env_from(m),
            500,
            &BaselineOptions { horizon: 10, goal: 1.0 },
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert!(r.stable_gaits.is_empty());
        assert_eq!(r.report.useful_found, 0);
    }

    #[test]
    fn finds_the_single_repeatable_gait() {
        // action 2 walks 0 -> 1 -> 0 paying 1; actions 0 and 1 fall, except
        // that 0 at state 0 moves to state 1 once without paying
        let m = DiscreteMdp::builder(3)
            .transition(0, 0, 1, 1.0, 0.0)
            .transition(0, 1, 2, 1.0, 0.0)
            .transition(0, 2, 1, 1.0, 1.0)
            .transition(1, 0, 2, 1.0, 0.0)
            .transition(1, 1, 2, 1.0, 0.0)
            .transition(1, 2, 0, 1.0, 1.0)
            .terminal(2)
            .build()
            .unwrap();
        let r = baseline_repeat(
            &mut env_from(m),
            400,
            &BaselineOptions { horizon: 10, goal: 10.0 },
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert_eq!(r.stable_gaits, vec![StableGait { action: 2, speed: 1.0 }]);
        let v = serde_json::to_value(&r).unwrap();
        for key in [
            "steps",
            "episodes",
            "max_distance",
            "best_avg_reward",
            "useful_found",
            "stable_trajectory",
            "stable_gaits",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
