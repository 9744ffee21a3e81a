use std::collections::BTreeMap;

use rand::RngCore;

use super::{l1_distance, ActionPath, ContinuousError, ContinuousMdp, DiscretizationLevel, Membership, StatePath};
use crate::Scalar;

/// End-state displacement at or below which an action "does not change the
/// state".
pub const STILL_TOLERANCE: f64 = 1e-6;

/// Level paths enumerated inside one resolution ball before giving up.
const BALL_CAP: usize = 1_000_000;

/// A level state path (one grid state per time slice) with its probability
/// and the mean continuous reward of the samples credited to it.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelOutcome<F> {
    pub path: Vec<usize>,
    pub mass: F,
    pub reward: F,
}

impl<F> LevelOutcome<F> {
    pub fn end(&self) -> usize {
        *self.path.last().expect("level paths are nonempty")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate<F> {
    /// Sorted by path.
    pub outcomes: Vec<LevelOutcome<F>>,
    /// Set when no sample came within the resolution of any level path and
    /// mass went to the nearest paths instead.
    pub fallback: bool,
    pub samples: usize,
}

impl<F: Scalar> TransitionEstimate<F> {
    pub fn total_mass(&self) -> F {
        self.outcomes.iter().map(|o| o.mass).sum()
    }

    pub fn expected_reward(&self) -> F {
        self.outcomes.iter().map(|o| o.mass * o.reward).sum()
    }
}

/// Integrated L1 cost of holding each grid state during each slice.
fn slice_costs<F: Scalar>(level: &DiscretizationLevel<F>, sc: &StatePath<F>, slices: usize) -> Vec<Vec<F>> {
    let grid = &level.state_grid;
    let points: Vec<Vec<F>> = (0..grid.size()).map(|g| grid.point(g)).collect();
    (0..slices)
        .map(|k| {
            let from = level.time_step * F::of_usize(k);
            let to = level.time_step * F::of_usize(k + 1);
            let pieces: Vec<_> = sc.window(from, to).collect();
            points
                .iter()
                .map(|p| pieces.iter().map(|(x, w)| *w * l1_distance(x, p).expect("state dims agree")).sum())
                .collect()
        })
        .collect()
}

fn nearest_path<F: Scalar>(costs: &[Vec<F>]) -> Vec<usize> {
    costs
        .iter()
        .map(|row| {
            let mut best = 0;
            for (g, c) in row.iter().enumerate() {
                if *c < row[best] {
                    best = g;
                }
            }
            best
        })
        .collect()
}

/// Every level path whose summed slice cost is within `radius`.
fn ball<F: Scalar>(costs: &[Vec<F>], radius: F) -> Result<Vec<Vec<usize>>, ContinuousError> {
    let slack = F::of(1e-12) * F::one().max(radius);
    let sorted: Vec<Vec<(F, usize)>> = costs
        .iter()
        .map(|row| {
            let mut r: Vec<(F, usize)> = row.iter().copied().zip(0..).collect();
            r.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite costs").then(a.1.cmp(&b.1)));
            r
        })
        .collect();
    // cheapest possible completion from slice k onwards
    let mut rest = vec![F::zero(); costs.len() + 1];
    for k in (0..costs.len()).rev() {
        rest[k] = rest[k + 1] + sorted[k][0].0;
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(costs.len());
    fn walk<F: Scalar>(
        k: usize,
        spent: F,
        limit: F,
        sorted: &[Vec<(F, usize)>],
        rest: &[F],
        prefix: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> Result<(), ContinuousError> {
        if k == sorted.len() {
            if out.len() >= BALL_CAP {
                return Err(ContinuousError::BallTooLarge(BALL_CAP));
            }
            out.push(prefix.clone());
            return Ok(());
        }
        for &(c, g) in &sorted[k] {
            if spent + c + rest[k + 1] > limit {
                break;
            }
            prefix.push(g);
            walk(k + 1, spent + c, limit, sorted, rest, prefix, out)?;
            prefix.pop();
        }
        Ok(())
    }
    walk(0, F::zero(), radius + slack, &sorted, &rest, &mut prefix, &mut out)?;
    Ok(out)
}

/// Monte Carlo estimate of the level transition kernel from grid state `s1`.
///
/// Each sampled state path credits one unit to every level path it belongs
/// to under the level's membership rule, and the credits are normalized.
pub fn discretize_transition<F: Scalar, M: ContinuousMdp<F> + ?Sized>(
    cm: &M,
    level: &DiscretizationLevel<F>,
    s1: usize,
    a: &ActionPath<F>,
    n_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<TransitionEstimate<F>, ContinuousError> {
    let start = level.state_grid.point(s1);
    if cm.is_terminal(&start) {
        return Err(ContinuousError::TerminalState(s1));
    }
    if !cm.feasible(a) {
        return Err(ContinuousError::Infeasible);
    }
    let slices = (a.length() / level.time_step).round().to_usize().unwrap_or(0).max(1);
    let n_samples = n_samples.max(1);
    let mut credit: BTreeMap<Vec<usize>, (F, F)> = BTreeMap::new();
    let mut nearest: BTreeMap<Vec<usize>, (F, F)> = BTreeMap::new();
    for _ in 0..n_samples {
        let sc = cm.sample_path(&start, a, rng);
        let r = cm.reward(&start, &sc, a);
        let costs = slice_costs(level, &sc, slices);
        let members = match level.membership {
            Membership::Nearest => vec![nearest_path(&costs)],
            Membership::Ball(radius) => ball(&costs, radius)?,
        };
        if members.is_empty() {
            let e = nearest.entry(nearest_path(&costs)).or_insert((F::zero(), F::zero()));
            e.0 += F::one();
            e.1 += r;
        }
        for m in members {
            let e = credit.entry(m).or_insert((F::zero(), F::zero()));
            e.0 += F::one();
            e.1 += r;
        }
    }
    let fallback = credit.is_empty();
    let pool = if fallback { nearest } else { credit };
    let total: F = pool.values().map(|v| v.0).sum();
    let outcomes = pool
        .into_iter()
        .map(|(path, (count, reward_sum))| LevelOutcome { path, mass: count / total, reward: reward_sum / count })
        .collect();
    Ok(TransitionEstimate { outcomes, fallback, samples: n_samples })
}

/// Whether `a` is useful at grid state `s`: every sampled transition moves
/// the state and ends neither terminal nor failed.
pub fn classify_useful<F: Scalar, M: ContinuousMdp<F> + ?Sized>(
    cm: &M,
    level: &DiscretizationLevel<F>,
    s: usize,
    a: &ActionPath<F>,
    rng: &mut dyn RngCore,
    n_samples: usize,
) -> bool {
    let start = level.state_grid.point(s);
    if cm.is_terminal(&start) || !cm.feasible(a) {
        return false;
    }
    (0..n_samples.max(1)).all(|_| {
        let sc = cm.sample_path(&start, a, rng);
        let end = sc.last();
        l1_distance(end, &start).expect("state dims agree") > F::of(STILL_TOLERANCE)
            && !cm.is_terminal(end)
            && !cm.is_failed(end)
    })
}
