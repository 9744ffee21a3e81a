#![allow(dead_code)]

use mdpu::continuous::{ActionPath, BoxSpace, ContinuousMdp, DiscretizationLevel, Grid, StatePath};
use rand::{Rng, RngCore};

/// Time unit of generated paths; every boundary is a multiple of it.
pub const UNIT: f64 = 0.01;

/// A path of `units · UNIT` total length cut at random unit boundaries, with
/// components in `[-2, 2]`.
pub fn random_path(rng: &mut impl Rng, dim: usize, units: usize) -> ActionPath<f64> {
    let mut cuts: Vec<usize> = (0..rng.random_range(0..6)).map(|_| rng.random_range(1..units.max(2))).collect();
    cuts.push(units);
    cuts.sort_unstable();
    cuts.dedup();
    let mut prev = 0;
    let mut segs = Vec::new();
    for c in cuts.into_iter().filter(|&c| c > 0 && c <= units) {
        let v = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        segs.push((v, (c - prev) as f64 * UNIT));
        prev = c;
    }
    ActionPath::new(segs).unwrap()
}

pub fn random_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect()
}

/// Midpoint rule with `step`; exact when every boundary is a multiple of
/// `step` and the integrand is piecewise constant.
pub fn riemann_distance(p: &ActionPath<f64>, q: &ActionPath<f64>, step: f64) -> f64 {
    let n = (p.length() / step).round() as usize;
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) * step;
            p.at(t).iter().zip(q.at(t)).map(|(a, b)| (a - b).abs()).sum::<f64>() * step
        })
        .sum()
}

/// One-dimensional state in `[0, 1]`: any action lands on 0.125 with
/// probability `low` and on 0.875 otherwise, at the start of the action.
/// The reward is `pay` times the signed displacement.
pub struct Split {
    pub low: f64,
    pub pay: f64,
    pub space: BoxSpace<f64>,
}

impl Split {
    pub fn new(low: f64) -> Self {
        Self { low, pay: 1.0, space: BoxSpace::new(vec![0.0], vec![1.0]).unwrap() }
    }
}

impl ContinuousMdp<f64> for Split {
    fn state_box(&self) -> &BoxSpace<f64> {
        &self.space
    }
    fn action_box(&self) -> &BoxSpace<f64> {
        &self.space
    }
    fn max_action_length(&self) -> f64 {
        1.0
    }
    fn sample_path(&self, _s: &[f64], a: &ActionPath<f64>, rng: &mut dyn RngCore) -> StatePath<f64> {
        let to = if rng.random::<f64>() < self.low { 0.125 } else { 0.875 };
        StatePath::constant(vec![to], a.length()).unwrap()
    }
    fn reward(&self, s: &[f64], sc: &StatePath<f64>, _a: &ActionPath<f64>) -> f64 {
        self.pay * (sc.last()[0] - s[0])
    }
    fn reward_rate_bound(&self) -> f64 {
        2.0
    }
    fn is_terminal(&self, _s: &[f64]) -> bool {
        false
    }
}

/// `values` cell centres on `[0, 1]` for states and actions, slices of 0.5
/// and actions of up to two slices.
pub fn unit_level(values: usize) -> DiscretizationLevel<f64> {
    let g = Grid::over(&BoxSpace::new(vec![0.0], vec![1.0]).unwrap(), &[values]).unwrap();
    DiscretizationLevel::new(1, g.clone(), g, 0.5, 1.0, 1.0).unwrap()
}
