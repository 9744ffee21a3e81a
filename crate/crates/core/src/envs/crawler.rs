use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::continuous::{ActionPath, BoxSpace, ContinuousError, ContinuousMdp, PiecewisePath, StatePath};

/// Parameters of the arena crawler. See `docs/crawler.md`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlerConfig {
    pub arena_radius: f64,
    pub n_joints: usize,
    /// Displacement per radian of backward swing, one per joint.
    pub gains: Vec<f64>,
    /// A segment whose total joint swing exceeds this makes the crawler fall.
    pub balance_limit: f64,
    /// Standard deviation of the displacement noise per base time slice.
    pub noise_scale: f64,
    pub t_step_base: f64,
    pub max_action_length: f64,
}

impl Default for CrawlerConfig {
    fn default() -> Self {
        Self {
            arena_radius: 5.0,
            n_joints: 2,
            gains: vec![0.02, 0.02],
            balance_limit: 4.5,
            noise_scale: 0.0,
            t_step_base: 0.125,
            max_action_length: 0.5,
        }
    }
}

impl CrawlerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.arena_radius > 0.0 && self.arena_radius.is_finite()) {
            return Err("arena_radius must be positive".into());
        }
        if self.n_joints == 0 {
            return Err("n_joints must be at least 1".into());
        }
        if self.gains.len() != self.n_joints {
            return Err(format!("gains has {} entries for {} joints", self.gains.len(), self.n_joints));
        }
        if self.gains.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err("gains must be finite and non-negative".into());
        }
        if !(self.balance_limit > 0.0 && self.balance_limit.is_finite()) {
            return Err("balance_limit must be positive".into());
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err("noise_scale must be non-negative".into());
        }
        if !(self.t_step_base > 0.0 && self.t_step_base.is_finite()) {
            return Err("t_step_base must be positive".into());
        }
        let ratio = self.max_action_length / self.t_step_base;
        if !(ratio >= 1.0 - 1e-9 && (ratio - ratio.round()).abs() <= 1e-9) {
            return Err("max_action_length must be a positive multiple of t_step_base".into());
        }
        Ok(())
    }

    /// Segments in the longest action.
    pub fn max_segments(&self) -> usize {
        (self.max_action_length / self.t_step_base).round() as usize
    }

    /// Displacement of the alternating stride `[(-a, 0, ..), (0, -a, ..)]`
    /// from rest: `(g_1 + g_2) a`, valid while `2a <= balance_limit`.
    pub fn alternating_stride(&self, amplitude: f64) -> f64 {
        let g2 = self.gains.get(1).copied().unwrap_or(0.0);
        (self.gains[0] + g2) * amplitude
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlerState {
    pub x: f64,
    pub y: f64,
    pub joints: Vec<f64>,
    pub fallen: bool,
}

impl CrawlerState {
    pub fn rest(n_joints: usize) -> Self {
        Self { x: 0.0, y: 0.0, joints: vec![0.0; n_joints], fallen: false }
    }

    /// Layout `[x, y, h, joints..]` with `h = 1` standing and `0` fallen.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.x, self.y, if self.fallen { 0.0 } else { 1.0 }];
        v.extend_from_slice(&self.joints);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self { x: v[0], y: v[1], joints: v[3..].to_vec(), fallen: v[2] < 0.5 }
    }

    pub fn distance(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// The crawler as a continuous MDP.
#[derive(Debug, Clone)]
pub struct Crawler {
    cfg: CrawlerConfig,
    states: BoxSpace<f64>,
    actions: BoxSpace<f64>,
}

impl Crawler {
    pub fn new(cfg: CrawlerConfig) -> Result<Self, String> {
        cfg.validate()?;
        let r = cfg.arena_radius;
        let n = cfg.n_joints;
        // the standing flag's range is padded so two grid cells centre on 0 and 1
        let mut lo = vec![-r, -r, -0.5];
        let mut hi = vec![r, r, 1.5];
        lo.extend(std::iter::repeat_n(-PI, n));
        hi.extend(std::iter::repeat_n(PI, n));
        let states = BoxSpace::new(lo, hi).map_err(|e| e.to_string())?;
        let actions = BoxSpace::new(vec![-PI; n], vec![PI; n]).map_err(|e| e.to_string())?;
        Ok(Self { cfg, states, actions })
    }

    pub fn config(&self) -> &CrawlerConfig {
        &self.cfg
    }

    pub fn rest(&self) -> CrawlerState {
        CrawlerState::rest(self.cfg.n_joints)
    }

    pub fn at_boundary(&self, s: &CrawlerState) -> bool {
        s.distance() >= self.cfg.arena_radius * (1.0 - 1e-9)
    }
}

/// Simulates `a` from `s`. Joints reach each segment's targets at its start;
/// a backward swing of joint `j` by `δ` moves the body `g_j δ` along x,
/// scaled down for segments shorter than the base slice. A segment whose
/// swing `Σ|Δθ|` exceeds the balance limit makes the crawler fall in place.
/// The body stops at the arena wall.
pub fn crawler_dynamics(
    cfg: &CrawlerConfig,
    s: &CrawlerState,
    a: &ActionPath<f64>,
    rng: &mut dyn RngCore,
) -> Result<StatePath<f64>, ContinuousError> {
    if a.dim() != cfg.n_joints {
        return Err(ContinuousError::Dimension { expected: cfg.n_joints, got: a.dim() });
    }
    if s.joints.len() != cfg.n_joints {
        return Err(ContinuousError::Dimension { expected: cfg.n_joints, got: s.joints.len() });
    }
    if a.length() > cfg.max_action_length * (1.0 + 1e-9) {
        return Err(ContinuousError::Infeasible);
    }
    let noise = (cfg.noise_scale > 0.0).then(|| Normal::new(0.0, cfg.noise_scale).expect("finite scale"));
    let clip = 3.0 * cfg.noise_scale;
    let mut st = s.clone();
    let mut stopped = st.fallen || st.distance() >= cfg.arena_radius * (1.0 - 1e-9);
    let mut segments = Vec::with_capacity(a.segments().len());
    for (targets, d) in a.segments() {
        if !stopped {
            let swing: f64 = targets.iter().zip(&st.joints).map(|(v, q)| (v - q).abs()).sum();
            if swing > cfg.balance_limit {
                st.fallen = true;
                stopped = true;
            } else {
                let frac = (d / cfg.t_step_base).min(1.0);
                let mut dx: f64 =
                    targets.iter().zip(&st.joints).zip(&cfg.gains).map(|((v, q), g)| g * (q - v).max(0.0)).sum::<f64>()
                        * frac;
                let mut dy = 0.0;
                if let Some(n) = &noise {
                    dx += n.sample(rng).clamp(-clip, clip) * frac;
                    dy += n.sample(rng).clamp(-clip, clip) * frac;
                }
                st.joints.clone_from(targets);
                st.x += dx;
                st.y += dy;
                let dist = st.distance();
                if dist >= cfg.arena_radius {
                    st.x *= cfg.arena_radius / dist;
                    st.y *= cfg.arena_radius / dist;
                    stopped = true;
                }
            }
        }
        segments.push((st.to_vec(), *d));
    }
    PiecewisePath::new(segments)
}

/// Distance from the origin at the end of `sc` minus that at `s1`.
pub fn crawler_reward(s1: &CrawlerState, sc: &StatePath<f64>) -> f64 {
    let end = sc.last();
    end[0].hypot(end[1]) - s1.distance()
}

impl ContinuousMdp<f64> for Crawler {
    fn state_box(&self) -> &BoxSpace<f64> {
        &self.states
    }

    fn action_box(&self) -> &BoxSpace<f64> {
        &self.actions
    }

    fn max_action_length(&self) -> f64 {
        self.cfg.max_action_length
    }

    fn sample_path(&self, s: &[f64], a: &ActionPath<f64>, rng: &mut dyn RngCore) -> StatePath<f64> {
        crawler_dynamics(&self.cfg, &CrawlerState::from_slice(s), a, rng)
            .expect("feasible action of the right dimension")
    }

    fn reward(&self, s: &[f64], sc: &StatePath<f64>, _a: &ActionPath<f64>) -> f64 {
        crawler_reward(&CrawlerState::from_slice(s), sc)
    }

    fn reward_rate_bound(&self) -> f64 {
        let g = self.cfg.gains.iter().copied().fold(0.0, f64::max);
        let per_slice = g * self.cfg.balance_limit + 3.0 * std::f64::consts::SQRT_2 * self.cfg.noise_scale;
        per_slice / self.cfg.t_step_base * (1.0 + 1e-6) + 1e-12
    }

    fn is_terminal(&self, s: &[f64]) -> bool {
        s[2] < 0.5 || s[0].hypot(s[1]) >= self.cfg.arena_radius * (1.0 - 1e-9)
    }

    fn is_failed(&self, s: &[f64]) -> bool {
        s[2] < 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn run(cfg: &CrawlerConfig, s: &CrawlerState, segs: Vec<Vec<f64>>) -> StatePath<f64> {
        let a = PiecewisePath::uniform(segs, cfg.t_step_base).unwrap();
        crawler_dynamics(cfg, s, &a, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
    }

    #[test]
    fn zero_targets_from_rest_stay_put() {
        let cfg = CrawlerConfig::default();
        let sc = run(&cfg, &CrawlerState::rest(2), vec![vec![0.0, 0.0]; 4]);
        assert_eq!(CrawlerState::from_slice(sc.last()), CrawlerState::rest(2));
    }

    #[test]
    fn alternating_stride_matches_closed_form() {
        let cfg = CrawlerConfig::default();
        for amp in [0.3, 1.0, 2.0, 2.25] {
            let sc = run(&cfg, &CrawlerState::rest(2), vec![vec![-amp, 0.0], vec![0.0, -amp]]);
            let end = CrawlerState::from_slice(sc.last());
            assert!(!end.fallen);
            assert!((end.x - cfg.alternating_stride(amp)).abs() < 1e-15, "{amp}");
            assert!((end.x - 0.04 * amp).abs() < 1e-15);
        }
    }

    #[test]
    fn big_swing_falls_and_freezes() {
        let cfg = CrawlerConfig::default();
        let sc = run(&cfg, &CrawlerState::rest(2), vec![vec![-1.0, 0.0], vec![3.0, 2.0], vec![-1.0, 0.0]]);
        let segs = sc.segments();
        assert!(!CrawlerState::from_slice(&segs[0].0).fallen);
        assert!(CrawlerState::from_slice(&segs[1].0).fallen);
        assert_eq!(segs[1].0, segs[2].0);
        assert_eq!(segs[1].0[0], segs[0].0[0]);
        // fallen is absorbing
        let fallen = CrawlerState::from_slice(sc.last());
        let again = run(&cfg, &fallen, vec![vec![0.5, 0.5]]);
        assert_eq!(again.last(), sc.last());
        assert_eq!(crawler_reward(&fallen, &again), 0.0);
    }

    #[test]
    fn reward_examples() {
        let s1 = CrawlerState { x: 3.0, y: 4.0, joints: vec![0.0, 0.0], fallen: false };
        let sc = PiecewisePath::constant(vec![0.0, 5.0, 1.0, 0.0, 0.0], 0.1).unwrap();
        assert!(crawler_reward(&s1, &sc).abs() < 1e-15);
        let sc = PiecewisePath::constant(vec![0.3, 0.4, 1.0, 0.0, 0.0], 0.1).unwrap();
        assert!((crawler_reward(&CrawlerState::rest(2), &sc) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wall_stops_the_body() {
        let cfg = CrawlerConfig { arena_radius: 0.05, ..Default::default() };
        let sc = run(&cfg, &CrawlerState::rest(2), vec![vec![-2.0, 0.0], vec![0.0, -2.0], vec![-2.0, 0.0]]);
        let end = CrawlerState::from_slice(sc.last());
        assert!((end.distance() - 0.05).abs() < 1e-12);
        let c = Crawler::new(cfg).unwrap();
        assert!(c.is_terminal(sc.last()) && !c.is_failed(sc.last()));
    }

    #[test]
    fn rate_bound_holds_on_random_actions() {
        for noise in [0.0, 0.01] {
            let cfg = CrawlerConfig { noise_scale: noise, arena_radius: 100.0, ..Default::default() };
            let c = Crawler::new(cfg.clone()).unwrap();
            let bound = c.reward_rate_bound();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..10_000 {
                let n = rng.random_range(1..=4);
                let segs: Vec<(Vec<f64>, f64)> = (0..n)
                    .map(|_| {
                        (vec![rng.random_range(-PI..PI), rng.random_range(-PI..PI)], rng.random_range(0.01..0.125))
                    })
                    .collect();
                let a = PiecewisePath::new(segs).unwrap();
                let s = CrawlerState {
                    x: rng.random_range(-3.0..3.0),
                    y: rng.random_range(-3.0..3.0),
                    joints: vec![rng.random_range(-PI..PI), rng.random_range(-PI..PI)],
                    fallen: false,
                };
                let sc = crawler_dynamics(&cfg, &s, &a, &mut rng).unwrap();
                assert!(crawler_reward(&s, &sc).abs() < bound * a.length());
            }
        }
    }

    #[test]
    fn too_long_is_rejected() {
        let cfg = CrawlerConfig::default();
        let a = PiecewisePath::uniform(vec![vec![0.0, 0.0]; 5], 0.125).unwrap();
        assert!(crawler_dynamics(&cfg, &CrawlerState::rest(2), &a, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CrawlerConfig::default().validate().is_ok());
        assert!(CrawlerConfig { max_action_length: 0.3, ..Default::default() }.validate().is_err());
        assert!(CrawlerConfig { n_joints: 3, ..Default::default() }.validate().is_err());
        assert!(CrawlerConfig { noise_scale: -1.0, ..Default::default() }.validate().is_err());
    }
}
