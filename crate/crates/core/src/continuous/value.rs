use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    discretize_transition, project_policy, ActionPath, ContinuousError, ContinuousMdp, DiscretizationLevel,
    TransitionEstimate,
};
use crate::mdp::Policy;
use crate::{derive_seed, Scalar};

/// The level MDP induced by a continuous MDP, with transition kernels
/// estimated on first use. Each `(state, action)` kernel draws from its own
/// seed, so results do not depend on query order.
pub struct LevelModel<'a, F: Scalar, M: ?Sized> {
    cm: &'a M,
    level: &'a DiscretizationLevel<F>,
    n_samples: usize,
    seed: u64,
    cache: HashMap<(usize, u64), Arc<TransitionEstimate<F>>>,
}

impl<'a, F: Scalar, M: ContinuousMdp<F> + ?Sized> LevelModel<'a, F, M> {
    pub fn new(cm: &'a M, level: &'a DiscretizationLevel<F>, n_samples: usize, seed: u64) -> Self {
        Self { cm, level, n_samples, seed, cache: HashMap::new() }
    }

    pub fn level(&self) -> &DiscretizationLevel<F> {
        self.level
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.cm.is_terminal(&self.level.state_grid.point(s))
    }

    pub fn transition(&mut self, s: usize, action: u64) -> Result<Arc<TransitionEstimate<F>>, ContinuousError> {
        if let Some(t) = self.cache.get(&(s, action)) {
            return Ok(t.clone());
        }
        let path = self.level.action_path(action)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[s as u64, action]));
        let est = Arc::new(discretize_transition(self.cm, self.level, s, &path, self.n_samples, &mut rng)?);
        self.cache.insert((s, action), est.clone());
        Ok(est)
    }

    pub fn action_length(&self, action: u64) -> Result<F, ContinuousError> {
        Ok(self.level.time_step * F::of_usize(self.level.decode(action)?.len()))
    }
}

/// Knobs for [`evaluate_discretized_policy`].
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Exact enumeration stops beyond this many complete paths.
    pub path_cap: usize,
    pub mc_samples: usize,
    pub seed: u64,
    /// Continuous samples per kernel estimate.
    pub kernel_samples: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { path_cap: 100_000, mc_samples: 100_000, seed: 0, kernel_samples: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueEstimate<F> {
    pub value: F,
    /// Present when the value came from Monte Carlo.
    pub std_error: Option<F>,
    /// Paths enumerated, or episodes sampled.
    pub paths: usize,
}

fn action_at(pi: &Policy, s: usize) -> Result<u64, ContinuousError> {
    pi.action(s).map(|a| a as u64).ok_or(ContinuousError::InvalidPolicy(s))
}

/// `U(s, π, t)`: expected reward collected by the actions that fit in `t`,
/// divided by `t`. Exact over all compatible paths when there are at most
/// `path_cap` of them, otherwise a Monte Carlo estimate with its standard
/// error.
pub fn evaluate_discretized_policy<F: Scalar, M: ContinuousMdp<F> + ?Sized>(
    model: &mut LevelModel<'_, F, M>,
    pi: &Policy,
    s: usize,
    t: F,
    opts: &EvalOptions,
) -> Result<ValueEstimate<F>, ContinuousError> {
    let slack = t * F::of(1e-9);
    // (state, probability, reward so far, elapsed)
    let mut stack = vec![(s, F::one(), F::zero(), F::zero())];
    let mut total = F::zero();
    let mut leaves = 0usize;
    let mut exact = true;
    while let Some((state, prob, reward, elapsed)) = stack.pop() {
        let next = if model.is_terminal(state) {
            None
        } else {
            let a = action_at(pi, state)?;
            let len = model.action_length(a)?;
            (elapsed + len <= t + slack).then_some((a, len))
        };
        match next {
            None => {
                total += prob * reward;
                leaves += 1;
                if leaves > opts.path_cap {
                    exact = false;
                    break;
                }
            }
            Some((a, len)) => {
                let est = model.transition(state, a)?;
                for o in est.outcomes.iter().rev() {
                    stack.push((o.end(), prob * o.mass, reward + o.reward, elapsed + len));
                }
            }
        }
    }
    if exact {
        return Ok(ValueEstimate { value: total / t, std_error: None, paths: leaves });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n = opts.mc_samples.max(2);
    let (mut sum, mut sum_sq) = (F::zero(), F::zero());
    for _ in 0..n {
        let (mut state, mut reward, mut elapsed) = (s, F::zero(), F::zero());
        while !model.is_terminal(state) {
            let a = action_at(pi, state)?;
            let len = model.action_length(a)?;
            if elapsed + len > t + slack {
                break;
            }
            let est = model.transition(state, a)?;
            let u = F::of(rng.random::<f64>());
            let mut acc = F::zero();
            let mut pick = est.outcomes.last().expect("kernels are nonempty");
            for o in &est.outcomes {
                acc += o.mass;
                if u < acc {
                    pick = o;
                    break;
                }
            }
            reward += pick.reward;
            elapsed += len;
            state = pick.end();
        }
        let v = reward / t;
        sum += v;
        sum_sq += v * v;
    }
    let nf = F::of_usize(n);
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - F::one())).max(F::zero());
    Ok(ValueEstimate { value: mean, std_error: Some((var / nf).sqrt()), paths: n })
}

/// Level values of a projected continuous policy along a refining ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<F> {
    pub values: Vec<F>,
    /// The finest level's value.
    pub limit: F,
    /// `|U_last - U_previous|`, absent for a single level.
    pub last_difference: Option<F>,
}

impl<F: Scalar> ConvergenceReport<F> {
    pub fn differences(&self) -> Vec<F> {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }
}

/// Projects `pi` onto every level, evaluates it from the grid state nearest
/// `s` over horizon `t`, and reports the sequence.
pub fn estimate_continuous_value<F: Scalar, M: ContinuousMdp<F> + ?Sized>(
    cm: &M,
    pi: impl Fn(&[F]) -> ActionPath<F>,
    s: &[F],
    t: F,
    levels: &[DiscretizationLevel<F>],
    opts: &EvalOptions,
) -> Result<ConvergenceReport<F>, ContinuousError> {
    if levels.windows(2).any(|w| !(w[1].resolution < w[0].resolution)) {
        return Err(ContinuousError::NotRefining);
    }
    let mut values = Vec::with_capacity(levels.len());
    for level in levels {
        let policy = project_policy(&pi, level)?;
        let mut model = LevelModel::new(cm, level, opts.kernel_samples, derive_seed(opts.seed, &[level.index as u64]));
        let start = level.state_grid.nearest(s);
        values.push(evaluate_discretized_policy(&mut model, &policy, start, t, opts)?.value);
    }
    let limit = *values.last().unwrap_or(&F::zero());
    let last_difference = (values.len() >= 2).then(|| (values[values.len() - 1] - values[values.len() - 2]).abs());
    Ok(ConvergenceReport { values, limit, last_difference })
}
