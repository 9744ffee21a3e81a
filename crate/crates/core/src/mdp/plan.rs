use super::{long_run_average, ActionId, DiscreteMdp, MdpError, Policy, StateId, ValueFunction};
use crate::Scalar;

/// Output of the planner, with the internals the learner reuses for warm
/// starts.
#[derive(Debug, Clone)]
pub struct Plan<F> {
    /// Exact long-run average reward of `policy` from every state.
    pub value: ValueFunction<F>,
    pub policy: Policy,
    /// Relative values `v_n - n g`, a warm start for the next call.
    pub bias: Vec<F>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Self-loop weight of the aperiodicity transform `τI + (1-τ)P`.
const SELF_LOOP: f64 = 0.5;

/// Average-reward optimal policy by relative value iteration.
///
/// Runs at most `horizon` sweeps and stops once successive per-state
/// increments agree to `tolerance` (relative to the largest expected
/// reward). Among gain-optimal policies the one with the highest bias is
/// chosen, and the smallest action identifier wins remaining ties. The
/// returned values are the exact long-run averages of that policy.
pub fn value_iteration<F: Scalar>(
    mdp: &DiscreteMdp<F>,
    horizon: usize,
    tolerance: F,
) -> Result<(ValueFunction<F>, Policy), MdpError> {
    let plan = value_iteration_warm(mdp, horizon, tolerance, None)?;
    Ok((plan.value, plan.policy))
}

pub fn value_iteration_warm<F: Scalar>(
    mdp: &DiscreteMdp<F>,
    horizon: usize,
    tolerance: F,
    warm: Option<&[F]>,
) -> Result<Plan<F>, MdpError> {
    let n = mdp.n_states();
    if n == 0 {
        return Err(MdpError::Empty);
    }
    if horizon == 0 {
        return Err(MdpError::ZeroHorizon);
    }
    let solved = relative_value_iteration(n, |s| mdp.is_terminal(s), |s| mdp.rows_of(s), horizon, tolerance, warm);
    let policy = Policy::new(solved.choice);
    let value = long_run_average(mdp, &policy)?;
    Ok(Plan { value, policy, bias: solved.bias, sweeps: solved.sweeps, converged: solved.converged })
}

/// A row of a planning model: one action at one state.
pub(crate) trait PlanRow<F> {
    fn action(&self) -> ActionId;
    fn reward(&self) -> F;
    /// `Σ_{s'} P(s' | s, a) v(s')`.
    fn expect(&self, v: &[F]) -> F;
}

impl<F: Scalar> PlanRow<F> for super::ActionRow<F> {
    fn action(&self) -> ActionId {
        self.action
    }
    fn reward(&self) -> F {
        self.expected_reward
    }
    fn expect(&self, v: &[F]) -> F {
        self.outcomes.iter().map(|o| o.prob * v[o.next]).sum()
    }
}

pub(crate) struct Solved<F> {
    pub choice: Vec<Option<ActionId>>,
    pub bias: Vec<F>,
    pub sweeps: usize,
    pub converged: bool,
}

struct Sweeps<F> {
    gain: Vec<F>,
    relative: Vec<F>,
    sweeps: usize,
    converged: bool,
}

/// Relative value iteration on the aperiodic transform for the rows listed
/// in `allowed` (all rows when `None`), with per-row rewards from `reward`.
fn sweep<'a, F, R, T, G, W>(
    n: usize,
    terminal: &T,
    rows: &G,
    allowed: Option<&[Vec<usize>]>,
    reward: W,
    horizon: usize,
    stop: F,
    warm: Option<&[F]>,
) -> Sweeps<F>
where
    F: Scalar,
    R: PlanRow<F> + 'a,
    T: Fn(StateId) -> bool,
    G: Fn(StateId) -> &'a [R],
    W: Fn(StateId, &R) -> F,
{
    let tau = F::of(SELF_LOOP);
    let mix = F::one() - tau;
    let mut v: Vec<F> = match warm {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![F::zero(); n],
    };
    let mut next = vec![F::zero(); n];
    let mut diff = vec![F::zero(); n];
    let mut prev_diff = vec![F::zero(); n];
    let mut sweeps = 0;
    let mut converged = false;
    let mut shifted = F::zero();

    while sweeps < horizon.max(1) {
        for s in 0..n {
            next[s] = if terminal(s) {
                v[s]
            } else {
                let rs = rows(s);
                let backup = |row: &R| reward(s, row) + tau * v[s] + mix * row.expect(&v);
                match allowed {
                    Some(idx) => idx[s].iter().map(|&k| backup(&rs[k])).fold(F::neg_infinity(), F::max),
                    None => rs.iter().map(backup).fold(F::neg_infinity(), F::max),
                }
            };
        }
        for s in 0..n {
            diff[s] = next[s] - v[s];
        }
        sweeps += 1;
        // shift by the first increment so magnitudes stay bounded
        let shift = diff[0];
        shifted += shift;
        for s in 0..n {
            v[s] = next[s] - shift;
        }
        if sweeps >= 2 && diff.iter().zip(&prev_diff).all(|(d, p)| (*d - *p).abs() <= stop) {
            converged = true;
            break;
        }
        std::mem::swap(&mut diff, &mut prev_diff);
    }
    // the latest increments are in `diff` if we broke out, else in `prev_diff`
    let gain = if converged { diff } else { prev_diff };
    let steps = F::of_usize(sweeps);
    for s in 0..n {
        v[s] += shifted - steps * gain[s];
    }
    Sweeps { gain, relative: v, sweeps, converged }
}

/// Indices of the rows in `candidates` that are gain-greedy and then
/// within `slack` of the best backed-up relative value.
fn greedy<F: Scalar, R: PlanRow<F>>(
    s: StateId,
    rows: &[R],
    candidates: &[usize],
    solved: &Sweeps<F>,
    reward: impl Fn(&R) -> F,
    gain_slack: F,
    slack: F,
) -> Vec<usize> {
    let tau = F::of(SELF_LOOP);
    let mix = F::one() - tau;
    let drift: Vec<F> = candidates.iter().map(|&k| tau * solved.gain[s] + mix * rows[k].expect(&solved.gain)).collect();
    let best_drift = drift.iter().copied().fold(F::neg_infinity(), F::max);
    let kept: Vec<(usize, F)> = candidates
        .iter()
        .zip(&drift)
        .filter(|(_, d)| **d >= best_drift - gain_slack)
        .map(|(&k, _)| {
            let row = &rows[k];
            (k, reward(row) + tau * solved.relative[s] + mix * row.expect(&solved.relative))
        })
        .collect();
    let best = kept.iter().map(|x| x.1).fold(F::neg_infinity(), F::max);
    kept.into_iter().filter(|(_, q)| *q >= best - slack).map(|(k, _)| k).collect()
}

/// Average-reward planning with bias-optimal tie-breaking. Rows of each
/// state must be sorted by action.
///
/// A first pass finds gain `g` and relative values `h`. The actions that
/// attain both optimality equations are kept; when a state keeps several,
/// a second pass over the kept actions with state reward `-h` prefers
/// those whose trajectories settle where `h` is low, which are the ones
/// with the highest bias. Remaining ties go to the smallest action.
pub(crate) fn relative_value_iteration<'a, F, R, T, G>(
    n: usize,
    terminal: T,
    rows: G,
    horizon: usize,
    tolerance: F,
    warm: Option<&[F]>,
) -> Solved<F>
where
    F: Scalar,
    R: PlanRow<F> + 'a,
    T: Fn(StateId) -> bool,
    G: Fn(StateId) -> &'a [R],
{
    let scale = (0..n).flat_map(|s| rows(s).iter().map(|r| r.reward().abs())).fold(F::zero(), F::max);
    let loose = F::of(1e-7).max(F::epsilon().sqrt());
    let tight = F::of(1e-10).max(F::epsilon() * F::of(256.0));

    let first = sweep(n, &terminal, &rows, None, |_, r: &R| r.reward(), horizon, tolerance.abs() * scale, warm);
    let kept: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            if terminal(s) {
                return Vec::new();
            }
            let all: Vec<usize> = (0..rows(s).len()).collect();
            greedy(s, rows(s), &all, &first, |r| r.reward(), scale * loose, scale * loose)
        })
        .collect();

    let mut sweeps = first.sweeps;
    let mut converged = first.converged;
    let lo = first.relative.iter().copied().fold(F::infinity(), F::min);
    let h: Vec<F> = first.relative.iter().map(|&x| x - lo).collect();
    let h_scale = h.iter().copied().fold(F::zero(), F::max);
    let tied = kept.iter().any(|k| k.len() > 1);
    let choice = if !tied || !(h_scale > F::zero()) {
        kept.iter().enumerate().map(|(s, k)| k.first().map(|&i| rows(s)[i].action())).collect()
    } else {
        let second =
            sweep(n, &terminal, &rows, Some(&kept), |s, _: &R| -h[s], horizon, tolerance.abs() * h_scale, None);
        sweeps += second.sweeps;
        converged &= second.converged;
        (0..n)
            .map(|s| {
                let best = greedy(s, rows(s), &kept[s], &second, |_| -h[s], h_scale * loose, h_scale * tight);
                best.first().map(|&i| rows(s)[i].action())
            })
            .collect()
    };
    Solved { choice, bias: first.relative, sweeps, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_self_loop() {
        let m = DiscreteMdp::<f64>::builder(1).transition(0, 0, 0, 1.0, 1.0).build().unwrap();
        let (v, p) = value_iteration(&m, 10, 1e-12).unwrap();
        assert_eq!(p.choice, vec![Some(0)]);
        assert!((v.get(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forced_chain_into_terminal() {
        let m = DiscreteMdp::<f64>::builder(2).transition(0, 0, 1, 1.0, 0.0).terminal(1).build().unwrap();
        let (v, p) = value_iteration(&m, 1, 1e-12).unwrap();
        assert_eq!(p.choice, vec![Some(0), None]);
        assert_eq!(v.value, vec![0.0, 0.0]);
    }

    #[test]
    fn ties_prefer_smallest_action() {
        let m = DiscreteMdp::<f64>::builder(1)
            .transition(0, 4, 0, 1.0, 1.0)
            .transition(0, 2, 0, 1.0, 1.0)
            .transition(0, 9, 0, 1.0, 1.0)
            .build()
            .unwrap();
        let (_, p) = value_iteration(&m, 100, 1e-12).unwrap();
        assert_eq!(p.choice, vec![Some(2)]);
    }

    #[test]
    fn prefers_long_run_over_immediate_reward() {
        // a grab of 5 into a zero-reward trap versus a steady 1 per step
        let m = DiscreteMdp::<f64>::builder(2)
            .transition(0, 0, 1, 1.0, 5.0)
            .transition(0, 1, 0, 1.0, 1.0)
            .transition(1, 0, 1, 1.0, 0.0)
            .build()
            .unwrap();
        let (v, p) = value_iteration(&m, 10_000, 1e-12).unwrap();
        assert_eq!(p.action(0), Some(1));
        assert!((v.get(0) - 1.0).abs() < 1e-12);
        assert_eq!(v.get(1), 0.0);
    }

    #[test]
    fn multichain_picks_the_better_class() {
        // from 0 choose between two absorbing cycles with different gains
        let m = DiscreteMdp::<f64>::builder(5)
            .transition(0, 0, 1, 1.0, 0.0)
            .transition(0, 1, 3, 1.0, 0.0)
            .transition(1, 0, 2, 1.0, 1.0)
            .transition(2, 0, 1, 1.0, 0.0)
            .transition(3, 0, 4, 1.0, 0.6)
            .transition(4, 0, 3, 1.0, 0.6)
            .build()
            .unwrap();
        let (v, p) = value_iteration(&m, 10_000, 1e-12).unwrap();
        assert_eq!(p.action(0), Some(1));
        assert!((v.get(0) - 0.6).abs() < 1e-12);
        assert!((v.get(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn conserving_ties_go_to_the_higher_bias() {
        // both cells pay 1 per step forever; crossing from 1 to 2 pays a
        // bonus and crossing back costs it, so 1 should cross once
        let b = 0.25f64;
        let m = DiscreteMdp::builder(3)
            .transition(0, 0, 1, 1.0, 1.0)
            .transition(1, 0, 1, 1.0, 1.0)
            .transition(1, 1, 2, 1.0, 1.0 + b)
            .transition(2, 0, 2, 1.0, 1.0)
            .transition(2, 1, 1, 1.0, 1.0 - b)
            .build()
            .unwrap();
        let (v, pi) = value_iteration(&m, 10_000, 1e-12).unwrap();
        assert_eq!(pi.choice, vec![Some(0), Some(1), Some(0)]);
        assert!(v.value.iter().all(|g| (g - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rejects_zero_horizon() {
        let m = DiscreteMdp::<f64>::builder(1).transition(0, 0, 0, 1.0, 1.0).build().unwrap();
        assert_eq!(value_iteration(&m, 0, 1e-9).unwrap_err(), MdpError::ZeroHorizon);
    }

    #[test]
    fn warm_start_reaches_the_same_policy() {
        let m = DiscreteMdp::<f64>::builder(3)
            .transition(0, 0, 1, 0.5, 1.0)
            .transition(0, 0, 2, 0.5, 0.0)
            .transition(0, 1, 0, 1.0, 0.4)
            .transition(1, 0, 0, 1.0, 0.2)
            .transition(2, 0, 0, 1.0, 0.9)
            .build()
            .unwrap();
        let cold = value_iteration_warm(&m, 10_000, 1e-12, None).unwrap();
        let warm = value_iteration_warm(&m, 10_000, 1e-12, Some(&cold.bias)).unwrap();
        assert_eq!(cold.policy, warm.policy);
        assert!(warm.sweeps <= cold.sweeps);
        assert!(cold.converged);
    }

    #[test]
    fn works_in_f32() {
        let m = DiscreteMdp::<f32>::builder(2)
            .transition(0, 0, 1, 1.0, 5.0)
            .transition(0, 1, 0, 1.0, 1.0)
            .transition(1, 0, 1, 1.0, 0.0)
            .build()
            .unwrap();
        let (v, p) = value_iteration(&m, 1000, 1e-6f32).unwrap();
        assert_eq!(p.action(0), Some(1));
        assert!((v.get(0) - 1.0).abs() < 1e-5);
    }
}
