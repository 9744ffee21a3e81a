use super::{DiscreteMdp, MdpError, Outcome, Policy, StateId, ValueFunction};
use crate::linalg::solve;
use crate::Scalar;

/// Default number of steps scanned by [`epsilon_return_mixing_time`].
pub const DEFAULT_MIXING_CUTOFF: usize = 10_000;

/// Per-state successor lists of the Markov chain a policy induces; terminal
/// states become reward-free self-loops.
fn induced_chain<F: Scalar>(mdp: &DiscreteMdp<F>, policy: &Policy) -> Result<(Vec<Vec<Outcome<F>>>, Vec<F>), MdpError> {
    policy.validate(mdp)?;
    let n = mdp.n_states();
    let mut succ = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    for s in 0..n {
        if mdp.is_terminal(s) {
            succ.push(vec![Outcome { next: s, prob: F::one(), reward: F::zero() }]);
            reward.push(F::zero());
        } else {
            let a = policy.action(s).expect("validated");
            succ.push(mdp.outcomes(s, a).expect("validated").to_vec());
            reward.push(mdp.expected_reward(s, a).expect("validated"));
        }
    }
    Ok((succ, reward))
}

/// Exact expected average reward over `horizon` steps from `start`,
/// propagating the state distribution forward.
pub fn evaluate_policy<F: Scalar>(
    mdp: &DiscreteMdp<F>,
    policy: &Policy,
    start: StateId,
    horizon: usize,
) -> Result<F, MdpError> {
    if start >= mdp.n_states() {
        return Err(MdpError::UnknownState(start));
    }
    if horizon == 0 {
        return Err(MdpError::ZeroHorizon);
    }
    let (succ, reward) = induced_chain(mdp, policy)?;
    let n = mdp.n_states();
    let mut dist = vec![F::zero(); n];
    let mut next = vec![F::zero(); n];
    dist[start] = F::one();
    let mut total = F::zero();
    for _ in 0..horizon {
        next.iter_mut().for_each(|x| *x = F::zero());
        for s in 0..n {
            let m = dist[s];
            if m == F::zero() {
                continue;
            }
            total += m * reward[s];
            for o in &succ[s] {
                next[o.next] += m * o.prob;
            }
        }
        std::mem::swap(&mut dist, &mut next);
    }
    Ok(total / F::of_usize(horizon))
}

/// Exact long-run average reward `U(π, s)` of a policy from every state.
///
/// Recurrent classes are the closed strongly connected components of the
/// induced chain; each gets the reward averaged under its stationary
/// distribution, and transient states inherit the absorption-weighted mix.
pub fn long_run_average<F: Scalar>(mdp: &DiscreteMdp<F>, policy: &Policy) -> Result<ValueFunction<F>, MdpError> {
    let (succ, reward) = induced_chain(mdp, policy)?;
    let n = succ.len();
    let comp = strongly_connected(&succ);
    let n_comp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut closed = vec![true; n_comp];
    for s in 0..n {
        if succ[s].iter().any(|o| comp[o.next] != comp[s]) {
            closed[comp[s]] = false;
        }
    }

    let mut gain = vec![F::zero(); n];
    let mut recurrent = vec![false; n];
    for c in (0..n_comp).filter(|&c| closed[c]) {
        let members: Vec<StateId> = (0..n).filter(|&s| comp[s] == c).collect();
        let m = members.len();
        let mut local = vec![usize::MAX; n];
        for (k, &s) in members.iter().enumerate() {
            local[s] = k;
            recurrent[s] = true;
        }
        // μ (P - I) = 0 with the first equation replaced by Σ μ = 1
        let mut a = vec![vec![F::zero(); m]; m];
        for (i, &s) in members.iter().enumerate() {
            a[i][i] -= F::one();
            for o in &succ[s] {
                a[local[o.next]][i] += o.prob;
            }
        }
        a[0] = vec![F::one(); m];
        let mut b = vec![F::zero(); m];
        b[0] = F::one();
        let mu = solve(a, b).expect("stationary system of an irreducible class is regular");
        let g: F = members.iter().zip(&mu).map(|(&s, &p)| p * reward[s]).sum();
        for &s in &members {
            gain[s] = g;
        }
    }

    let transient: Vec<StateId> = (0..n).filter(|&s| !recurrent[s]).collect();
    if !transient.is_empty() {
        let t = transient.len();
        let mut local = vec![usize::MAX; n];
        for (k, &s) in transient.iter().enumerate() {
            local[s] = k;
        }
        let mut a = vec![vec![F::zero(); t]; t];
        let mut b = vec![F::zero(); t];
        for (i, &s) in transient.iter().enumerate() {
            a[i][i] += F::one();
            for o in &succ[s] {
                if recurrent[o.next] {
                    b[i] += o.prob * gain[o.next];
                } else {
                    a[i][local[o.next]] -= o.prob;
                }
            }
        }
        let x = solve(a, b).expect("transient states leave with positive probability");
        for (&s, g) in transient.iter().zip(x) {
            gain[s] = g;
        }
    }
    Ok(ValueFunction { value: gain })
}

/// Least `T` such that every state's `t`-step average is within `epsilon`
/// of its long-run average for all `t ≥ T`, scanning `t` up to the default
/// cutoff.
pub fn epsilon_return_mixing_time<F: Scalar>(
    mdp: &DiscreteMdp<F>,
    policy: &Policy,
    epsilon: F,
) -> Result<usize, MdpError> {
    epsilon_return_mixing_time_with_cutoff(mdp, policy, epsilon, DEFAULT_MIXING_CUTOFF)
}

/// As [`epsilon_return_mixing_time`]. The condition must hold over the last
/// stretch of the scan, so failures at the cutoff itself are reported.
pub fn epsilon_return_mixing_time_with_cutoff<F: Scalar>(
    mdp: &DiscreteMdp<F>,
    policy: &Policy,
    epsilon: F,
    cutoff: usize,
) -> Result<usize, MdpError> {
    if !(epsilon > F::zero()) {
        return Err(MdpError::BadEpsilon);
    }
    let (succ, reward) = induced_chain(mdp, policy)?;
    let gain = long_run_average(mdp, policy)?;
    let n = succ.len();
    let slack = F::epsilon() * F::of(64.0) * reward.iter().fold(F::one(), |m, r| m.max(r.abs()));
    // total[s] holds the expected t-step reward sum from s
    let mut total = vec![F::zero(); n];
    let mut next = vec![F::zero(); n];
    let mut last_fail = 0;
    for t in 1..=cutoff {
        for s in 0..n {
            next[s] = reward[s] + succ[s].iter().map(|o| o.prob * total[o.next]).sum::<F>();
        }
        std::mem::swap(&mut total, &mut next);
        let tf = F::of_usize(t);
        if (0..n).any(|s| total[s] / tf < gain.value[s] - epsilon - slack) {
            last_fail = t;
        }
    }
    if last_fail >= cutoff {
        return Err(MdpError::MixingCutoff { cutoff });
    }
    Ok(last_fail + 1)
}

/// Iterative Tarjan; returns the component index of every node.
fn strongly_connected<F>(succ: &[Vec<Outcome<F>>]) -> Vec<usize> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut n_comp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge < succ[v].len() {
                let w = succ[v][*edge].next;
                *edge += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = n_comp;
                        if w == v {
                            break;
                        }
                    }
                    n_comp += 1;
                }
            }
        }
    }
    comp
}
