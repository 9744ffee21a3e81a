use serde::{Deserialize, Serialize};

use super::{ActionPath, ContinuousError, Grid};
use crate::mdp::{ActionId, Policy};
use crate::Scalar;

/// Which level state paths a sampled continuous path is credited to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership<F> {
    /// Every level path within this integrated L1 distance.
    Ball(F),
    /// Only the closest level path.
    Nearest,
}

/// One rung of a discretization ladder: state and basic-action grids, a
/// time slice and the resolution the grids cover their spaces to.
///
/// Level actions are sequences of `1..=max_segments` grid basic actions,
/// each held for `time_step`. They are numbered by length first and then
/// lexicographically by flat basic-action index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct DiscretizationLevel<F> {
    pub index: usize,
    pub state_grid: Grid<F>,
    pub action_grid: Grid<F>,
    pub time_step: F,
    pub max_segments: usize,
    pub resolution: F,
    pub membership: Membership<F>,
}

/// `Σ_{l=1}^{max_len} basic^l`, or `None` on overflow.
pub fn potential_action_count(basic: u64, max_len: u32) -> Option<u64> {
    (1..=max_len).try_fold(0u64, |acc, l| acc.checked_add(basic.checked_pow(l)?))
}

impl<F: Scalar> DiscretizationLevel<F> {
    /// Checks that `resolution` covers both grids and that at least one
    /// slice fits into `max_action_length`.
    pub fn new(
        index: usize,
        state_grid: Grid<F>,
        action_grid: Grid<F>,
        time_step: F,
        max_action_length: F,
        resolution: F,
    ) -> Result<Self, ContinuousError> {
        if !(time_step > F::zero()) {
            return Err(ContinuousError::BadDuration(time_step.as_f64()));
        }
        let slices = (max_action_length / time_step + F::of(1e-9)).floor();
        let max_segments = slices.to_usize().unwrap_or(0);
        if max_segments == 0 {
            return Err(ContinuousError::TooShort { length: max_action_length.as_f64(), step: time_step.as_f64() });
        }
        let needed = state_grid.covering_radius().max(action_grid.covering_radius());
        if resolution < needed {
            return Err(ContinuousError::NotCovering { resolution: resolution.as_f64(), needed: needed.as_f64() });
        }
        Ok(Self {
            index,
            state_grid,
            action_grid,
            time_step,
            max_segments,
            resolution,
            membership: Membership::Ball(resolution),
        })
    }

    pub fn with_membership(mut self, membership: Membership<F>) -> Self {
        self.membership = membership;
        self
    }

    pub fn n_states(&self) -> usize {
        self.state_grid.size()
    }

    pub fn n_basic_actions(&self) -> usize {
        self.action_grid.size()
    }

    /// `|A_i'|`, or `None` if it does not fit in 64 bits.
    pub fn n_potential_actions(&self) -> Option<u64> {
        potential_action_count(self.n_basic_actions() as u64, self.max_segments as u32)
    }

    pub fn max_action_length(&self) -> F {
        self.time_step * F::of_usize(self.max_segments)
    }

    /// Identifier of a sequence of flat basic-action indices.
    pub fn encode(&self, digits: &[usize]) -> u64 {
        let b = self.n_basic_actions() as u64;
        let shorter = potential_action_count(b, digits.len() as u32 - 1).expect("identifier fits");
        shorter + digits.iter().fold(0u64, |acc, &d| acc * b + d as u64)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, mut id: u64) -> Result<Vec<usize>, ContinuousError> {
        let b = self.n_basic_actions() as u64;
        for len in 1..=self.max_segments as u32 {
            let block = b.checked_pow(len).unwrap_or(u64::MAX);
            if id < block {
                let mut digits = vec![0; len as usize];
                for slot in digits.iter_mut().rev() {
                    *slot = (id % b) as usize;
                    id /= b;
                }
                return Ok(digits);
            }
            id -= block;
        }
        Err(ContinuousError::UnknownAction(id))
    }

    pub fn path_of(&self, digits: &[usize]) -> ActionPath<F> {
        ActionPath::uniform(digits.iter().map(|&d| self.action_grid.point(d)).collect(), self.time_step)
            .expect("level paths are nonempty with positive slices")
    }

    pub fn action_path(&self, id: u64) -> Result<ActionPath<F>, ContinuousError> {
        Ok(self.path_of(&self.decode(id)?))
    }
}

/// Level actions, either collected or produced on demand.
pub enum Enumeration<F> {
    Materialized(Vec<ActionPath<F>>),
    Lazy(LevelActions<F>),
}

impl<F: Scalar> Enumeration<F> {
    pub fn into_iter_paths(self) -> Box<dyn Iterator<Item = ActionPath<F>>> {
        match self {
            Enumeration::Materialized(v) => Box::new(v.into_iter()),
            Enumeration::Lazy(l) => Box::new(l),
        }
    }
}

/// Streams the paths of a level in identifier order.
pub struct LevelActions<F> {
    level: DiscretizationLevel<F>,
    next: u64,
    end: u64,
}

impl<F: Scalar> Iterator for LevelActions<F> {
    type Item = ActionPath<F>;

    fn next(&mut self) -> Option<ActionPath<F>> {
        if self.next >= self.end {
            return None;
        }
        let path = self.level.action_path(self.next).ok()?;
        self.next += 1;
        Some(path)
    }
}

/// All level actions in identifier order; materialized only when there are
/// at most `cap` of them.
pub fn enumerate_level_actions<F: Scalar>(level: &DiscretizationLevel<F>, cap: u64) -> Enumeration<F> {
    let end = level.n_potential_actions().unwrap_or(u64::MAX);
    let lazy = LevelActions { level: level.clone(), next: 0, end };
    if end <= cap {
        Enumeration::Materialized(lazy.collect())
    } else {
        Enumeration::Lazy(lazy)
    }
}

/// Basic-action indices of the closest level path to `a`.
///
/// The level path covers the longest whole number of slices within `|a|`.
/// The integrated L1 cost separates over slices and axes, so each axis of
/// each slice takes its cheapest grid value, the lowest index on ties.
pub fn best_approximation_digits<F: Scalar>(
    a: &ActionPath<F>,
    level: &DiscretizationLevel<F>,
) -> Result<Vec<usize>, ContinuousError> {
    let grid = &level.action_grid;
    if a.dim() != grid.dim() {
        return Err(ContinuousError::Dimension { expected: grid.dim(), got: a.dim() });
    }
    let t = level.time_step;
    let slices = (a.length() / t + F::of(1e-9)).floor().to_usize().unwrap_or(0).min(level.max_segments);
    if slices == 0 {
        return Err(ContinuousError::TooShort { length: a.length().as_f64(), step: t.as_f64() });
    }
    let mut digits = Vec::with_capacity(slices);
    for k in 0..slices {
        let from = t * F::of_usize(k);
        let to = t * F::of_usize(k + 1);
        let pieces: Vec<(&[F], F)> = a.window(from, to).collect();
        let coords: Vec<usize> = grid
            .axes
            .iter()
            .enumerate()
            .map(|(d, axis)| {
                let cost = |v: F| pieces.iter().map(|(x, w)| *w * (x[d] - v).abs()).sum::<F>();
                let mut best = 0;
                let mut best_cost = cost(axis.value(0));
                for j in 1..axis.count {
                    let c = cost(axis.value(j));
                    if c < best_cost {
                        best = j;
                        best_cost = c;
                    }
                }
                best
            })
            .collect();
        digits.push(grid.flat(&coords));
    }
    Ok(digits)
}

/// The level path closest to `a` in integrated L1 distance.
pub fn best_approximation<F: Scalar>(
    a: &ActionPath<F>,
    level: &DiscretizationLevel<F>,
) -> Result<ActionPath<F>, ContinuousError> {
    Ok(level.path_of(&best_approximation_digits(a, level)?))
}

/// Per-state best approximation of a continuous policy, as a policy over
/// level action identifiers.
pub fn project_policy<F: Scalar>(
    pi: impl Fn(&[F]) -> ActionPath<F>,
    level: &DiscretizationLevel<F>,
) -> Result<Policy, ContinuousError> {
    let choice = (0..level.n_states())
        .map(|s| {
            let digits = best_approximation_digits(&pi(&level.state_grid.point(s)), level)?;
            Ok(Some(level.encode(&digits) as ActionId))
        })
        .collect::<Result<_, ContinuousError>>()?;
    Ok(Policy::new(choice))
}
