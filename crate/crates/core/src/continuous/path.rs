use serde::{Deserialize, Serialize};

use super::ContinuousError;
use crate::Scalar;

/// A piecewise-constant function from `(0, |p|]` into `ℝ^m`, stored as
/// `(vector, duration)` segments. Both action paths and state paths use it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct PiecewisePath<F> {
    segments: Vec<(Vec<F>, F)>,
}

pub type ActionPath<F> = PiecewisePath<F>;
pub type StatePath<F> = PiecewisePath<F>;

impl<F: Scalar> PiecewisePath<F> {
    pub fn new(segments: Vec<(Vec<F>, F)>) -> Result<Self, ContinuousError> {
        let Some(dim) = segments.first().map(|s| s.0.len()) else {
            return Err(ContinuousError::EmptyPath);
        };
        for (v, d) in &segments {
            if v.len() != dim {
                return Err(ContinuousError::Dimension { expected: dim, got: v.len() });
            }
            if !(*d > F::zero()) || !d.is_finite() {
                return Err(ContinuousError::BadDuration(d.as_f64()));
            }
        }
        Ok(Self { segments })
    }

    /// `vectors[k]` held for `step` each.
    pub fn uniform(vectors: Vec<Vec<F>>, step: F) -> Result<Self, ContinuousError> {
        Self::new(vectors.into_iter().map(|v| (v, step)).collect())
    }

    pub fn constant(vector: Vec<F>, duration: F) -> Result<Self, ContinuousError> {
        Self::new(vec![(vector, duration)])
    }

    pub fn segments(&self) -> &[(Vec<F>, F)] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].0.len()
    }

    /// Total length `|p|`.
    pub fn length(&self) -> F {
        self.segments.iter().map(|s| s.1).sum()
    }

    /// Value at the end of the path.
    pub fn last(&self) -> &[F] {
        &self.segments.last().expect("paths are nonempty").0
    }

    /// Value at time `t ∈ (0, |p|]`; segments are closed on the right.
    pub fn at(&self, t: F) -> &[F] {
        let mut end = F::zero();
        for (v, d) in &self.segments {
            end += *d;
            if t <= end {
                return v;
            }
        }
        self.last()
    }

    /// Pieces of the path inside `(from, to]`, as `(vector, overlap)`.
    pub fn window(&self, from: F, to: F) -> impl Iterator<Item = (&[F], F)> + '_ {
        let mut start = F::zero();
        self.segments.iter().filter_map(move |(v, d)| {
            let (a, b) = (start, start + *d);
            start = b;
            let overlap = b.min(to) - a.max(from);
            (overlap > F::zero()).then_some((v.as_slice(), overlap))
        })
    }
}

/// `Σ |p_k - q_k|`.
pub fn l1_distance<F: Scalar>(p: &[F], q: &[F]) -> Result<F, ContinuousError> {
    if p.len() != q.len() {
        return Err(ContinuousError::Dimension { expected: p.len(), got: q.len() });
    }
    Ok(p.iter().zip(q).map(|(a, b)| (*a - *b).abs()).sum())
}

fn same_length<F: Scalar>(a: F, b: F) -> bool {
    (a - b).abs() <= F::of(1e-9) * F::one().max(a.abs()).max(b.abs())
}

/// `∫ d(p(t), q(t)) dt` over the common refinement of both paths.
pub fn path_distance<F: Scalar>(p: &PiecewisePath<F>, q: &PiecewisePath<F>) -> Result<F, ContinuousError> {
    let (lp, lq) = (p.length(), q.length());
    if !same_length(lp, lq) {
        return Err(ContinuousError::LengthMismatch { left: lp.as_f64(), right: lq.as_f64() });
    }
    if p.dim() != q.dim() {
        return Err(ContinuousError::Dimension { expected: p.dim(), got: q.dim() });
    }
    let (ps, qs) = (p.segments(), q.segments());
    let (mut i, mut j) = (0, 0);
    let (mut left_p, mut left_q) = (ps[0].1, qs[0].1);
    let mut total = F::zero();
    while i < ps.len() && j < qs.len() {
        let step = left_p.min(left_q);
        total += step * l1_distance(&ps[i].0, &qs[j].0)?;
        left_p -= step;
        left_q -= step;
        if left_p <= F::zero() {
            i += 1;
            if let Some(s) = ps.get(i) {
                left_p = s.1;
            }
        }
        if left_q <= F::zero() {
            j += 1;
            if let Some(s) = qs.get(j) {
                left_q = s.1;
            }
        }
    }
    Ok(total)
}

/// Distance between two action paths.
pub fn action_distance<F: Scalar>(a: &ActionPath<F>, b: &ActionPath<F>) -> Result<F, ContinuousError> {
    path_distance(a, b)
}

/// `d(sc, sc') + d(a, a')`.
pub fn pair_distance<F: Scalar>(
    sc: &StatePath<F>,
    a: &ActionPath<F>,
    sc2: &StatePath<F>,
    a2: &ActionPath<F>,
) -> Result<F, ContinuousError> {
    Ok(path_distance(sc, sc2)? + path_distance(a, a2)?)
}
