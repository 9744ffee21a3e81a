use serde::{Deserialize, Serialize};

use super::ContinuousError;
use crate::Scalar;

/// Axis-aligned compact box `Π [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct BoxSpace<F> {
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

impl<F: Scalar> BoxSpace<F> {
    pub fn new(lo: Vec<F>, hi: Vec<F>) -> Result<Self, ContinuousError> {
        if lo.len() != hi.len() {
            return Err(ContinuousError::Dimension { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(ContinuousError::BadBox);
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[F]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| *l <= *v && *v <= *h)
    }
}

/// `count` evenly spaced cell centres on `[lo, hi]`; one value sits at the
/// midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct UniformAxis<F> {
    pub lo: F,
    pub hi: F,
    pub count: usize,
}

impl<F: Scalar> UniformAxis<F> {
    pub fn new(lo: F, hi: F, count: usize) -> Result<Self, ContinuousError> {
        if count == 0 || !(lo <= hi) {
            return Err(ContinuousError::BadBox);
        }
        Ok(Self { lo, hi, count })
    }

    pub fn value(&self, k: usize) -> F {
        let width = (self.hi - self.lo) / F::of_usize(self.count);
        self.lo + (F::of_usize(k) + F::of(0.5)) * width
    }

    pub fn values(&self) -> Vec<F> {
        (0..self.count).map(|k| self.value(k)).collect()
    }

    /// Index of the closest value, the lower one on ties.
    pub fn nearest(&self, x: F) -> usize {
        let mut best = 0;
        let mut best_d = (x - self.value(0)).abs();
        for k in 1..self.count {
            let d = (x - self.value(k)).abs();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    /// Largest distance from a point of `[lo, hi]` to its nearest value.
    pub fn covering_radius(&self) -> F {
        (self.hi - self.lo) / F::of_usize(2 * self.count)
    }
}

/// Product grid; flat indices are mixed-radix with the first axis most
/// significant, so flat order is lexicographic in the coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Scalar", deserialize = "F: Scalar"))]
pub struct Grid<F> {
    pub axes: Vec<UniformAxis<F>>,
}

impl<F: Scalar> Grid<F> {
    pub fn new(axes: Vec<UniformAxis<F>>) -> Self {
        Self { axes }
    }

    /// Grid over a box with `counts[k]` values along axis `k`.
    pub fn over(space: &BoxSpace<F>, counts: &[usize]) -> Result<Self, ContinuousError> {
        if counts.len() != space.dim() {
            return Err(ContinuousError::Dimension { expected: space.dim(), got: counts.len() });
        }
        let axes = (0..counts.len())
            .map(|k| UniformAxis::new(space.lo[k], space.hi[k], counts[k]))
            .collect::<Result<_, _>>()?;
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn coords(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = flat % axis.count;
            flat /= axis.count;
        }
        out
    }

    pub fn flat(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.axes).fold(0, |acc, (c, a)| acc * a.count + c)
    }

    pub fn point(&self, flat: usize) -> Vec<F> {
        self.coords(flat).iter().zip(&self.axes).map(|(&c, a)| a.value(c)).collect()
    }

    /// Grid point closest in L1 (per-axis nearest, lower index on ties).
    pub fn nearest(&self, x: &[F]) -> usize {
        let coords: Vec<usize> = self.axes.iter().zip(x).map(|(a, &v)| a.nearest(v)).collect();
        self.flat(&coords)
    }

    /// Largest L1 distance from a point of the box to its nearest grid point.
    pub fn covering_radius(&self) -> F {
        self.axes.iter().map(|a| a.covering_radius()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centres() {
        let a = UniformAxis::new(0.0, 1.0, 2).unwrap();
        assert_eq!(a.values(), vec![0.25, 0.75]);
        assert_eq!(a.nearest(0.6), 1);
        assert_eq!(a.nearest(0.5), 0);
        assert_eq!(UniformAxis::new(-1.0, 1.0, 1).unwrap().values(), vec![0.0]);
    }

    #[test]
    fn flat_indices_round_trip() {
        let space = BoxSpace::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0]).unwrap();
        let g = Grid::over(&space, &[2, 3, 4]).unwrap();
        assert_eq!(g.size(), 24);
        for f in 0..24 {
            assert_eq!(g.flat(&g.coords(f)), f);
        }
        assert_eq!(g.coords(5), vec![0, 1, 1]);
        assert_eq!(g.point(0), vec![0.25, 1.0 / 3.0, 0.375]);
        let r: f64 = g.covering_radius();
        assert!((r - (0.25 + 1.0 / 3.0 + 0.375)).abs() < 1e-12);
    }

    #[test]
    fn box_validation() {
        assert!(BoxSpace::new(vec![1.0], vec![0.0]).is_err());
        let b = BoxSpace::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(b.contains(&[0.5, 0.0]));
        assert!(!b.contains(&[0.5, 2.0]));
    }
}
