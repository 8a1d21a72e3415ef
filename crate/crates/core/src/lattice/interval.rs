use nalgebra::DVector;
use rand::Rng;

use super::LatticeVector;
use crate::error::{Error, Result};

/// An order interval `{x : lower ≤ x ≤ upper}` in `R^m`; bounds may be
/// infinite, covering `[a,b]_W`, `[a,∞)_W` and `(−∞,b]_W`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderInterval {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl OrderInterval {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (i, (&a, &b)) in lower.iter().zip(&upper).enumerate() {
            if a.is_nan() || b.is_nan() || a > b || a == f64::INFINITY || b == f64::NEG_INFINITY {
                return Err(Error::EmptyInterval {
                    index: i,
                    lower: a,
                    upper: b,
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// `[0, ∞)^m`
    pub fn positive_cone(m: usize) -> Self {
        Self {
            lower: vec![0.0; m],
            upper: vec![f64::INFINITY; m],
        }
    }

    /// `[−r, r]^m`
    pub fn symmetric_box(m: usize, r: f64) -> Self {
        assert!(r >= 0.0);
        Self {
            lower: vec![-r; m],
            upper: vec![r; m],
        }
    }

    pub fn unit_box(m: usize) -> Self {
        Self::symmetric_box(m, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_positive_cone(&self) -> bool {
        self.lower.iter().all(|&a| a == 0.0) && self.upper.iter().all(|&b| b == f64::INFINITY)
    }

    /// `Some(r)` if the interval is `[−r, r]^m` with finite `r`.
    pub fn symmetric_box_radius(&self) -> Option<f64> {
        let r = *self.upper.first()?;
        let uniform = r.is_finite() && self.upper.iter().all(|&b| b == r) && self.lower.iter().all(|&a| a == -r);
        uniform.then_some(r)
    }

    pub fn contains_zero(&self) -> bool {
        self.lower.iter().all(|&a| a <= 0.0) && self.upper.iter().all(|&b| b >= 0.0)
    }

    /// Componentwise clamp, which is the Euclidean nearest point of the box.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .enumerate()
                .map(|(i, &v)| v.max(self.lower[i]).min(self.upper[i])),
        )
    }

    /// Largest amount by which `x` leaves the interval in any coordinate.
    pub fn excess(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (self.lower[i] - v).max(v - self.upper[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.excess(x.as_slice()) <= tol
    }

    /// Finite stand-ins for the bounds: infinite ends are replaced by a point
    /// `span` away from the other end (or from 0 when both are infinite).
    pub fn finite_bounds(&self, span: f64) -> (Vec<f64>, Vec<f64>) {
        let lo = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(&a, &b)| {
                if a.is_finite() {
                    a
                } else if b.is_finite() {
                    b - span
                } else {
                    -span
                }
            })
            .collect::<Vec<_>>();
        let hi = self
            .upper
            .iter()
            .zip(&lo)
            .map(|(&b, &a)| if b.is_finite() { b } else { a + 2.0 * span })
            .collect();
        (lo, hi)
    }

    /// All vertices of the box with infinite ends replaced as in
    /// [`finite_bounds`](Self::finite_bounds).
    pub fn vertices(&self, span: f64) -> Vec<DVector<f64>> {
        let (lo, hi) = self.finite_bounds(span);
        let m = self.dim();
        (0..1usize << m)
            .map(|mask| DVector::from_iterator(m, (0..m).map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })))
            .collect()
    }

    /// A uniformly random point of the (truncated) box.
    pub fn sample<R: Rng>(&self, rng: &mut R, span: f64) -> DVector<f64> {
        let (lo, hi) = self.finite_bounds(span);
        DVector::from_iterator(
            self.dim(),
            lo.iter()
                .zip(&hi)
                .map(|(&a, &b)| if a < b { rng.gen_range(a..=b) } else { a }),
        )
    }

    pub fn project_lattice(&self, x: &LatticeVector) -> LatticeVector {
        LatticeVector::new(self.project(x.as_dvector()))
    }
}

pub fn project_interval(j: &OrderInterval, x: &LatticeVector) -> LatticeVector {
    j.project_lattice(x)
}

/// Range `[lo, hi]` of `Σ_j row_j x_j` over `x ∈ J`, by interval arithmetic
/// (exact since the coordinates of `x` vary independently). Entries with
/// `|row_j| ≤ zero_tol` are treated as zero, so `0·∞` never arises.
pub(crate) fn row_range(row: impl Iterator<Item = f64>, j: &OrderInterval, zero_tol: f64) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (c, (&a, &b)) in row.zip(j.lower.iter().zip(&j.upper)) {
        if c.abs() <= zero_tol {
            continue;
        }
        if c > 0.0 {
            lo += c * a;
            hi += c * b;
        } else {
            lo += c * b;
            hi += c * a;
        }
    }
    (lo, hi)
}
