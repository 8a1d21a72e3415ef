use std::ops::{Deref, Index};

use nalgebra::DVector;

/// An element of `W = R^m` with the componentwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeVector(DVector<f64>);

/// Positive part, negative part, modulus and sign of a lattice vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub pos: LatticeVector,
    pub neg: LatticeVector,
    pub abs: LatticeVector,
    pub sign: LatticeVector,
}

impl LatticeVector {
    pub fn new(entries: DVector<f64>) -> Self {
        Self(entries)
    }

    pub fn from_slice(entries: &[f64]) -> Self {
        Self(DVector::from_column_slice(entries))
    }

    pub fn zeros(m: usize) -> Self {
        Self(DVector::zeros(m))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.map(f))
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim(), other.dim(), "lattice vectors of different dimension");
        Self(self.0.zip_map(&other.0, f))
    }

    /// `x⁺ = x ∨ 0`
    pub fn pos(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// `x⁻ = (−x) ∨ 0`
    pub fn neg(&self) -> Self {
        self.map(|v| (-v).max(0.0))
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// Componentwise sign with `sgn 0 = 0`, so that `x = sgn(x)·|x|`.
    pub fn sign(&self) -> Self {
        self.map(|v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// Infimum `x ∧ y`.
    pub fn meet(&self, other: &Self) -> Self {
        self.zip(other, f64::min)
    }

    /// Supremum `x ∨ y`.
    pub fn join(&self, other: &Self) -> Self {
        self.zip(other, f64::max)
    }

    /// Pointwise product, used for `y·sgn x`.
    pub fn hadamard(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a * b)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    pub fn decompose(&self) -> Decomposition {
        lattice_decompose(self)
    }
}

impl Deref for LatticeVector {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.0
    }
}

impl Index<usize> for LatticeVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<DVector<f64>> for LatticeVector {
    fn from(v: DVector<f64>) -> Self {
        Self(v)
    }
}

impl From<Vec<f64>> for LatticeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(DVector::from_vec(v))
    }
}

pub fn lattice_decompose(x: &LatticeVector) -> Decomposition {
    let pos = x.pos();
    let neg = x.neg();
    let abs = LatticeVector(&pos.0 + &neg.0);
    Decomposition {
        pos,
        neg,
        abs,
        sign: x.sign(),
    }
}
