use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::LatticeVector;
use crate::error::{Error, Result};

/// Generators whose residual after orthogonalization falls below this
/// (relative to their own norm) are treated as dependent.
pub const DEPENDENCE_TOL: f64 = 1e-10;

/// Relative tolerance for `v ∈ Y` tests: `‖(I − P)v‖ ≤ tol·(1 + ‖v‖)`.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// A linear subspace `Y ⊂ R^m`, stored as a column-orthonormal basis
/// together with its orthogonal projection `P_Y = Q Qᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    dim_ambient: usize,
    basis: DMatrix<f64>,
    projection: DMatrix<f64>,
}

/// Orthonormalizes `generators` (given as vectors in `R^m`) by modified
/// Gram–Schmidt with one reorthogonalization pass, dropping dependent ones.
fn orthonormalize<'a>(m: usize, generators: impl Iterator<Item = &'a DVector<f64>>) -> Vec<DVector<f64>> {
    let mut columns: Vec<DVector<f64>> = Vec::new();
    for g in generators {
        let scale = g.norm();
        if scale == 0.0 {
            continue;
        }
        let mut r = g.clone();
        for _ in 0..2 {
            for q in &columns {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        let rn = r.norm();
        if rn > DEPENDENCE_TOL * scale.max(1.0) && columns.len() < m {
            columns.push(r / rn);
        }
    }
    columns
}

impl Subspace {
    /// The subspace spanned by `generators` inside `R^m`.
    pub fn span(m: usize, generators: &[LatticeVector]) -> Result<Self> {
        for g in generators {
            if g.dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: g.dim(),
                });
            }
        }
        let columns = orthonormalize(m, generators.iter().map(|g| g.as_dvector()));
        Ok(Self::from_orthonormal(m, &columns))
    }

    /// Builds a subspace from the columns of `matrix` (any spanning set).
    pub fn from_columns(matrix: &DMatrix<f64>) -> Self {
        let m = matrix.nrows();
        let cols: Vec<DVector<f64>> = matrix.column_iter().map(|c| c.into_owned()).collect();
        let columns = orthonormalize(m, cols.iter());
        Self::from_orthonormal(m, &columns)
    }

    fn from_orthonormal(m: usize, columns: &[DVector<f64>]) -> Self {
        if columns.is_empty() {
            return Self::zero(m);
        }
        let basis = DMatrix::from_columns(columns);
        let projection = &basis * basis.transpose();
        Self {
            dim_ambient: m,
            basis,
            projection,
        }
    }

    pub fn zero(m: usize) -> Self {
        Self {
            dim_ambient: m,
            basis: DMatrix::zeros(m, 0),
            projection: DMatrix::zeros(m, m),
        }
    }

    pub fn full(m: usize) -> Self {
        Self {
            dim_ambient: m,
            basis: DMatrix::identity(m, m),
            projection: DMatrix::identity(m, m),
        }
    }

    /// `span{e_i : i ∈ indices}`
    pub fn coordinate(m: usize, indices: &[usize]) -> Self {
        let mut idx: Vec<usize> = indices.iter().copied().filter(|&i| i < m).collect();
        idx.sort_unstable();
        idx.dedup();
        let cols: Vec<DVector<f64>> = idx
            .iter()
            .map(|&i| {
                let mut e = DVector::zeros(m);
                e[i] = 1.0;
                e
            })
            .collect();
        Self::from_orthonormal(m, &cols)
    }

    /// `span{(1, …, 1)}`
    pub fn constants(m: usize) -> Self {
        let one = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        Self::from_orthonormal(m, &[one])
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim_ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.dim_ambient
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.projection * v
    }

    /// `‖(I − P_Y)v‖`
    pub fn distance(&self, v: &DVector<f64>) -> f64 {
        (v - self.project(v)).norm()
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.distance(v) <= MEMBERSHIP_TOL * (1.0 + v.norm())
    }

    pub fn orthogonal_complement(&self) -> Self {
        let m = self.dim_ambient;
        let mut gens: Vec<DVector<f64>> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        let k = gens.len();
        gens.extend((0..m).map(|i| {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            e
        }));
        let all = orthonormalize(m, gens.iter());
        Self::from_orthonormal(m, &all[k..])
    }

    /// `Y₁ ∩ Y₂`, read off from the eigenvalue-2 eigenspace of `P₁ + P₂`.
    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.dim_ambient, other.dim_ambient);
        let m = self.dim_ambient;
        if self.is_zero() || other.is_zero() {
            return Self::zero(m);
        }
        let sum = &self.projection + &other.projection;
        let eig = SymmetricEigen::new(sum);
        let cols: Vec<DVector<f64>> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l >= 2.0 - 1e-9)
            .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
            .collect();
        let cols = orthonormalize(m, cols.iter());
        Self::from_orthonormal(m, &cols)
    }

    /// Whether `self ⊆ other`.
    pub fn is_contained_in(&self, other: &Self) -> bool {
        self.basis.column_iter().all(|c| other.contains(&c.into_owned()))
    }

    /// Whether `P_self · other ⊆ other`; for subspaces this is the same as
    /// the two projections commuting.
    pub fn maps_into(&self, other: &Self) -> bool {
        other
            .basis
            .column_iter()
            .all(|c| other.contains(&self.project(&c.into_owned())))
    }

    /// `Some(I)` if the subspace is `span{e_i : i ∈ I}`.
    pub fn coordinate_indices(&self) -> Option<Vec<usize>> {
        let p = &self.projection;
        let m = self.dim_ambient;
        let tol = 1e-12;
        let mut idx = Vec::new();
        for i in 0..m {
            for j in 0..m {
                if i != j && p[(i, j)].abs() > tol {
                    return None;
                }
            }
            let d = p[(i, i)];
            if (d - 1.0).abs() <= tol {
                idx.push(i);
            } else if d.abs() > tol {
                return None;
            }
        }
        Some(idx)
    }

    /// Generators in row-major form, for serialization.
    pub fn basis_rows(&self) -> Vec<Vec<f64>> {
        self.basis.column_iter().map(|c| c.iter().copied().collect()).collect()
    }
}

/// Orthonormalizes `generators`. An empty list is rejected because the
/// ambient dimension is unknown; use [`Subspace::zero`] for `{0}`.
pub fn make_subspace(generators: &[LatticeVector]) -> Result<Subspace> {
    let first = generators.first().ok_or(Error::EmptyGenerators)?;
    Subspace::span(first.dim(), generators)
}
