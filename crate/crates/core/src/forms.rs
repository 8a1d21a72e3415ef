//! P1 Galerkin discretization of
//! `a(f, g) = ∫ (D f' | g') + ∫ (C f | g) + Σ_z (S_z f(z) | g(z))`
//! on `V_Y = {f ∈ H¹((0,1); R^m) : f(0) ∈ Y_left, f(1) ∈ Y_right}`.
//!
//! Unknowns are ordered node-major: component `p` of node `i` is index
//! `i·m + p`. The constrained coordinates keep the interior nodes as they are
//! and replace each endpoint block by coordinates in an orthonormal basis of
//! the boundary subspace.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Subspace, PATTERN_TOL};

/// Relative tolerance for the symmetry tests on assembled matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance for the semidefiniteness tests.
pub const PSD_TOL: f64 = 1e-10;
/// Singular values below this fraction of the largest count as zero.
pub const KERNEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
}

/// Uniform mesh of `(0, 1)` with `n` elements.
pub fn build_mesh(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::MeshTooCoarse(n));
    }
    Ok(Mesh {
        nodes: (0..=n).map(|i| i as f64 / n as f64).collect(),
    })
}

impl Mesh {
    pub fn uniform(n: usize) -> Result<Self> {
        build_mesh(n)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::MeshTooCoarse(nodes.len().saturating_sub(1)));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::InvalidMesh("nodes must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMesh("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Length of element `e = [x_e, x_{e+1}]`.
    pub fn h(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.h(e)).fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.h(e)).fold(f64::INFINITY, f64::min)
    }

    /// Lumped mass weight of node `i`: half the length of its neighbouring elements.
    pub fn node_weight(&self, i: usize) -> f64 {
        let n = self.n_elements();
        let left = if i > 0 { self.h(i - 1) } else { 0.0 };
        let right = if i < n { self.h(i) } else { 0.0 };
        0.5 * (left + right)
    }
}

/// A piecewise constant `m×m` coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Constant(DMatrix<f64>),
    PerElement(Vec<DMatrix<f64>>),
}

impl Coefficient {
    pub fn at(&self, e: usize) -> &DMatrix<f64> {
        match self {
            Coefficient::Constant(d) => d,
            Coefficient::PerElement(ds) => &ds[e],
        }
    }

    pub fn blocks(&self) -> Vec<&DMatrix<f64>> {
        match self {
            Coefficient::Constant(d) => vec![d],
            Coefficient::PerElement(ds) => ds.iter().collect(),
        }
    }

    /// Samples `f` at element midpoints.
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64) -> DMatrix<f64>) -> Self {
        let x = mesh.nodes();
        Coefficient::PerElement((0..mesh.n_elements()).map(|e| f(0.5 * (x[e] + x[e + 1]))).collect())
    }

    fn check(&self, m: usize, n_elements: usize, what: &str) -> Result<()> {
        if let Coefficient::PerElement(ds) = self {
            if ds.len() != n_elements {
                return Err(Error::CoefficientLength {
                    expected: n_elements,
                    found: ds.len(),
                });
            }
        }
        for d in self.blocks() {
            if d.nrows() != m || d.ncols() != m {
                return Err(Error::InvalidScenario(format!(
                    "{what} block is {}×{}, expected {m}×{m}",
                    d.nrows(),
                    d.ncols()
                )));
            }
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScenario(format!("{what} has non-finite entries")));
            }
        }
        Ok(())
    }
}

pub(crate) fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(sym(a)).eigenvalues.min()
}

pub(crate) fn is_diagonal(a: &DMatrix<f64>, tol: f64) -> bool {
    a.iter()
        .enumerate()
        .all(|(k, v)| k % a.nrows() == k / a.nrows() || v.abs() <= tol)
}

fn is_scalar_multiple_of_identity(a: &DMatrix<f64>) -> Option<f64> {
    let s = a[(0, 0)];
    let tol = PATTERN_TOL * (1.0 + s.abs());
    (is_diagonal(a, tol) && a.diagonal().iter().all(|v| (v - s).abs() <= tol)).then_some(s)
}

/// The full problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub m: usize,
    pub diffusion: Coefficient,
    pub s_left: DMatrix<f64>,
    pub s_right: DMatrix<f64>,
    pub y_left: Subspace,
    pub y_right: Subspace,
    pub potential: Option<Coefficient>,
    /// Claimed ellipticity constant.
    pub gamma: f64,
}

impl Scenario {
    /// `D = I`, `S = 0`, no potential, `γ = 1`.
    pub fn new(name: impl Into<String>, m: usize, y_left: Subspace, y_right: Subspace) -> Self {
        Self {
            name: name.into(),
            m,
            diffusion: Coefficient::Constant(DMatrix::identity(m, m)),
            s_left: DMatrix::zeros(m, m),
            s_right: DMatrix::zeros(m, m),
            y_left,
            y_right,
            potential: None,
            gamma: 1.0,
        }
    }

    /// Same boundary operator at both ends.
    pub fn with_boundary_operator(mut self, s: DMatrix<f64>) -> Self {
        self.s_left = s.clone();
        self.s_right = s;
        self
    }

    pub fn with_diffusion(mut self, d: Coefficient) -> Self {
        self.diffusion = d;
        self
    }

    pub fn with_potential(mut self, c: Coefficient) -> Self {
        self.potential = Some(c);
        self
    }

    pub fn validate(&self, n_elements: usize) -> Result<()> {
        let m = self.m;
        if m == 0 {
            return Err(Error::InvalidScenario("m must be at least 1".into()));
        }
        self.diffusion.check(m, n_elements, "diffusion")?;
        if let Some(c) = &self.potential {
            c.check(m, n_elements, "potential")?;
        }
        for (s, side) in [(&self.s_left, "left"), (&self.s_right, "right")] {
            if s.nrows() != m || s.ncols() != m || s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScenario(format!(
                    "S_{side} must be a finite {m}×{m} matrix"
                )));
            }
        }
        for y in [&self.y_left, &self.y_right] {
            if y.ambient_dim() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: y.ambient_dim(),
                });
            }
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidScenario("gamma must be positive".into()));
        }
        Ok(())
    }

    /// `min_e λ_min(sym D_e) − γ`; nonnegative iff the claimed ellipticity holds.
    pub fn ellipticity_margin(&self) -> f64 {
        self.diffusion
            .blocks()
            .iter()
            .map(|d| min_eigenvalue(d))
            .fold(f64::INFINITY, f64::min)
            - self.gamma
    }

    /// Whether every `D_e` is diagonal, so that no component's flux depends
    /// on another component's gradient.
    pub fn is_local(&self) -> bool {
        self.diffusion
            .blocks()
            .iter()
            .all(|d| is_diagonal(d, PATTERN_TOL * (1.0 + d.amax())))
    }

    pub fn has_symmetric_coefficients(&self) -> bool {
        let sym_ok = |d: &DMatrix<f64>| (d - d.transpose()).amax() <= SYMMETRY_TOL * (1.0 + d.amax());
        self.diffusion.blocks().into_iter().all(sym_ok)
            && self
                .potential
                .as_ref()
                .is_none_or(|c| c.blocks().into_iter().all(sym_ok))
    }

    /// The scalar problem `(d, s, c)` when `D = d⊗I`, `S = s⊗I`, `C = c⊗I`
    /// and `Y = W` at both ends.
    pub fn scalar_companion(&self) -> Result<Scenario> {
        if !self.y_left.is_full() || !self.y_right.is_full() {
            return Err(Error::NotTensorForm("boundary subspaces must be all of W".into()));
        }
        let scalar = |a: &DMatrix<f64>, what: &str| {
            is_scalar_multiple_of_identity(a)
                .ok_or_else(|| Error::NotTensorForm(format!("{what} is not a multiple of the identity")))
        };
        let lift = |c: &Coefficient, what: &str| -> Result<Coefficient> {
            Ok(match c {
                Coefficient::Constant(d) => Coefficient::Constant(DMatrix::from_element(1, 1, scalar(d, what)?)),
                Coefficient::PerElement(ds) => Coefficient::PerElement(
                    ds.iter()
                        .map(|d| Ok(DMatrix::from_element(1, 1, scalar(d, what)?)))
                        .collect::<Result<_>>()?,
                ),
            })
        };
        Ok(Scenario {
            name: format!("{}-scalar", self.name),
            m: 1,
            diffusion: lift(&self.diffusion, "D")?,
            s_left: DMatrix::from_element(1, 1, scalar(&self.s_left, "S_left")?),
            s_right: DMatrix::from_element(1, 1, scalar(&self.s_right, "S_right")?),
            y_left: Subspace::full(1),
            y_right: Subspace::full(1),
            potential: self.potential.as_ref().map(|c| lift(c, "C")).transpose()?,
            gamma: self.gamma,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    #[default]
    Lumped,
    Consistent,
}

/// Outcome of the pointwise ellipticity check `sym D_e ≥ γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipticity {
    pub margin: f64,
    pub holds: bool,
}

/// The assembled form. Full matrices act on nodal vectors of length
/// `N = (n+1)·m`; the constrained ones on coordinates of `V_Y`.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub mesh: Mesh,
    pub m: usize,
    pub stiffness: DMatrix<f64>,
    pub boundary: DMatrix<f64>,
    /// Lumped potential term (block diagonal).
    pub potential: DMatrix<f64>,
    pub mass_lumped: DVector<f64>,
    pub mass_consistent: DMatrix<f64>,
    /// `N × N_c`, orthonormal columns spanning the discrete `V_Y`.
    pub constraint: DMatrix<f64>,
    pub ellipticity: Ellipticity,
    left_basis: DMatrix<f64>,
    right_basis: DMatrix<f64>,
    stiffness_c: DMatrix<f64>,
    boundary_c: DMatrix<f64>,
    operator_c: DMatrix<f64>,
    mass_lumped_c: DVector<f64>,
    mass_consistent_c: DMatrix<f64>,
}

pub fn assemble(scenario: &Scenario, mesh: &Mesh) -> Result<DiscreteForm> {
    let n = mesh.n_elements();
    scenario.validate(n)?;
    let m = scenario.m;
    let nn = (n + 1) * m;
    let mut stiffness = DMatrix::zeros(nn, nn);
    let mut potential = DMatrix::zeros(nn, nn);
    let mut mass_consistent = DMatrix::zeros(nn, nn);
    for e in 0..n {
        let h = mesh.h(e);
        let d = scenario.diffusion.at(e);
        let c = scenario.potential.as_ref().map(|c| c.at(e));
        for (a, ia) in [(0usize, e), (1, e + 1)] {
            for (b, ib) in [(0usize, e), (1, e + 1)] {
                let grad = if a == b { 1.0 / h } else { -1.0 / h };
                let mass = if a == b { h / 3.0 } else { h / 6.0 };
                for p in 0..m {
                    for q in 0..m {
                        stiffness[(ia * m + p, ib * m + q)] += grad * d[(p, q)];
                    }
                    mass_consistent[(ia * m + p, ib * m + p)] += mass;
                }
                if let (Some(c), true) = (c, a == b) {
                    for p in 0..m {
                        for q in 0..m {
                            potential[(ia * m + p, ia * m + q)] += 0.5 * h * c[(p, q)];
                        }
                    }
                }
            }
        }
    }
    let mut boundary = DMatrix::zeros(nn, nn);
    boundary.view_mut((0, 0), (m, m)).copy_from(&scenario.s_left);
    boundary.view_mut((n * m, n * m), (m, m)).copy_from(&scenario.s_right);
    let mass_lumped = DVector::from_fn(nn, |k, _| mesh.node_weight(k / m));

    let left_basis = scenario.y_left.basis().clone();
    let right_basis = scenario.y_right.basis().clone();
    let (kl, kr) = (left_basis.ncols(), right_basis.ncols());
    let nc = kl + (n - 1) * m + kr;
    let mut constraint = DMatrix::zeros(nn, nc);
    constraint.view_mut((0, 0), (m, kl)).copy_from(&left_basis);
    for k in 0..(n - 1) * m {
        constraint[(m + k, kl + k)] = 1.0;
    }
    constraint
        .view_mut((n * m, kl + (n - 1) * m), (m, kr))
        .copy_from(&right_basis);

    let restrict = |a: &DMatrix<f64>| constraint.transpose() * a * &constraint;
    let stiffness_c = restrict(&stiffness);
    let boundary_c = restrict(&boundary);
    let operator_c = &stiffness_c + &boundary_c + restrict(&potential);
    let mass_lumped_c = DVector::from_fn(nc, |j, _| {
        constraint
            .column(j)
            .iter()
            .zip(mass_lumped.iter())
            .map(|(c, w)| c * c * w)
            .sum()
    });
    let mass_consistent_c = restrict(&mass_consistent);

    let margin = scenario.ellipticity_margin();
    Ok(DiscreteForm {
        mesh: mesh.clone(),
        m,
        stiffness,
        boundary,
        potential,
        mass_lumped,
        mass_consistent,
        constraint,
        ellipticity: Ellipticity {
            margin,
            holds: margin >= -PSD_TOL,
        },
        left_basis,
        right_basis,
        stiffness_c,
        boundary_c,
        operator_c,
        mass_lumped_c,
        mass_consistent_c,
    })
}

impl DiscreteForm {
    pub fn n_full(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn n_constrained(&self) -> usize {
        self.constraint.ncols()
    }

    /// `Cᵀ (K + B + P) C`
    pub fn operator(&self) -> &DMatrix<f64> {
        &self.operator_c
    }

    pub fn constrained_stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness_c
    }

    pub fn constrained_boundary(&self) -> &DMatrix<f64> {
        &self.boundary_c
    }

    pub fn constrained_mass(&self, kind: MassKind) -> DMatrix<f64> {
        match kind {
            MassKind::Lumped => DMatrix::from_diagonal(&self.mass_lumped_c),
            MassKind::Consistent => self.mass_consistent_c.clone(),
        }
    }

    pub fn constrained_lumped_mass(&self) -> &DVector<f64> {
        &self.mass_lumped_c
    }

    /// Orthonormal basis of the boundary subspace at node 0 (`left`) or node `n`.
    pub fn endpoint_basis(&self, left: bool) -> &DMatrix<f64> {
        if left {
            &self.left_basis
        } else {
            &self.right_basis
        }
    }

    /// Nodal vector of the constrained coordinates `uc`.
    pub fn lift(&self, uc: &DVector<f64>) -> DVector<f64> {
        &self.constraint * uc
    }

    /// Constrained coordinates of the orthogonal projection of `u` onto `V_Y`.
    pub fn restrict(&self, u: &DVector<f64>) -> DVector<f64> {
        self.constraint.transpose() * u
    }

    /// Value at node `i` of a nodal vector.
    pub fn nodal<'a>(&self, u: &'a DVector<f64>, i: usize) -> nalgebra::DVectorView<'a, f64> {
        u.rows(i * self.m, self.m)
    }

    /// Nodal interpolant of `f : [0,1] → R^m`.
    pub fn interpolate(&self, f: impl Fn(f64) -> DVector<f64>) -> DVector<f64> {
        let m = self.m;
        let mut u = DVector::zeros(self.n_full());
        for (i, &x) in self.mesh.nodes().iter().enumerate() {
            u.rows_mut(i * m, m).copy_from(&f(x));
        }
        u
    }

    /// `a(u, u)` for constrained coordinates.
    pub fn energy(&self, uc: &DVector<f64>) -> f64 {
        uc.dot(&(&self.operator_c * uc))
    }

    pub fn is_symmetric(&self) -> bool {
        let a = &self.operator_c;
        (a - a.transpose()).amax() <= SYMMETRY_TOL * (1.0 + a.amax())
    }

    /// All eigenpairs of `A v = λ M v`, ascending, with `M`-orthonormal
    /// vectors in constrained coordinates.
    pub fn spectrum(&self, kind: MassKind) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let a = sym(&self.operator_c);
        let (values, vectors) = match kind {
            MassKind::Lumped => {
                let w = self.mass_lumped_c.map(|v| 1.0 / v.sqrt());
                let b = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| w[i] * a[(i, j)] * w[j]);
                let eig = SymmetricEigen::new(sym(&b));
                let mut v = eig.eigenvectors;
                for (i, mut row) in v.row_iter_mut().enumerate() {
                    row *= w[i];
                }
                (eig.eigenvalues, v)
            }
            MassKind::Consistent => {
                let chol = Cholesky::new(self.mass_consistent_c.clone()).ok_or(Error::NotPositiveDefinite)?;
                let l = chol.l();
                let linv_a = l.solve_lower_triangular(&a).ok_or(Error::NotPositiveDefinite)?;
                let b = l
                    .solve_lower_triangular(&linv_a.transpose())
                    .ok_or(Error::NotPositiveDefinite)?;
                let eig = SymmetricEigen::new(sym(&b));
                let v = l
                    .transpose()
                    .solve_upper_triangular(&eig.eigenvectors)
                    .ok_or(Error::NotPositiveDefinite)?;
                (eig.eigenvalues, v)
            }
        };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let sorted_values = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
        let sorted_vectors = DMatrix::from_columns(&order.iter().map(|&i| vectors.column(i)).collect::<Vec<_>>());
        Ok((sorted_values, sorted_vectors))
    }
}

/// Discrete counterparts of the form-level characterizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormDiagnostics {
    pub elliptic: bool,
    pub accretive: bool,
    pub symmetric: bool,
    pub kernel_dim: usize,
}

pub fn form_diagnostics(form: &DiscreteForm, scenario: &Scenario) -> FormDiagnostics {
    let k = form.constrained_stiffness();
    let elliptic = min_eigenvalue(k) >= -PSD_TOL * (1.0 + k.amax());
    let ends = [
        (&scenario.y_left, &scenario.s_left),
        (&scenario.y_right, &scenario.s_right),
    ];
    let accretive = ends.iter().all(|(y, s)| {
        let p = y.projection();
        min_eigenvalue(&(p * sym(s) * p)) >= -PSD_TOL * (1.0 + s.amax())
    });
    let symmetric = scenario.has_symmetric_coefficients()
        && ends.iter().all(|(y, s)| {
            let p = y.projection();
            (p * (*s - s.transpose()) * p).amax() <= SYMMETRY_TOL * (1.0 + s.amax())
        });
    let sv = form.operator().singular_values();
    let top = sv.max();
    let kernel_dim = sv
        .iter()
        .filter(|&&v| v <= KERNEL_TOL * top.max(f64::MIN_POSITIVE))
        .count();
    FormDiagnostics {
        elliptic,
        accretive,
        symmetric,
        kernel_dim,
    }
}

/// Residual `max_z ‖P_{Y_z}(∂_D u/∂ν + S_z u)(z)‖` of the natural boundary
/// condition for the `eigenindex`-th lumped-mass eigenfunction, normalized in
/// `L²`. The conormal derivative is the one-sided difference on the boundary
/// element, so the residual is `O(h)`.
pub fn verify_natural_bc(form: &DiscreteForm, scenario: &Scenario, eigenindex: usize) -> Result<f64> {
    let (_, vectors) = form.spectrum(MassKind::Lumped)?;
    if eigenindex >= vectors.ncols() {
        return Err(Error::OutOfRange {
            index: eigenindex,
            len: vectors.ncols(),
        });
    }
    let u = form.lift(&vectors.column(eigenindex).into_owned());
    let mesh = &form.mesh;
    let n = mesh.n_elements();
    let at = |i: usize| form.nodal(&u, i).into_owned();
    let d0 = scenario.diffusion.at(0);
    let dn = scenario.diffusion.at(n - 1);
    let flux_left = -(d0 * (at(1) - at(0))) / mesh.h(0);
    let flux_right = dn * (at(n) - at(n - 1)) / mesh.h(n - 1);
    let left = scenario.y_left.project(&(flux_left + &scenario.s_left * at(0))).norm();
    let right = scenario
        .y_right
        .project(&(flux_right + &scenario.s_right * at(n)))
        .norm();
    Ok(left.max(right))
}
