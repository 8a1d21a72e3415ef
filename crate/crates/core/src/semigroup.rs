//! Time integration of `M u̇ = −A u` on the constrained space, eigenpairs,
//! and observers that compare trajectories against order intervals,
//! subspaces and each other.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::banded::{band_matvec, bandwidths, BandedLu};
use crate::error::{Error, Result};
use crate::forms::{DiscreteForm, MassKind, Mesh};
use crate::lattice::{OrderInterval, Subspace};

/// Default absolute violation tolerance on unit-scaled data.
pub const VIOLATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn theta(self) -> f64 {
        match self {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub mass: MassKind,
    /// Keep every `record_every`-th state (the last one is always kept).
    pub record_every: usize,
}

impl TimeConfig {
    /// `dt = h²/2`, `t_end = 1`, implicit Euler with lumped mass.
    pub fn default_for(mesh: &Mesh) -> Self {
        let h = mesh.h_max();
        Self {
            dt: 0.5 * h * h,
            t_end: 1.0,
            scheme: Scheme::ImplicitEuler,
            mass: MassKind::Lumped,
            record_every: 1,
        }
    }

    /// Number of steps and the step actually used, `t_end / n_steps`.
    pub fn steps(&self) -> Result<(usize, f64)> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidTimeGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return Err(Error::InvalidTimeGrid(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidTimeGrid("record_every must be at least 1".into()));
        }
        let n = (self.t_end / self.dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Ok((n, self.t_end / n as f64))
    }
}

/// The θ-scheme `(M + θ·dt·A) u⁺ = (M − (1−θ)·dt·A) u`, factored once.
#[derive(Debug, Clone)]
pub struct Stepper {
    lu: BandedLu,
    rhs: DMatrix<f64>,
    rhs_band: (usize, usize),
    n_steps: usize,
    dt: f64,
    record_every: usize,
}

impl Stepper {
    pub fn new(form: &DiscreteForm, cfg: &TimeConfig) -> Result<Self> {
        let (n_steps, dt) = cfg.steps()?;
        let theta = cfg.scheme.theta();
        let mass = form.constrained_mass(cfg.mass);
        let a = form.operator();
        let lhs = &mass + a * (theta * dt);
        let rhs = &mass - a * ((1.0 - theta) * dt);
        let lu = BandedLu::factor(&lhs)?;
        let rhs_band = bandwidths(&rhs);
        Ok(Self {
            lu,
            rhs,
            rhs_band,
            n_steps,
            dt,
            record_every: cfg.record_every,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// One step in constrained coordinates.
    pub fn step(&self, uc: &DVector<f64>) -> DVector<f64> {
        let mut b = band_matvec(&self.rhs, self.rhs_band.0, self.rhs_band.1, uc);
        self.lu.solve_in_place(&mut b);
        b
    }

    /// Evolves `u0` (nodal, projected onto `V_Y` first).
    pub fn run(&self, form: &DiscreteForm, u0: &DVector<f64>) -> Trajectory {
        let mut uc = form.restrict(u0);
        let mut times = vec![0.0];
        let mut states = vec![form.lift(&uc)];
        for k in 1..=self.n_steps {
            uc = self.step(&uc);
            if k % self.record_every == 0 || k == self.n_steps {
                times.push(k as f64 * self.dt);
                states.push(form.lift(&uc));
            }
        }
        Trajectory {
            times,
            states,
            m: form.m,
            nodes: form.mesh.nodes().to_vec(),
        }
    }

    /// Final constrained state only, without recording.
    pub fn final_state(&self, uc0: &DVector<f64>) -> DVector<f64> {
        (0..self.n_steps).fold(uc0.clone(), |u, _| self.step(&u))
    }
}

/// Recorded nodal states `u(t_k)`, each of length `(n+1)·m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub m: usize,
    pub nodes: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn value(&self, k: usize, node: usize, comp: usize) -> f64 {
        self.states[k][node * self.m + comp]
    }

    pub fn node_value(&self, k: usize, node: usize) -> DVector<f64> {
        self.states[k].rows(node * self.m, self.m).into_owned()
    }

    /// Discrete `L²` norm with lumped weights.
    pub fn l2_norm(&self, k: usize) -> f64 {
        let x = &self.nodes;
        let n = x.len() - 1;
        (0..=n)
            .map(|i| {
                let w = 0.5 * (if i > 0 { x[i] - x[i - 1] } else { 0.0 } + if i < n { x[i + 1] - x[i] } else { 0.0 });
                w * self.node_value(k, i).norm_squared()
            })
            .sum::<f64>()
            .sqrt()
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
        {
            return Err(Error::GridMismatch("time grids differ".into()));
        }
        if self.nodes != other.nodes {
            return Err(Error::GridMismatch("meshes differ".into()));
        }
        Ok(())
    }
}

pub fn evolve(form: &DiscreteForm, u0: &DVector<f64>, cfg: &TimeConfig) -> Result<Trajectory> {
    if u0.len() != form.n_full() {
        return Err(Error::DimensionMismatch {
            expected: form.n_full(),
            found: u0.len(),
        });
    }
    Ok(Stepper::new(form, cfg)?.run(form, u0))
}

/// The `k` smallest eigenpairs of `A v = λ M v`, ascending, `M`-orthonormal.
pub fn eigenpairs(form: &DiscreteForm, k: usize, mass: MassKind) -> Result<Vec<(f64, DVector<f64>)>> {
    let nc = form.n_constrained();
    if k > nc {
        return Err(Error::OutOfRange { index: k, len: nc });
    }
    let (values, vectors) = form.spectrum(mass)?;
    Ok((0..k).map(|i| (values[i], vectors.column(i).into_owned())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyKind {
    Positivity,
    LinfContraction,
    SubspaceInvariance,
    IntervalInvariance,
    Domination,
    ScalarDomination,
    Decay,
    Irreducibility,
    Symmetry,
    Stability,
}

/// The set a trajectory is observed against.
#[derive(Debug, Clone, PartialEq)]
pub enum PropertyDescriptor {
    Interval(OrderInterval),
    Subspace(Subspace),
}

impl PropertyDescriptor {
    pub fn kind(&self) -> PropertyKind {
        match self {
            PropertyDescriptor::Interval(j) if j.is_positive_cone() => PropertyKind::Positivity,
            PropertyDescriptor::Interval(j) if j.symmetric_box_radius() == Some(1.0) => PropertyKind::LinfContraction,
            PropertyDescriptor::Interval(_) => PropertyKind::IntervalInvariance,
            PropertyDescriptor::Subspace(_) => PropertyKind::SubspaceInvariance,
        }
    }
}

/// Where a violation was first seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub time: f64,
    pub node: usize,
    pub x: f64,
    pub component: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyObservation {
    pub property: PropertyKind,
    pub holds: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
}

impl PropertyObservation {
    pub fn new(property: PropertyKind, tolerance: f64) -> Self {
        Self {
            property,
            holds: true,
            worst_violation: 0.0,
            tolerance,
            witness: None,
        }
    }

    /// Records a sample whose violation is `v`.
    pub fn record(&mut self, v: f64, at: impl FnOnce() -> Witness) {
        if v > self.worst_violation || v.is_nan() {
            self.worst_violation = if v.is_nan() { f64::INFINITY } else { v };
        }
        if (v > self.tolerance || v.is_nan()) && self.witness.is_none() {
            self.witness = Some(at());
        }
        self.holds = self.worst_violation <= self.tolerance;
    }

    /// Combines observations of the same property over several runs.
    pub fn merge(&mut self, other: &PropertyObservation) {
        if other.worst_violation > self.worst_violation {
            self.worst_violation = other.worst_violation;
        }
        if self.witness.is_none() {
            self.witness = other.witness;
        }
        self.holds = self.worst_violation <= self.tolerance;
    }
}

pub fn observe(traj: &Trajectory, property: &PropertyDescriptor, tol: f64) -> PropertyObservation {
    let mut obs = PropertyObservation::new(property.kind(), tol);
    let m = traj.m;
    match property {
        PropertyDescriptor::Interval(j) => {
            for (k, u) in traj.states.iter().enumerate() {
                for node in 0..traj.n_nodes() {
                    for p in 0..m {
                        let v = u[node * m + p];
                        let excess = (j.lower()[p] - v).max(v - j.upper()[p]).max(0.0);
                        obs.record(excess, || Witness {
                            time: traj.times[k],
                            node,
                            x: traj.nodes[node],
                            component: Some(p),
                        });
                    }
                }
            }
        }
        PropertyDescriptor::Subspace(c) => {
            let scale = traj
                .states
                .iter()
                .flat_map(|u| u.iter())
                .fold(0.0f64, |a, v| a.max(v.abs()));
            let floor = 1e-14 * scale;
            for (k, u) in traj.states.iter().enumerate() {
                for node in 0..traj.n_nodes() {
                    let x = u.rows(node * m, m).into_owned();
                    let norm = x.norm();
                    let rel = if norm > floor { c.distance(&x) / norm } else { 0.0 };
                    obs.record(rel, || Witness {
                        time: traj.times[k],
                        node,
                        x: traj.nodes[node],
                        component: None,
                    });
                }
            }
        }
    }
    obs
}

/// `|u1(t,x)| ≤ u2(t,x) + tol` componentwise at every recorded sample.
pub fn check_domination(traj1: &Trajectory, traj2: &Trajectory, tol: f64) -> Result<PropertyObservation> {
    traj1.same_grid(traj2)?;
    if traj1.m != traj2.m {
        return Err(Error::GridMismatch(format!("m = {} vs {}", traj1.m, traj2.m)));
    }
    let m = traj1.m;
    let mut obs = PropertyObservation::new(PropertyKind::Domination, tol);
    for (k, (u1, u2)) in traj1.states.iter().zip(&traj2.states).enumerate() {
        for (idx, (a, b)) in u1.iter().zip(u2.iter()).enumerate() {
            obs.record(a.abs() - b, || Witness {
                time: traj1.times[k],
                node: idx / m,
                x: traj1.nodes[idx / m],
                component: Some(idx % m),
            });
        }
    }
    Ok(obs)
}

/// `‖u(t,x)‖_W ≤ v(t,x) + tol` at every recorded sample.
pub fn check_scalar_domination(
    vec_traj: &Trajectory,
    scalar_traj: &Trajectory,
    tol: f64,
) -> Result<PropertyObservation> {
    vec_traj.same_grid(scalar_traj)?;
    if scalar_traj.m != 1 {
        return Err(Error::GridMismatch("second trajectory must be scalar".into()));
    }
    let mut obs = PropertyObservation::new(PropertyKind::ScalarDomination, tol);
    for k in 0..vec_traj.len() {
        for node in 0..vec_traj.n_nodes() {
            let gap = vec_traj.node_value(k, node).norm() - scalar_traj.value(k, node, 0);
            obs.record(gap, || Witness {
                time: vec_traj.times[k],
                node,
                x: vec_traj.nodes[node],
                component: None,
            });
        }
    }
    Ok(obs)
}

/// Least-squares decay rate `−d/dt log‖u(t)‖` over the last half of the
/// window, dropping samples whose norm fell below `1e-14·‖u(0)‖`.
pub fn decay_rate(traj: &Trajectory) -> Result<f64> {
    let norms: Vec<f64> = (0..traj.len()).map(|k| traj.l2_norm(k)).collect();
    let floor = 1e-14 * norms.first().copied().unwrap_or(0.0);
    let t_half = 0.5 * traj.times.last().copied().unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&norms)
        .filter(|(&t, &n)| t >= t_half && n > floor && n > 0.0)
        .map(|(&t, &n)| (t, n.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NormUnderflow);
    }
    let k = pts.len() as f64;
    let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / k, b + y / k));
    let (sty, stt) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    Ok(-sty / stt)
}

/// For each component `j`, the components that become nonzero at `t_end`
/// when starting from `e_j` at every node (projected onto `V_Y`). A value
/// counts as nonzero above `rel_tol` times the largest entry.
pub fn reach_sets(form: &DiscreteForm, cfg: &TimeConfig, rel_tol: f64) -> Result<Vec<Vec<bool>>> {
    let stepper = Stepper::new(form, cfg)?;
    let m = form.m;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let u0 = form.interpolate(|_| {
            let mut e = DVector::zeros(m);
            e[j] = 1.0;
            e
        });
        let u = form.lift(&stepper.final_state(&form.restrict(&u0)));
        let scale = u.amax();
        let mut hit = vec![false; m];
        for (idx, v) in u.iter().enumerate() {
            if scale > 0.0 && v.abs() > rel_tol * scale {
                hit[idx % m] = true;
            }
        }
        out.push(hit);
    }
    Ok(out)
}

/// Relative defect `|⟨T f, g⟩_M − ⟨f, T g⟩_M| / (‖f‖_M ‖g‖_M)` of the
/// discrete evolution operator over the full window, `f, g` constrained.
pub fn symmetry_defect(form: &DiscreteForm, cfg: &TimeConfig, f: &DVector<f64>, g: &DVector<f64>) -> Result<f64> {
    let stepper = Stepper::new(form, cfg)?;
    let mass = form.constrained_mass(cfg.mass);
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&mass * b));
    let tf = stepper.final_state(f);
    let tg = stepper.final_state(g);
    let norm = (ip(f, f) * ip(g, g)).sqrt();
    Ok(if norm > 0.0 {
        (ip(&tf, g) - ip(f, &tg)).abs() / norm
    } else {
        0.0
    })
}
