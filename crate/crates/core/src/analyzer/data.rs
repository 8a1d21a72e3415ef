//! Initial data for the observers: structured extremal data first, then
//! seeded random data.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::forms::Mesh;
use crate::lattice::{OrderInterval, Subspace};

/// Where the initial data must live.
#[derive(Debug, Clone)]
pub enum DataSet {
    /// Nodal values in `J`.
    Interval(OrderInterval),
    /// Nodal values in `C`.
    Subspace(Subspace),
}

/// Spatial profiles with values in `[0, 1]`: bumps at each boundary, a
/// constant, and an interior bump.
fn profiles() -> [fn(f64) -> f64; 4] {
    [
        |x| (1.0 - 4.0 * x).max(0.0),
        |x| (1.0 - 4.0 * (1.0 - x)).max(0.0),
        |_| 1.0,
        |x| (1.0 - 4.0 * (x - 0.5).abs()).max(0.0),
    ]
}

/// Value vectors for the structured data.
fn patterns(set: &DataSet) -> Vec<DVector<f64>> {
    let all = match set {
        DataSet::Interval(j) if j.dim() <= 10 => j.vertices(1.0),
        DataSet::Interval(j) => {
            let (lo, hi) = j.finite_bounds(1.0);
            let m = j.dim();
            let mut out = Vec::new();
            for i in 0..m {
                for v in [lo[i], hi[i]] {
                    let mut e = DVector::zeros(m);
                    e[i] = v;
                    out.push(e);
                }
            }
            out
        }
        DataSet::Subspace(c) => {
            let b = c.basis();
            let k = b.ncols();
            let mut out: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
            for a in 0..k {
                for d in a + 1..k {
                    out.push(b.column(a) + b.column(d));
                    out.push(b.column(a) - b.column(d));
                }
            }
            out
        }
    };
    // the zero vector is a vertex of every cone and tests nothing
    all.into_iter().filter(|v| v.amax() > 0.0).collect()
}

/// `structured + random` nodal vectors of length `(n+1)·m`. Structured data
/// are profile × pattern products, which stay in the set because it contains
/// 0 and is convex. Random data draw each nodal value independently.
pub fn initial_data(mesh: &Mesh, set: &DataSet, random: usize, seed: u64) -> Vec<DVector<f64>> {
    let xs = mesh.nodes();
    let (m, has_zero) = match set {
        DataSet::Interval(j) => (j.dim(), j.contains_zero()),
        DataSet::Subspace(c) => (c.ambient_dim(), true),
    };
    let nn = xs.len() * m;
    let mut out = Vec::new();
    let pats = patterns(set);
    for (k, phi) in profiles().iter().enumerate() {
        // without 0 in the set only the constant profile is admissible
        if !has_zero && k != 2 {
            continue;
        }
        for v in &pats {
            out.push(DVector::from_fn(nn, |idx, _| phi(xs[idx / m]) * v[idx % m]));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        let mut u = DVector::zeros(nn);
        for i in 0..xs.len() {
            let v = match set {
                DataSet::Interval(j) => j.sample(&mut rng, 1.0),
                DataSet::Subspace(c) => {
                    let k = c.dim();
                    c.basis() * DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0))
                }
            };
            u.rows_mut(i * m, m).copy_from(&v);
        }
        out.push(u);
    }
    out
}
