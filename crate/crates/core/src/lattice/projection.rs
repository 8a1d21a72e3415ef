//! Nearest-point maps onto convex sets of `R^m`, the commuting-projection
//! test and the closed-ideal test.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LatticeVector, OrderInterval, Subspace};

/// Seed used by the randomized set tests when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_1dea1;

/// Nearest point of `C = {(u, v) : |u| ≤ v}` to `(x, y)`:
/// `u = ½(|x| + |x| ∧ y)⁺ · sgn x`, `v = ½(|x| ∨ y + y)⁺`.
pub fn project_domination_cone(x: &LatticeVector, y: &LatticeVector) -> (LatticeVector, LatticeVector) {
    let ax = x.abs();
    let u = LatticeVector::new(&ax.as_dvector().clone() + ax.meet(y).as_dvector())
        .pos()
        .hadamard(&x.sign());
    let v = LatticeVector::new(ax.join(y).as_dvector() + y.as_dvector()).pos();
    (
        LatticeVector::new(u.as_dvector() * 0.5),
        LatticeVector::new(v.as_dvector() * 0.5),
    )
}

/// A closed convex set of the kinds handled by the set tests.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Subspace(Subspace),
    Interval(OrderInterval),
}

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Subspace(y) => y.ambient_dim(),
            ConvexSet::Interval(j) => j.dim(),
        }
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexSet::Subspace(y) => y.project(x),
            ConvexSet::Interval(j) => j.project(x),
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        match self {
            ConvexSet::Subspace(y) => y.contains(x),
            ConvexSet::Interval(j) => j.contains(x, 1e-9 * (1.0 + x.amax())),
        }
    }

    /// Points of the set: structured ones (basis sign combinations at several
    /// scales, or box vertices) followed by `random` random points.
    pub fn sample_points<R: Rng>(&self, random: usize, rng: &mut R) -> Vec<DVector<f64>> {
        let scales = [0.1, 1.0, 3.0, 30.0];
        let mut pts = Vec::new();
        match self {
            ConvexSet::Subspace(y) => {
                let k = y.dim();
                if k == 0 {
                    return vec![DVector::zeros(y.ambient_dim())];
                }
                let b = y.basis();
                if k <= 8 {
                    for mask in 0..1usize << k {
                        let coef =
                            DVector::from_iterator(k, (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }));
                        let p = b * coef;
                        for s in scales {
                            pts.push(&p * s);
                        }
                    }
                }
                for c in b.column_iter() {
                    for s in scales {
                        pts.push(c * s);
                    }
                }
                for _ in 0..random {
                    let coef = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
                    let s = scales[rng.gen_range(0..scales.len())];
                    pts.push(b * coef * s);
                }
            }
            ConvexSet::Interval(j) => {
                if j.dim() <= 10 {
                    for span in [1.0, 10.0, 100.0] {
                        pts.extend(j.vertices(span));
                    }
                }
                for _ in 0..random {
                    let span = scales[rng.gen_range(0..scales.len())];
                    pts.push(j.sample(rng, span));
                }
            }
        }
        pts
    }
}

/// Result of [`commuting_projection_equivalence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionRelations {
    /// `P_{C1} C2 ⊆ C2`
    pub first_preserves_second: bool,
    /// `P_{C2} C1 ⊆ C1`
    pub second_preserves_first: bool,
    /// `P_{C1} P_{C2} z = P_{C2} P_{C1} z` for every sampled `z ∈ C1 ∪ C2`.
    pub commute: bool,
}

impl ProjectionRelations {
    pub fn agree(&self) -> bool {
        self.first_preserves_second == self.second_preserves_first && self.second_preserves_first == self.commute
    }
}

pub fn commuting_projection_equivalence(c1: &ConvexSet, c2: &ConvexSet) -> ProjectionRelations {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    commuting_projection_equivalence_with(c1, c2, 200, &mut rng)
}

/// Sampled test of the three relations between the nearest-point maps of
/// `c1` and `c2`. Commutation is checked on points of `C1 ∪ C2`: globally the
/// maps need not commute even when both inclusions hold (take the diagonal
/// line and the box `[−1,1]²` at `z = (2, 0)`).
pub fn commuting_projection_equivalence_with<R: Rng>(
    c1: &ConvexSet,
    c2: &ConvexSet,
    random: usize,
    rng: &mut R,
) -> ProjectionRelations {
    assert_eq!(c1.dim(), c2.dim(), "sets in different ambient spaces");
    let s1 = c1.sample_points(random, rng);
    let s2 = c2.sample_points(random, rng);
    let preserves =
        |p: &ConvexSet, target: &ConvexSet, pts: &[DVector<f64>]| pts.iter().all(|x| target.contains(&p.project(x)));
    let commute = s1.iter().chain(&s2).all(|z| {
        let a = c1.project(&c2.project(z));
        let b = c2.project(&c1.project(z));
        (a - b).amax() <= 1e-9 * (1.0 + z.amax())
    });
    ProjectionRelations {
        first_preserves_second: preserves(c1, c2, &s2),
        second_preserves_first: preserves(c2, c1, &s1),
        commute,
    }
}

/// Randomized test of "`Y1` is a closed ideal of `Y2`":
/// (i) `x ∈ Y1 ⇒ |x| ∈ Y2`, (ii) `x ∈ Y1, y ∈ Y2, |y| ≤ |x| ⇒ y·sgn x ∈ Y1`.
///
/// `x` ranges over all sign combinations of the basis of `Y1`, the basis
/// vectors, points of `Y1` inside coordinate hyperplanes, and `samples` random
/// points. For a fixed `x`, condition (ii) is linear in `y` and the admissible
/// `y` span `Y2 ∩ span{e_i : x_i ≠ 0}`, so it is checked exactly on a basis of
/// that intersection. A `false` answer always comes with a witness; a `true`
/// answer means no witness was found.
pub fn is_ideal(y1: &Subspace, y2: &Subspace, samples: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    find_ideal_witness(y1, y2, samples, &mut rng).is_none()
}

/// Why `Y1` fails to be an ideal of `Y2`.
#[derive(Debug, Clone, PartialEq)]
pub enum IdealWitness {
    /// `x ∈ Y1` with `|x| ∉ Y2`.
    Modulus { x: DVector<f64> },
    /// `x ∈ Y1`, `y ∈ Y2`, `|y| ≤ |x|` but `y·sgn x ∉ Y1`.
    SignedRestriction { x: DVector<f64>, y: DVector<f64> },
}

pub fn find_ideal_witness<R: Rng>(y1: &Subspace, y2: &Subspace, samples: usize, rng: &mut R) -> Option<IdealWitness> {
    let m = y1.ambient_dim();
    assert_eq!(m, y2.ambient_dim(), "subspaces in different ambient spaces");
    if y1.is_zero() {
        return None;
    }
    let b = y1.basis();
    let k = b.ncols();
    let mut xs: Vec<DVector<f64>> = b.column_iter().map(|c| c.into_owned()).collect();
    if k <= 10 {
        for mask in 1..1usize << k {
            let coef = DVector::from_iterator(k, (0..k).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }));
            xs.push(b * coef);
        }
    }
    // points of Y1 with prescribed zero coordinates
    for i in 0..m {
        let hyper = Subspace::coordinate(m, &(0..m).filter(|&j| j != i).collect::<Vec<_>>());
        let cap = y1.intersection(&hyper);
        xs.extend(cap.basis().column_iter().map(|c| c.into_owned()));
    }
    for _ in 0..samples {
        let coef = DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
        xs.push(b * coef);
    }

    for x in xs {
        let scale = x.amax();
        if scale == 0.0 {
            continue;
        }
        // clean round-off so that structural zeros are exact
        let x = x.map(|v| if v.abs() <= 1e-12 * scale { 0.0 } else { v });
        let abs = x.abs();
        if !y2.contains(&abs) {
            return Some(IdealWitness::Modulus { x });
        }
        let support: Vec<usize> = (0..m).filter(|&i| x[i] != 0.0).collect();
        let sign = x.map(f64::signum).zip_map(&x, |s, v| if v == 0.0 { 0.0 } else { s });
        let admissible = y2.intersection(&Subspace::coordinate(m, &support));
        for col in admissible.basis().column_iter() {
            // scale so that |y| ≤ |x|
            let t = support
                .iter()
                .filter(|&&i| col[i] != 0.0)
                .map(|&i| x[i].abs() / col[i].abs())
                .fold(f64::INFINITY, f64::min);
            let t = if t.is_finite() { t } else { 1.0 };
            let y: DVector<f64> = col * t;
            let z = y.component_mul(&sign);
            if !y1.contains(&z) {
                return Some(IdealWitness::SignedRestriction { x, y });
            }
        }
    }
    None
}
