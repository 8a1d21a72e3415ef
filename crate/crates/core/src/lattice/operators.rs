//! Decision procedures for matrices acting on the lattice `R^m`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::interval::row_range;
use super::{OrderInterval, Subspace};

/// Entries above `−POSITIVITY_TOL` count as nonnegative.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// Slack allowed on row sums and interval bounds.
pub const INVARIANCE_TOL: f64 = 1e-12;

/// Default threshold for the nonzero pattern of a projection.
pub const PATTERN_TOL: f64 = 1e-10;

/// `M [0,∞)^m ⊆ [0,∞)^m`, i.e. every entry is nonnegative.
pub fn is_positive_operator(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= -POSITIVITY_TOL)
}

pub fn max_row_abs_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `M [−1,1]^m ⊆ [−1,1]^m`, i.e. every row has absolute sum at most one.
pub fn leaves_box_invariant(m: &DMatrix<f64>) -> bool {
    max_row_abs_sum(m) <= 1.0 + INVARIANCE_TOL
}

fn bound_slack(bound: f64) -> f64 {
    1e-9 * (1.0 + if bound.is_finite() { bound.abs() } else { 0.0 })
}

/// Whether `M J ⊆ J`.
///
/// The positive cone and symmetric boxes use the entrywise and row-sum tests.
/// Any other interval is decided exactly by interval arithmetic: the image of
/// a box under a linear map has coordinate ranges `Σ_j M_ij [a_j, b_j]`.
pub fn interval_invariant(m: &DMatrix<f64>, j: &OrderInterval) -> bool {
    assert_eq!(m.nrows(), j.dim());
    assert_eq!(m.ncols(), j.dim());
    if j.is_positive_cone() {
        return is_positive_operator(m);
    }
    if let Some(r) = j.symmetric_box_radius() {
        return r == 0.0 || leaves_box_invariant(m);
    }
    ranges_invariant(m, j)
}

pub(crate) fn ranges_invariant(m: &DMatrix<f64>, j: &OrderInterval) -> bool {
    m.row_iter().enumerate().all(|(i, row)| {
        let (lo, hi) = row_range(row.iter().copied(), j, POSITIVITY_TOL);
        let (a, b) = (j.lower()[i], j.upper()[i]);
        lo >= a - bound_slack(a) && hi <= b + bound_slack(b)
    })
}

/// Searches for `x ∈ J` with `M x ∉ J` (margin above 1e-9) among the box
/// vertices, with infinite ends truncated at `span`, and `samples` random
/// points. Returns the first witness found.
pub fn find_interval_witness<R: Rng>(
    m: &DMatrix<f64>,
    j: &OrderInterval,
    samples: usize,
    span: f64,
    rng: &mut R,
) -> Option<DVector<f64>> {
    let check = |x: &DVector<f64>| j.excess((m * x).as_slice()) > 1e-9;
    if j.dim() <= 12 {
        if let Some(v) = j.vertices(span).into_iter().find(|v| check(v)) {
            return Some(v);
        }
    }
    (0..samples).map(|_| j.sample(rng, span)).find(|x| check(x))
}

/// Whether the semigroup `e^{tB}` leaves the order interval `J ∋ 0` invariant.
///
/// Uses the tangency condition for linear flows on boxes: at every point of
/// the face `x_i = b_i` the field must satisfy `(Bx)_i ≤ 0`, and at `x_i = a_i`
/// it must satisfy `(Bx)_i ≥ 0`; the extremes over the face come from interval
/// arithmetic. For `[0,∞)^m` this is `B_ij ≥ 0` off the diagonal, for
/// `[−1,1]^m` it is `B_ii + Σ_{j≠i} |B_ij| ≤ 0`.
pub fn generator_leaves_interval_invariant(b: &DMatrix<f64>, j: &OrderInterval) -> bool {
    let n = j.dim();
    assert_eq!(b.nrows(), n);
    for i in 0..n {
        let off = (0..n).map(|k| if k == i { 0.0 } else { b[(i, k)] });
        let (lo, hi) = row_range(off, j, POSITIVITY_TOL);
        let upper = j.upper()[i];
        if upper.is_finite() && b[(i, i)] * upper + hi > bound_slack(upper) {
            return false;
        }
        let lower = j.lower()[i];
        if lower.is_finite() && b[(i, i)] * lower + lo < -bound_slack(lower) {
            return false;
        }
    }
    true
}

/// Undirected nonzero-pattern connectivity of a symmetric matrix: `true`
/// iff no coordinate subspace other than `{0}` and `R^m` is invariant.
pub fn is_irreducible(p: &Subspace, tol: f64) -> bool {
    pattern_strongly_connected(&[p.projection()], tol)
}

/// Whether the directed graph with an edge `k → i` whenever some matrix has
/// `|M_ik| > tol` is strongly connected. A coordinate subspace `span{e_k : k ∈ S}`
/// is invariant under all matrices iff `S` is closed under these edges.
pub fn pattern_strongly_connected(mats: &[&DMatrix<f64>], tol: f64) -> bool {
    let Some(first) = mats.first() else {
        return true;
    };
    let n = first.nrows();
    if n <= 1 {
        return true;
    }
    let edge = |from: usize, to: usize| mats.iter().any(|a| a[(to, from)].abs() > tol);
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for w in 0..n {
                let linked = if forward { edge(v, w) } else { edge(w, v) };
                if !seen[w] && linked {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach_all(true) && reach_all(false)
}

/// Spectral norms of `T` and of its lift `T ⊗ I_m` acting componentwise on
/// `R^m`-valued coordinates.
pub fn lift_norm_check(t: &DMatrix<f64>, m: usize) -> (f64, f64) {
    assert!(m >= 1);
    let lift = t.kronecker(&DMatrix::<f64>::identity(m, m));
    (spectral_norm(t), spectral_norm(&lift))
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kirchhoff(m: usize) -> DMatrix<f64> {
        DMatrix::from_element(m, m, 1.0 / m as f64)
    }

    fn anti_kirchhoff(m: usize) -> DMatrix<f64> {
        DMatrix::identity(m, m) - kirchhoff(m)
    }

    #[test]
    fn positivity_of_open_book_projections() {
        assert!(is_positive_operator(&kirchhoff(4)));
        assert!(!is_positive_operator(&anti_kirchhoff(2)));
        assert!(is_positive_operator(&DMatrix::identity(3, 3)));
    }

    #[test]
    fn anti_kirchhoff_box_threshold() {
        assert!(leaves_box_invariant(&anti_kirchhoff(2)));
        assert_abs_diff_eq!(max_row_abs_sum(&anti_kirchhoff(3)), 4.0 / 3.0, epsilon = 1e-14);
        assert!(!leaves_box_invariant(&anti_kirchhoff(3)));
        for m in 1..8 {
            assert!(leaves_box_invariant(&kirchhoff(m)));
        }
        assert!(leaves_box_invariant(&DMatrix::zeros(3, 3)));
    }

    #[test]
    fn interval_invariance_special_cases() {
        assert!(interval_invariant(&kirchhoff(3), &OrderInterval::positive_cone(3)));
        let j = OrderInterval::new(vec![-1.0, 0.0], vec![2.0, f64::INFINITY]).unwrap();
        assert!(interval_invariant(&DMatrix::identity(2, 2), &j));
        assert!(!interval_invariant(&kirchhoff(2), &j));
    }

    #[test]
    fn interval_test_agrees_with_sampled_witness_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.gen_range(1..4);
            let mat = DMatrix::from_fn(m, m, |_, _| {
                if rng.gen_bool(0.3) {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            });
            let lower: Vec<f64> = (0..m)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        f64::NEG_INFINITY
                    } else {
                        rng.gen_range(-2.0..0.0)
                    }
                })
                .collect();
            let upper: Vec<f64> = (0..m)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        f64::INFINITY
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            let j = OrderInterval::new(lower, upper).unwrap();
            let exact = interval_invariant(&mat, &j);
            let witness = find_interval_witness(&mat, &j, 200, 1e3, &mut rng);
            assert_eq!(exact, witness.is_none(), "{mat} {j:?}");
        }
    }

    #[test]
    fn unit_box_matches_row_sum_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let j = OrderInterval::unit_box(3);
        for _ in 0..200 {
            let mat = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-0.7..0.7));
            assert_eq!(interval_invariant(&mat, &j), leaves_box_invariant(&mat));
            assert_eq!(ranges_invariant(&mat, &j), leaves_box_invariant(&mat));
        }
    }

    fn expm_leaves_invariant(b: &DMatrix<f64>, j: &OrderInterval) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        [1e-6, 1e-4, 0.01, 0.1, 0.5, 1.0, 3.0].iter().all(|&t| {
            let e = (b * t).exp();
            find_interval_witness(&e, j, 100, 50.0, &mut rng).is_none()
        })
    }

    #[test]
    fn generator_criteria_match_matrix_exponentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = [
            OrderInterval::positive_cone(3),
            OrderInterval::unit_box(3),
            OrderInterval::new(vec![-1.0, -0.5, f64::NEG_INFINITY], vec![2.0, 0.5, 1.0]).unwrap(),
        ];
        let mut seen = [0usize; 2];
        for _ in 0..400 {
            let s = DMatrix::from_fn(3, 3, |i, k| {
                if i == k {
                    rng.gen_range(-0.5..2.0)
                } else if rng.gen_bool(0.4) {
                    0.0
                } else {
                    rng.gen_range(-1.0..0.6)
                }
            });
            let b = -&s;
            for j in &sets {
                let predicted = generator_leaves_interval_invariant(&b, j);
                seen[predicted as usize] += 1;
                assert_eq!(predicted, expm_leaves_invariant(&b, j), "S = {s} J = {j:?}");
            }
        }
        assert!(seen[0] > 50 && seen[1] > 50, "{seen:?}");
    }

    #[test]
    fn box_generator_does_not_need_nonpositive_off_diagonals() {
        // e^{-tS} = P_0 + e^{-2t} P_2 has row absolute sums exactly 1.
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(generator_leaves_interval_invariant(&(-&s), &OrderInterval::unit_box(2)));
        assert!(!generator_leaves_interval_invariant(
            &(-&s),
            &OrderInterval::positive_cone(2)
        ));
        assert!(expm_leaves_invariant(&(-&s), &OrderInterval::unit_box(2)));
    }

    #[test]
    fn irreducibility_by_pattern() {
        let k3 = Subspace::constants(3);
        assert!(is_irreducible(&k3, PATTERN_TOL));
        let diag = Subspace::coordinate(2, &[0]);
        assert!(!is_irreducible(&diag, PATTERN_TOL));
        let mut block = DMatrix::zeros(4, 4);
        block.view_mut((0, 0), (2, 2)).copy_from(&kirchhoff(2));
        block.view_mut((2, 2), (2, 2)).copy_from(&kirchhoff(2));
        let y = Subspace::from_columns(&block);
        assert!(!is_irreducible(&y, PATTERN_TOL));
    }

    #[test]
    fn directed_pattern_needs_both_directions() {
        let upper = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(!pattern_strongly_connected(&[&upper], 0.0));
        let lower = upper.transpose();
        assert!(pattern_strongly_connected(&[&upper, &lower], 0.0));
    }

    #[test]
    fn lift_norms() {
        let shift = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let (a, b) = lift_norm_check(&shift, 2);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        for m in 1..5 {
            let (a, b) = lift_norm_check(&DMatrix::identity(3, 3), m);
            assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = DMatrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..1.0));
        let (a, b) = lift_norm_check(&t, 5);
        assert!((a - b).abs() <= 1e-10);
    }
}
