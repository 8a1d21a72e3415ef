//! LU factorization with partial pivoting for banded matrices held in dense
//! storage. Only entries inside the band are touched, so one factorization
//! costs `O(n·kl·(kl+ku))` and one solve `O(n·(2kl+ku))`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots below this multiple of the largest entry are treated as zero.
pub const PIVOT_TOL: f64 = 1e-13;

/// Lower and upper bandwidth of `a` (entries exactly zero are outside).
pub fn bandwidths(a: &DMatrix<f64>) -> (usize, usize) {
    let mut kl = 0;
    let mut ku = 0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                if i > j {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
    }
    (kl, ku)
}

/// `y = A x` using only the band of `A`.
pub fn band_matvec(a: &DMatrix<f64>, kl: usize, ku: usize, x: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    DVector::from_fn(n, |i, _| {
        let lo = i.saturating_sub(kl);
        let hi = (i + ku + 1).min(n);
        (lo..hi).map(|j| a[(i, j)] * x[j]).sum()
    })
}

/// Factorization `P A = L U`, stored as in LAPACK `gbtrf`: the multipliers
/// of step `k` sit below the diagonal of column `k`, and the row swap of each
/// step is replayed during the forward substitution.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: DMatrix<f64>,
    pivots: Vec<usize>,
    kl: usize,
    ku: usize,
    min_pivot: f64,
}

impl BandedLu {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        assert!(a.is_square(), "banded LU needs a square matrix");
        let (kl, ku) = bandwidths(a);
        let n = a.nrows();
        let mut lu = a.clone();
        let mut pivots = Vec::with_capacity(n);
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let mut min_pivot = f64::INFINITY;
        // U gains up to kl extra superdiagonals from the row swaps
        let width = kl + ku;
        for k in 0..n {
            let last = (k + kl + 1).min(n);
            let p = (k..last)
                .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
                .unwrap_or(k);
            let piv = lu[(p, k)].abs();
            min_pivot = min_pivot.min(piv);
            if piv <= PIVOT_TOL * scale {
                return Err(Error::SingularStep {
                    pivot: lu[(p, k)],
                    row: k,
                });
            }
            pivots.push(p);
            let cend = (k + width + 1).min(n);
            if p != k {
                for j in k..cend {
                    lu.swap((k, j), (p, j));
                }
            }
            let d = lu[(k, k)];
            for i in k + 1..last {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..cend {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        Ok(Self {
            lu,
            pivots,
            kl,
            ku,
            min_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve_in_place(&self, b: &mut DVector<f64>) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap_rows(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..(k + self.kl + 1).min(n) {
                    b[i] -= self.lu[(i, k)] * bk;
                }
            }
        }
        let width = self.kl + self.ku;
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + width + 1).min(n) {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s / self.lu[(i, i)];
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| {
            if (i > j && i - j > kl) || (j > i && j - i > ku) {
                0.0
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
    }

    #[test]
    fn matches_dense_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = rng.gen_range(1..40);
            let kl = rng.gen_range(0..5);
            let ku = rng.gen_range(0..5);
            let a = random_banded(n, kl, ku, &mut rng);
            let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let Some(dense) = a.clone().lu().solve(&b) else {
                continue;
            };
            let lu = BandedLu::factor(&a).unwrap();
            let x = lu.solve(&b);
            let resid = (&a * &x - &b).amax();
            assert!(
                resid <= 1e-8 * (1.0 + dense.amax()),
                "n={n} kl={kl} ku={ku} resid={resid}"
            );
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = BandedLu::factor(&a).unwrap().solve(&b);
        assert!((&a * x - b).amax() < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(BandedLu::factor(&a), Err(Error::SingularStep { row: 1, .. })));
    }

    #[test]
    fn band_matvec_agrees_with_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_banded(12, 2, 3, &mut rng);
        let (kl, ku) = bandwidths(&a);
        let x = DVector::from_fn(12, |i, _| i as f64 - 4.0);
        assert!((band_matvec(&a, kl, ku, &x) - &a * &x).amax() < 1e-13);
    }
}
