//! Row-equilibrated dense complex LU with a 1-norm condition estimate.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64 as C64;

pub(crate) struct DenseLu {
    lu: PartialPivLu<C64>,
    row_scale: Vec<f64>,
    n: usize,
    norm1: f64,
}

impl DenseLu {
    /// Scales every row to unit max-norm, then factors.
    pub(crate) fn new(mut a: Mat<C64>) -> Self {
        let n = a.nrows();
        let mut row_scale = vec![1.0; n];
        for (i, s) in row_scale.iter_mut().enumerate() {
            let mut big: f64 = 0.0;
            for j in 0..n {
                big = big.max(a[(i, j)].norm());
            }
            if big > 0.0 {
                *s = 1.0 / big;
                for j in 0..n {
                    a[(i, j)] *= *s;
                }
            }
        }
        let mut norm1: f64 = 0.0;
        for j in 0..n {
            let c: f64 = (0..n).map(|i| a[(i, j)].norm()).sum();
            norm1 = norm1.max(c);
        }
        let lu = a.partial_piv_lu();
        DenseLu { lu, row_scale, n, norm1 }
    }

    /// Solves for several right-hand sides stored as columns.
    pub(crate) fn solve_columns(&self, rhs: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let b = Mat::<C64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i] * self.row_scale[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|j| (0..self.n).map(|i| x[(i, j)]).collect()).collect()
    }

    fn solve_scaled(&self, v: &[C64]) -> Vec<C64> {
        let b = Mat::<C64>::from_fn(self.n, 1, |i, _| v[i]);
        let x = self.lu.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    fn solve_scaled_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let b = Mat::<C64>::from_fn(self.n, 1, |i, _| v[i]);
        let x = self.lu.solve_adjoint(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Hager–Higham estimate of the 1-norm condition number of the
    /// equilibrated matrix.
    pub(crate) fn condition_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
        let mut est = 0.0;
        for iter in 0..5 {
            let y = self.solve_scaled(&x);
            let ny: f64 = y.iter().map(|c| c.norm()).sum();
            if !ny.is_finite() {
                return f64::INFINITY;
            }
            if iter > 0 && ny <= est {
                break;
            }
            est = ny;
            let sgn: Vec<C64> = y
                .iter()
                .map(|c| {
                    let r = c.norm();
                    if r == 0.0 {
                        C64::new(1.0, 0.0)
                    } else {
                        c / r
                    }
                })
                .collect();
            let z = self.solve_scaled_adjoint(&sgn);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .map(|(j, c)| (j, c.norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
            if zmax <= ztx {
                break;
            }
            x = vec![C64::new(0.0, 0.0); n];
            x[jmax] = C64::new(1.0, 0.0);
        }
        // Higham's alternating-sign safeguard.
        let alt: Vec<C64> = (0..n)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
            })
            .collect();
        let ya = self.solve_scaled(&alt);
        let alt_est = 2.0 * ya.iter().map(|c| c.norm()).sum::<f64>() / (3.0 * n as f64);
        self.norm1 * est.max(alt_est)
    }
}
