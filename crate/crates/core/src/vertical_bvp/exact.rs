//! Exponential-basis solution of the normal-stress problem, used only as a
//! cross-check of the collocation solver.
//!
//! In each layer the pressure is harmonic, `p = A e^{k(y-hi)} + B e^{-k(y-lo)}`,
//! and the normal velocity solves `mu (D^2 - lam^2) w = Dp` with
//! `lam^2 = k^2 + c 2 pi i xi_1 rho / mu`. The particular solutions are built
//! from divided differences `(e^{k s} - e^{lam s}) / (k^2 - lam^2)`, which stay
//! finite as `lam -> k` and reduce to `s e^{k s} / (2k)` there.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use super::Convention;
use crate::config::PhysicalConfig;
use crate::error::{Error, Result};

/// `(e^{a s} - e^{b s}) / (a - b)`.
fn divdiff(a: C64, b: C64, s: f64) -> C64 {
    let z = (a - b) * s;
    if z.norm() < 1e-2 {
        // e^{b s} s (e^z - 1)/z
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for j in 2..=9 {
            term *= z / j as f64;
            sum += term;
        }
        (b * s).exp() * s * sum
    } else {
        ((a * s).exp() - (b * s).exp()) / (a - b)
    }
}

/// Value, first and second derivative of a basis function at one point.
type Jet = [C64; 3];

fn exp_jet(r: C64, s: f64) -> Jet {
    let e = (r * s).exp();
    [e, r * e, r * r * e]
}

/// Basis `[p-part for A, p-part for B, e^{lam(y-hi)}, e^{-lam(y-lo)}]` of w
/// and the two pressure exponentials, at height y in [lo, hi].
fn layer_basis(kap: f64, lam: C64, mu: f64, lo: f64, hi: f64, y: f64) -> ([Jet; 4], [C64; 4]) {
    let k = C64::new(kap, 0.0);
    let sp = y - hi;
    let sm = y - lo;
    // g = (e^{k s} - e^{lam s})/(k^2 - lam^2);  Dg = k g + e^{lam s}/(k+lam);  D2g = k^2 g + e^{lam s}
    let g = divdiff(k, lam, sp) / (k + lam);
    let el = (lam * sp).exp();
    let gj = [g, k * g + el / (k + lam), k * k * g + el];
    // h = (e^{-k s} - e^{-lam s})/(k^2 - lam^2);  Dh = -k h - e^{-lam s}/(k+lam);  D2h = k^2 h + e^{-lam s}
    let h = -divdiff(-k, -lam, sm) / (k + lam);
    let em = (-lam * sm).exp();
    let hj = [h, -k * h - em / (k + lam), k * k * h + em];
    let pa = kap / mu;
    let w_a = [gj[0] * pa, gj[1] * pa, gj[2] * pa];
    let w_b = [-hj[0] * pa, -hj[1] * pa, -hj[2] * pa];
    let w_c = exp_jet(lam, sp);
    let w_e = exp_jet(-lam, sm);
    let p = [(k * sp).exp(), (-k * sm).exp(), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    ([w_a, w_b, w_c, w_e], p)
}

/// Normal velocities at the m interfaces for interface loads `psi`, with the
/// advection sign of `convention`.
pub fn normal_traces(config: &PhysicalConfig, xi: [f64; 2], convention: Convention, psi: &[C64]) -> Result<Vec<C64>> {
    let m = config.m();
    if psi.len() != m {
        return Err(Error::Shape(format!("{} loads for {m} interfaces", psi.len())));
    }
    let r = if config.n == 2 { xi[0].abs() } else { xi[0].hypot(xi[1]) };
    if r == 0.0 {
        return Ok(vec![C64::new(0.0, 0.0); m]);
    }
    let kap = 2.0 * PI * r;
    let c = convention.advection(config.gamma);
    let lams: Vec<C64> = (0..m)
        .map(|l| {
            let adv = C64::new(0.0, c * 2.0 * PI * xi[0] * config.rho[l]);
            (C64::new(kap * kap, 0.0) + adv / config.mu[l]).sqrt()
        })
        .collect();
    let basis = |l: usize, y: f64| layer_basis(kap, lams[l], config.mu[l], config.lower(l), config.depths[l], y);

    // Rows of w, Dw, mu (D^2 + k^2) w and p - 2 mu Dw for layer l at height y.
    let rows = |l: usize, y: f64| -> [[C64; 4]; 4] {
        let (wj, p) = basis(l, y);
        let mu = config.mu[l];
        let mut out = [[C64::new(0.0, 0.0); 4]; 4];
        for b in 0..4 {
            out[0][b] = wj[b][0];
            out[1][b] = wj[b][1];
            out[2][b] = mu * (wj[b][2] + wj[b][0] * (kap * kap));
            out[3][b] = p[b] - 2.0 * mu * wj[b][1];
        }
        out
    };

    let size = 4 * m;
    let mut a = DMatrix::<C64>::zeros(size, size);
    let mut rhs = DVector::<C64>::zeros(size);
    let mut row = 0;
    let bottom = rows(0, 0.0);
    for q in 0..2 {
        for b in 0..4 {
            a[(row, b)] = bottom[q][b];
        }
        row += 1;
    }
    for l in 0..m {
        let y = config.depths[l];
        let below = rows(l, y);
        let above = if l + 1 < m { Some(rows(l + 1, y)) } else { None };
        // continuity of w and Dw, then jumps of tangential and normal stress
        let quantities: &[usize] = if above.is_some() { &[0, 1, 2, 3] } else { &[2, 3] };
        for &q in quantities {
            for b in 0..4 {
                a[(row, 4 * l + b)] = -below[q][b];
                if let Some(ab) = &above {
                    a[(row, 4 * (l + 1) + b)] = ab[q][b];
                }
            }
            if q == 3 {
                rhs[row] = psi[l];
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, size);
    let sol = a.lu().solve(&rhs).ok_or(Error::SingularSymbol { xi: xi[..config.n - 1].to_vec() })?;
    Ok((0..m)
        .map(|l| {
            let (wj, _) = basis(l, config.depths[l]);
            (0..4).map(|b| wj[b][0] * sol[4 * l + b]).sum()
        })
        .collect())
}

/// The m x m symbol assembled column by column from unit loads.
pub fn normal_stress_symbol(config: &PhysicalConfig, xi: [f64; 2], convention: Convention) -> Result<DMatrix<C64>> {
    let m = config.m();
    let mut out = DMatrix::<C64>::zeros(m, m);
    for k in 0..m {
        let mut psi = vec![C64::new(0.0, 0.0); m];
        psi[k] = C64::new(1.0, 0.0);
        let col = normal_traces(config, xi, convention, &psi)?;
        for l in 0..m {
            out[(l, k)] = col[l];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divided_difference_is_continuous_through_resonance() {
        let a = C64::new(3.0, 0.0);
        for s in [-0.7, 0.4] {
            let exact = s * (a * s).exp();
            let near = divdiff(a, a + C64::new(0.0, 1e-9), s);
            assert!((near - exact).norm() < 1e-8 * exact.norm());
            let far = divdiff(a, C64::new(1.0, 0.5), s);
            let direct = ((a * s).exp() - (C64::new(1.0, 0.5) * s).exp()) / (a - C64::new(1.0, 0.5));
            assert!((far - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn particular_solutions_satisfy_the_ode() {
        let kap = 2.0;
        let mu = 0.7;
        let lam = C64::new(kap * kap, 0.9).sqrt();
        for y in [0.1, 0.5, 0.95] {
            let (w, p) = layer_basis(kap, lam, mu, 0.0, 1.0, y);
            // mu (D^2 - lam^2) w = Dp, Dp = k p for A and -k p for B
            let ra = mu * (w[0][2] - lam * lam * w[0][0]) - kap * p[0];
            let rb = mu * (w[1][2] - lam * lam * w[1][0]) + kap * p[1];
            assert!(ra.norm() < 1e-13 && rb.norm() < 1e-13);
        }
    }
}
