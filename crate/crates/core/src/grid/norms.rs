//! Weighted Fourier sums for horizontal and slab norms.
//!
//! Horizontal weights use |xi| without 2 pi; the inhomogeneous weight is
//! `max(1, |xi|^2)^s`, equivalent to `(1 + |xi|^2)^s` within a factor 2^s.

use num_complex::Complex64 as C64;

use super::{Discretization, HField, TorusGrid, VField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormTag {
    L2,
    Hs(f64),
    /// Homogeneous H^{-1}; the zero mode must vanish.
    HdotMinus1,
    /// Homogeneous H^1 (gradient) seminorm.
    Hdot1,
    /// Anisotropic space for free surfaces.
    CalH(f64),
}

/// Relative size above which a zero mode obstructs a homogeneous seminorm.
pub const ZERO_MODE_TOL: f64 = 1e-10;

/// Horizontal weight of lattice frequency `idx`.
pub fn weight(torus: &TorusGrid, idx: usize, tag: NormTag) -> f64 {
    let r = torus.xi_abs(idx);
    match tag {
        NormTag::L2 => 1.0,
        NormTag::Hs(s) => r.max(1.0).powf(2.0 * s),
        NormTag::HdotMinus1 => {
            if r == 0.0 {
                0.0
            } else {
                r.powi(-2)
            }
        }
        NormTag::Hdot1 => r * r,
        NormTag::CalH(s) => calh_weight(torus.xi(idx), s),
    }
}

/// `(xi_1^2 + |xi|^4)/|xi|^2` for |xi| <= 1 and `|xi|^{2s}` beyond, zero at xi = 0.
pub fn calh_weight(xi: [f64; 2], s: f64) -> f64 {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if r2 == 0.0 {
        0.0
    } else if r2 <= 1.0 {
        (xi[0] * xi[0] + r2 * r2) / r2
    } else {
        r2.powf(s)
    }
}

fn check_zero_mode(coef: &[C64], tag: NormTag) -> Result<()> {
    if tag == NormTag::HdotMinus1 {
        let top = coef.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if top > 0.0 && coef[0].norm() > ZERO_MODE_TOL * top {
            return Err(Error::ZeroModeSeminorm);
        }
    }
    Ok(())
}

/// Squared norm of a horizontal field.
pub fn hnorm_sq(torus: &TorusGrid, h: &HField, tag: NormTag) -> Result<f64> {
    check_zero_mode(&h.coef, tag)?;
    let s: f64 = h.coef.iter().enumerate().map(|(i, c)| weight(torus, i, tag) * c.norm_sqr()).sum();
    Ok(torus.volume() * s)
}

pub fn hnorm(torus: &TorusGrid, h: &HField, tag: NormTag) -> Result<f64> {
    hnorm_sq(torus, h, tag).map(f64::sqrt)
}

/// Root-sum-square over a tuple of horizontal fields.
pub fn hnorm_tuple(torus: &TorusGrid, hs: &[HField], tag: NormTag) -> Result<f64> {
    let mut s = 0.0;
    for h in hs {
        s += hnorm_sq(torus, h, tag)?;
    }
    Ok(s.sqrt())
}

/// Squared slab norm summed over components and layers. For `Hs(s)` the
/// vertical derivatives up to order floor(s) are weighted by
/// `max(1,|xi|^2)^{s-k}`; `Hdot1` is the full gradient seminorm.
pub fn slab_norm_sq(disc: &Discretization, v: &VField, tag: NormTag) -> Result<f64> {
    let torus = &disc.torus;
    let mesh = &disc.mesh;
    let q = mesh.quad_weights();
    let integ = |p: &[C64]| -> f64 { p.iter().zip(&q).map(|(x, w)| w * x.norm_sqr()).sum() };
    let mut total = 0.0;
    for f in 0..v.nfreq() {
        for c in 0..v.ncomp {
            let p = v.profile(f, c);
            match tag {
                NormTag::L2 => total += integ(p),
                NormTag::Hs(s) => {
                    let r = torus.xi_abs(f).max(1.0);
                    let mut d = p.to_vec();
                    let kmax = s.floor() as usize;
                    for k in 0..=kmax {
                        if k > 0 {
                            d = mesh.diff(&d);
                        }
                        total += r.powf(2.0 * (s - k as f64)) * integ(&d);
                    }
                }
                NormTag::Hdot1 => {
                    let r = 2.0 * std::f64::consts::PI * torus.xi_abs(f);
                    total += r * r * integ(p) + integ(&mesh.diff(p));
                }
                NormTag::HdotMinus1 | NormTag::CalH(_) => {
                    return Err(Error::Shape(format!("{tag:?} is not a slab norm")));
                }
            }
        }
    }
    Ok(torus.volume() * total)
}

pub fn slab_norm(disc: &Discretization, v: &VField, tag: NormTag) -> Result<f64> {
    slab_norm_sq(disc, v, tag).map(f64::sqrt)
}

/// `||Du||_{L^2}` with `Du = grad u + grad u^t` for an n-component field.
pub fn sym_grad_l2(disc: &Discretization, u: &VField) -> f64 {
    let n = disc.torus.n;
    assert_eq!(u.ncomp, n, "symmetric gradient needs n components");
    let q = disc.mesh.quad_weights();
    let tp = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    for f in 0..u.nfreq() {
        let xi = disc.torus.xi(f);
        // grad[i][j] = d_j u_i
        let mut grad = vec![vec![Vec::new(); n]; n];
        for (i, gi) in grad.iter_mut().enumerate() {
            let p = u.profile(f, i);
            for (j, gij) in gi.iter_mut().enumerate() {
                *gij = if j == n - 1 {
                    disc.mesh.diff(p)
                } else {
                    p.iter().map(|x| x * C64::new(0.0, tp * xi[j])).collect()
                };
            }
        }
        for i in 0..n {
            for j in 0..n {
                total += grad[i][j]
                    .iter()
                    .zip(&grad[j][i])
                    .zip(&q)
                    .map(|((a, b), w)| w * (a + b).norm_sqr())
                    .sum::<f64>();
            }
        }
    }
    (disc.torus.volume() * total).sqrt()
}
