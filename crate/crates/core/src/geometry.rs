//! Flattening maps between the equilibrium slab and the perturbed layers,
//! their Jacobians and geometry matrices, interface normals and the mean
//! curvature operator.
//!
//! Layers are indexed from 0; layer `l` lies between interface `l - 1`
//! (the bottom when `l = 0`) and interface `l`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{HField, TorusGrid};

/// Relative floor below which a perturbed layer counts as pinched off.
pub const DEGENERATE_FLOOR: f64 = 1e-8;

/// Equilibrium interface heights `0 < a_1 < ... < a_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProfile {
    depths: Vec<f64>,
}

impl DepthProfile {
    pub fn new(depths: Vec<f64>) -> Result<Self> {
        let ok = !depths.is_empty()
            && depths[0] > 0.0
            && depths.windows(2).all(|w| w[1] > w[0])
            && depths.iter().all(|d| d.is_finite());
        if !ok {
            return Err(Error::InvalidConfig(format!("depths must be positive and strictly increasing: {depths:?}")));
        }
        Ok(DepthProfile { depths })
    }

    pub fn m(&self) -> usize {
        self.depths.len()
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn lower(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.depths[l - 1]
        }
    }

    pub fn upper(&self, l: usize) -> f64 {
        self.depths[l]
    }

    pub fn thickness(&self, l: usize) -> f64 {
        self.upper(l) - self.lower(l)
    }

    /// A quarter of the thinnest layer.
    pub fn quarter_gap(&self) -> f64 {
        0.25 * (0..self.m()).map(|l| self.thickness(l)).fold(f64::INFINITY, f64::min)
    }

    fn check_layer(&self, l: usize) -> Result<()> {
        if l >= self.m() {
            return Err(Error::LayerIndex { layer: l, m: self.m() });
        }
        Ok(())
    }
}

/// Surface perturbations `eta_l` as horizontal fields on a torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceTuple {
    pub torus: TorusGrid,
    pub eta: Vec<HField>,
}

impl SurfaceTuple {
    pub fn new(torus: TorusGrid, eta: Vec<HField>) -> Self {
        SurfaceTuple { torus, eta }
    }

    pub fn flat(torus: &TorusGrid, m: usize) -> Self {
        SurfaceTuple { torus: torus.clone(), eta: vec![HField::zeros(torus.nfreq(), true); m] }
    }

    /// `[eta_1(x), ..., eta_m(x)]` by direct summation.
    pub fn heights_at(&self, x: [f64; 2]) -> Vec<f64> {
        let ph = self.torus.phases(x);
        self.eta.iter().map(|e| e.coef.iter().zip(&ph).map(|(c, p)| c * p).sum::<C64>().re).collect()
    }

    /// Grid samples of every surface.
    pub fn samples(&self) -> Vec<Vec<f64>> {
        self.eta.iter().map(|e| self.torus.coefficients_to_samples(&e.coef)).collect()
    }

    /// Largest `|eta_l|` on the sample grid.
    pub fn sup(&self) -> f64 {
        self.samples().iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Perturbed interfaces strictly ordered above the bottom at every
    /// grid point.
    pub fn check_admissible(&self, profile: &DepthProfile) -> Result<()> {
        let s = self.samples();
        for j in 0..self.torus.npoints() {
            let heights: Vec<f64> = s.iter().map(|v| v[j]).collect();
            if !admissible_heights(profile, &heights) {
                return Err(Error::Inadmissible);
            }
        }
        Ok(())
    }

    /// Whether `max |eta_l| <= min gap / 4` on the sample grid.
    pub fn within_quarter_gap(&self, profile: &DepthProfile) -> bool {
        self.sup() <= profile.quarter_gap()
    }
}

fn admissible_heights(profile: &DepthProfile, heights: &[f64]) -> bool {
    let mut below = 0.0;
    for (l, h) in heights.iter().enumerate() {
        let top = profile.upper(l) + h;
        if !(top > below) {
            return false;
        }
        below = top;
    }
    true
}

/// Bottom and top of layer `l` over a point with interface heights `heights`.
fn layer_bounds(profile: &DepthProfile, heights: &[f64], l: usize) -> (f64, f64) {
    let bot = if l == 0 { 0.0 } else { profile.lower(l) + heights[l - 1] };
    (bot, profile.upper(l) + heights[l])
}

/// Vertical part of the flattening map at a point with the given heights.
pub fn flatten_height(profile: &DepthProfile, heights: &[f64], l: usize, y: f64) -> Result<f64> {
    profile.check_layer(l)?;
    let (lo, hi) = (profile.lower(l), profile.upper(l));
    let tol = 1e-12 * hi;
    if y < lo - tol || y > hi + tol {
        return Err(Error::OutsideLayer { y, lo, hi });
    }
    let (bot, top) = layer_bounds(profile, heights, l);
    let s = (y - lo) / (hi - lo);
    Ok((1.0 - s) * bot + s * top)
}

/// Vertical part of the inverse flattening map.
pub fn unflatten_height(profile: &DepthProfile, heights: &[f64], l: usize, y: f64) -> Result<f64> {
    profile.check_layer(l)?;
    let (lo, hi) = (profile.lower(l), profile.upper(l));
    let (bot, top) = layer_bounds(profile, heights, l);
    let thick = top - bot;
    if !(thick > DEGENERATE_FLOOR * (hi - lo)) {
        return Err(Error::DegenerateLayer { layer: l, thickness: thick });
    }
    let tol = 1e-12 * top.abs().max(1.0);
    if y < bot - tol || y > top + tol {
        return Err(Error::OutsideLayer { y, lo: bot, hi: top });
    }
    let s = (y - bot) / thick;
    Ok((1.0 - s) * lo + s * hi)
}

/// `F_l(x, y)`: the point of the perturbed layer `l` over `x` at flattened height `y`.
pub fn flatten_map(profile: &DepthProfile, surf: &SurfaceTuple, l: usize, x: [f64; 2], y: f64) -> Result<([f64; 2], f64)> {
    Ok((x, flatten_height(profile, &surf.heights_at(x), l, y)?))
}

/// `F_l^{-1}(x, y)`.
pub fn unflatten_map(profile: &DepthProfile, surf: &SurfaceTuple, l: usize, x: [f64; 2], y: f64) -> Result<([f64; 2], f64)> {
    Ok((x, unflatten_height(profile, &surf.heights_at(x), l, y)?))
}

/// Surfaces, their gradients and the layer Jacobians sampled on the plain
/// or the 3/2-padded horizontal grid.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub profile: DepthProfile,
    /// Space dimension.
    pub n: usize,
    pub npoints: usize,
    /// `eta[l][point]`.
    pub eta: Vec<Vec<f64>>,
    /// `grad[l][point]`, horizontal gradient of `eta_l`.
    pub grad: Vec<Vec<[f64; 2]>>,
    /// `jac[layer][point]`.
    pub jac: Vec<Vec<f64>>,
}

impl GeometryFields {
    pub fn new(profile: &DepthProfile, surf: &SurfaceTuple, padded: bool) -> Result<Self> {
        if surf.eta.len() != profile.m() {
            return Err(Error::Shape(format!("{} surfaces for {} layers", surf.eta.len(), profile.m())));
        }
        let t = &surf.torus;
        let sample = |h: &HField| if padded { t.to_padded(&h.coef) } else { t.coefficients_to_samples(&h.coef) };
        let eta: Vec<Vec<f64>> = surf.eta.iter().map(sample).collect();
        let hd = t.hdim();
        let grad: Vec<Vec<[f64; 2]>> = surf
            .eta
            .iter()
            .map(|e| {
                let d: Vec<Vec<f64>> = (0..hd).map(|j| sample(&e.derivative(t, j))).collect();
                (0..d[0].len()).map(|p| [d[0][p], if hd == 2 { d[1][p] } else { 0.0 }]).collect()
            })
            .collect();
        let npoints = eta[0].len();
        for p in 0..npoints {
            let heights: Vec<f64> = eta.iter().map(|v| v[p]).collect();
            if !admissible_heights(profile, &heights) {
                return Err(Error::Inadmissible);
            }
        }
        let jac = (0..profile.m())
            .map(|l| {
                (0..npoints)
                    .map(|p| {
                        let below = if l == 0 { 0.0 } else { eta[l - 1][p] };
                        1.0 + (eta[l][p] - below) / profile.thickness(l)
                    })
                    .collect()
            })
            .collect();
        Ok(GeometryFields { profile: profile.clone(), n: t.n, npoints, eta, grad, jac })
    }

    /// Horizontal gradient of the vertical displacement inside layer `l`.
    pub fn blend_grad(&self, l: usize, p: usize, y: f64) -> [f64; 2] {
        let s = (y - self.profile.lower(l)) / self.profile.thickness(l);
        let lo = if l == 0 { [0.0; 2] } else { self.grad[l - 1][p] };
        let hi = self.grad[l][p];
        [(1.0 - s) * lo[0] + s * hi[0], (1.0 - s) * lo[1] + s * hi[1]]
    }

    /// `grad F_l` at `(point, y)`; rows and columns beyond `n` are zero.
    pub fn grad_map(&self, l: usize, p: usize, y: f64) -> [[f64; 3]; 3] {
        let n = self.n;
        let b = self.blend_grad(l, p, y);
        let mut g = [[0.0; 3]; 3];
        for i in 0..n - 1 {
            g[i][i] = 1.0;
            g[n - 1][i] = b[i];
        }
        g[n - 1][n - 1] = self.jac[l][p];
        g
    }

    /// `A_l = (grad F_l)^{-t}` at `(point, y)`.
    pub fn a_matrix(&self, l: usize, p: usize, y: f64) -> [[f64; 3]; 3] {
        let n = self.n;
        let b = self.blend_grad(l, p, y);
        let j = self.jac[l][p];
        let mut a = [[0.0; 3]; 3];
        for i in 0..n - 1 {
            a[i][i] = 1.0;
            a[i][n - 1] = -b[i] / j;
        }
        a[n - 1][n - 1] = 1.0 / j;
        a
    }

    /// `N_l = (-grad eta_l, 1)`, not normalized.
    pub fn normal(&self, l: usize, p: usize) -> [f64; 3] {
        let g = self.grad[l][p];
        let mut v = [0.0; 3];
        for i in 0..self.n - 1 {
            v[i] = -g[i];
        }
        v[self.n - 1] = 1.0;
        v
    }

    /// Jacobian of layer `l` as a horizontal field (plain grid only).
    pub fn jacobian_field(&self, torus: &TorusGrid, l: usize) -> Result<HField> {
        HField::from_samples(torus, &self.jac[l])
    }
}

/// `H(eta) = div (grad eta / sqrt(1 + |grad eta|^2))`, with the quotient
/// formed pointwise on the 3/2-padded grid.
pub fn mean_curvature(torus: &TorusGrid, eta: &HField) -> HField {
    let hd = torus.hdim();
    let grads: Vec<Vec<f64>> = (0..hd).map(|j| torus.to_padded(&eta.derivative(torus, j).coef)).collect();
    let np = grads[0].len();
    let scale: Vec<f64> = (0..np)
        .map(|p| {
            let s2: f64 = grads.iter().map(|g| g[p] * g[p]).sum();
            1.0 / (1.0 + s2).sqrt()
        })
        .collect();
    let mut out = HField::zeros(torus.nfreq(), eta.real);
    for (j, g) in grads.iter().enumerate() {
        let q: Vec<f64> = g.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let qh = HField { coef: torus.from_padded(&q), real: true };
        out = out.add(&qh.derivative(torus, j));
    }
    out
}

#[cfg(test)]
mod tests;
