//! Right inverses of the divergence with prescribed normal traces.
//!
//! All operators act frequency by frequency on slab fields. The inductive
//! multilayer solver reflects the solution of the lower layers into the next
//! layer; on a mesh from [`reflection_mesh`] the reflected panels are affine
//! images of the panels below, so the reflection maps nodes onto nodes.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::norms::ZERO_MODE_TOL;
use crate::grid::{Discretization, HField, Panel, VField, VerticalMesh};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative tolerance of the zero-mode compatibility check.
pub const COMPAT_TOL: f64 = 1e-9;

/// Mesh on which layer `l` is covered by the images of all panels below it
/// under the reflection `y -> a - a (y - a) / (b - a)`, `a = a_{l-1}`, `b = a_l`.
pub fn reflection_mesh(depths: &[f64], degree: usize) -> VerticalMesh {
    let mut panels = vec![Panel { lo: 0.0, hi: depths[0], degree, layer: 0 }];
    for l in 1..depths.len() {
        let (a, b) = (depths[l - 1], depths[l]);
        let image = |z: f64| a + (a - z) * (b - a) / a;
        let mut next: Vec<Panel> =
            panels.iter().rev().map(|p| Panel { lo: image(p.hi), hi: image(p.lo), degree, layer: l }).collect();
        // pin the ends to the exact interface heights
        next.first_mut().unwrap().lo = a;
        next.last_mut().unwrap().hi = b;
        for w in 1..next.len() {
            next[w].lo = next[w - 1].hi;
        }
        panels.extend(next);
    }
    VerticalMesh::from_panels(depths, panels).expect("reflected panels tile the slab")
}

/// Indices of the panels lying in `[lo, hi]`.
fn slab_panels(mesh: &VerticalMesh, lo: f64, hi: f64) -> Vec<usize> {
    let tol = 1e-12 * (1.0 + hi.abs());
    mesh.panels().iter().enumerate().filter(|(_, p)| p.lo >= lo - tol && p.hi <= hi + tol).map(|(i, _)| i).collect()
}

fn check_slab(mesh: &VerticalMesh, lo: f64, hi: f64) -> Result<Vec<usize>> {
    let ps = slab_panels(mesh, lo, hi);
    let covered: f64 = ps.iter().map(|&p| mesh.panels()[p].hi - mesh.panels()[p].lo).sum();
    if !(hi > lo) || ps.is_empty() || (covered - (hi - lo)).abs() > 1e-10 * (1.0 + hi) {
        return Err(Error::Shape(format!("slab ({lo}, {hi}) is not a union of mesh panels")));
    }
    Ok(ps)
}

/// Node index of the top node of the panel ending at `y`, if any.
fn node_at_top(mesh: &VerticalMesh, y: f64) -> Option<usize> {
    let tol = 1e-12 * (1.0 + y.abs());
    mesh.panels().iter().position(|p| (p.hi - y).abs() <= tol).map(|p| mesh.range(p).end - 1)
}

/// `int_lo^y f` on the slab's nodes, zero elsewhere.
fn antiderivative(mesh: &VerticalMesh, panels: &[usize], lo: f64, f: &[C64]) -> Vec<C64> {
    let c = mesh.cumulative(f);
    let base = node_at_top(mesh, lo).map(|j| c[j]).unwrap_or(ZERO);
    let mut out = vec![ZERO; f.len()];
    for &p in panels {
        for j in mesh.range(p) {
            out[j] = c[j] - base;
        }
    }
    out
}

/// `Pi f = (0, ..., 0, int_lo^y f)` on the slab `(lo, hi)`, zero outside.
pub fn div_right_inverse(disc: &Discretization, f: &VField, lo: f64, hi: f64) -> Result<VField> {
    let mesh = &disc.mesh;
    let panels = check_slab(mesh, lo, hi)?;
    let n = disc.torus.n;
    let nn = mesh.nnodes();
    let mut out = VField::zeros(f.nfreq(), n, nn, f.real);
    out.data.par_chunks_mut(n * nn).enumerate().for_each(|(fr, blk)| {
        let w = antiderivative(mesh, &panels, lo, f.profile(fr, 0));
        blk[(n - 1) * nn..].copy_from_slice(&w);
    });
    Ok(out)
}

/// `sinh(t r) / (cosh(h r) - 1)` and `(cosh(t r) - 1) / (cosh(h r) - 1)` for
/// `0 <= t <= h`, `r > 0`, free of overflow and cancellation.
pub fn extension_ratios(t: f64, h: f64, r: f64) -> (f64, f64) {
    let e = ((t - h) * r).exp();
    let den = (-h * r).exp_m1().powi(2);
    let s = e * (-(-2.0 * t * r).exp_m1()) / den;
    let c = e * (-t * r).exp_m1().powi(2) / den;
    (s, c)
}

/// Velocity profile of `P_W` at frequency `xi` for unit top trace, slab
/// thickness `h`, at height `t` above the slab bottom: horizontal components
/// and the vertical component.
fn extension_profile(xi: [f64; 2], hd: usize, t: f64, h: f64) -> ([C64; 2], C64) {
    let r = if hd == 1 { xi[0].abs() } else { xi[0].hypot(xi[1]) };
    let (s, c) = extension_ratios(t, h, r);
    let mut v = [ZERO; 2];
    for j in 0..hd {
        v[j] = C64::new(0.0, xi[j] * s / (2.0 * PI * r));
    }
    (v, C64::new(c, 0.0))
}

fn solenoidal_into(disc: &Discretization, panels: &[usize], lo: f64, hi: f64, f: usize, gh: C64, blk: &mut [C64]) {
    if gh == ZERO {
        return;
    }
    let n = disc.torus.n;
    let nn = disc.nnodes();
    let ys = disc.mesh.nodes();
    let xi = disc.torus.xi(f);
    for &p in panels {
        for j in disc.mesh.range(p) {
            let (v, w) = extension_profile(xi, n - 1, ys[j] - lo, hi - lo);
            for c in 0..n - 1 {
                blk[c * nn + j] += gh * v[c];
            }
            blk[(n - 1) * nn + j] += gh * w;
        }
    }
}

/// Solenoidal field on `(lo, hi)` with top normal trace `g`, zero bottom
/// trace, zero outside the slab. `g` must have no zero mode.
pub fn solenoidal_extension(disc: &Discretization, g: &HField, lo: f64, hi: f64) -> Result<VField> {
    let panels = check_slab(&disc.mesh, lo, hi)?;
    if g.coef[0].norm() > ZERO_MODE_TOL * g.max_abs() {
        return Err(Error::NonzeroZeroMode);
    }
    let n = disc.torus.n;
    let nn = disc.nnodes();
    let mut out = VField::zeros(disc.nfreq(), n, nn, g.real);
    out.data.par_chunks_mut(n * nn).enumerate().skip(1).for_each(|(f, blk)| {
        solenoidal_into(disc, &panels, lo, hi, f, g.coef[f], blk);
    });
    Ok(out)
}

/// `E^{a,b}`: keeps `u` below `a`, reflects it into `(a, b)` by
/// `y -> a - a (y - a) / (b - a)`, and is zero above `b`.
pub fn reflection_extension(disc: &Discretization, u: &VField, a: f64, b: f64) -> Result<VField> {
    let mesh = &disc.mesh;
    let below = check_slab(mesh, 0.0, a)?;
    let above = check_slab(mesh, a, b)?;
    let ys = mesh.nodes();
    let nn = mesh.nnodes();
    // interpolation stencil of every target node
    let mut keep = Vec::new();
    for &p in &below {
        keep.extend(mesh.range(p));
    }
    let mut stencils = Vec::new();
    for &p in &above {
        for j in mesh.range(p) {
            let z = (a - a * (ys[j] - a) / (b - a)).clamp(0.0, a);
            let src = below
                .iter()
                .copied()
                .find(|&q| z >= mesh.panels()[q].lo - 1e-13 && z <= mesh.panels()[q].hi + 1e-13)
                .expect("reflected point lies below a");
            stencils.push((j, mesh.range(src).start, mesh.interp_row(src, z)));
        }
    }
    let mut out = VField::zeros(u.nfreq(), u.ncomp, nn, u.real);
    let w = u.ncomp * nn;
    out.data.par_chunks_mut(w).enumerate().for_each(|(f, blk)| {
        for c in 0..u.ncomp {
            let src = u.profile(f, c);
            let dst = &mut blk[c * nn..(c + 1) * nn];
            for &j in &keep {
                dst[j] = src[j];
            }
            for (j, start, row) in &stencils {
                dst[*j] = row.iter().zip(&src[*start..]).map(|(r, x)| x * *r).sum();
            }
        }
    });
    Ok(out)
}

/// `div u` at every node, each panel differentiating its own values.
pub fn divergence(disc: &Discretization, u: &VField) -> VField {
    let n = disc.torus.n;
    let nn = disc.nnodes();
    let mut out = VField::zeros(u.nfreq(), 1, nn, u.real);
    out.data.par_chunks_mut(nn).enumerate().for_each(|(f, d)| {
        d.copy_from_slice(&disc.mesh.diff(u.profile(f, n - 1)));
        let xi = disc.torus.xi(f);
        for j in 0..n - 1 {
            let ik = C64::new(0.0, 2.0 * PI * xi[j]);
            for (o, x) in d.iter_mut().zip(u.profile(f, j)) {
                *o += ik * x;
            }
        }
    });
    out
}

/// Normal component of `u` at the top of every layer.
pub fn normal_traces(disc: &Discretization, u: &VField) -> Vec<HField> {
    let n = u.ncomp;
    (0..disc.mesh.m()).map(|l| u.node_field(n - 1, disc.mesh.layer_top(l))).collect()
}

/// Single-layer operator `Q^{lo,hi}(f, g) = Pi f + P_W [g - Tr Pi f . e_n]`
/// for compatible data; the zero mode of the bracket is dropped.
pub fn single_layer_solve(disc: &Discretization, f: &VField, g: &HField, lo: f64, hi: f64) -> Result<VField> {
    let panels = check_slab(&disc.mesh, lo, hi)?;
    let mut u = div_right_inverse(disc, f, lo, hi)?;
    let top = node_at_top(&disc.mesh, hi).expect("slab top is a panel end");
    let n = disc.torus.n;
    let nn = disc.nnodes();
    u.real = u.real && g.real;
    u.data.par_chunks_mut(n * nn).enumerate().skip(1).for_each(|(fr, blk)| {
        let defect = g.coef[fr] - blk[(n - 1) * nn + top];
        solenoidal_into(disc, &panels, lo, hi, fr, defect, blk);
    });
    Ok(u)
}

/// Divergence target `f` on the slab and normal traces `g_l` on every interface.
#[derive(Debug, Clone)]
pub struct TraceDivergenceData {
    pub f: VField,
    pub g: Vec<HField>,
}

impl TraceDivergenceData {
    /// Largest violation of `g_l(0) = int_0^{a_l} f(0)` and the tolerance.
    pub fn zero_mode_defect(&self, disc: &Discretization) -> (f64, f64) {
        let f0 = self.f.profile(0, 0);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = f0.iter().map(|c| c.norm()).fold(0.0, f64::max) * disc.mesh.depths().last().unwrap();
        for (l, g) in self.g.iter().enumerate() {
            worst = worst.max((g.coef[0] - disc.mesh.integrate_to_interface(f0, l)).norm());
            scale = scale.max(g.max_abs());
        }
        (worst, COMPAT_TOL * scale.max(f64::MIN_POSITIVE))
    }
}

/// The inductive solver `Q_m`: `div u = f`, `u . e_n = g_l` on every
/// interface, `u = 0` at the bottom.
pub fn multi_trace_solve(disc: &Discretization, data: &TraceDivergenceData) -> Result<VField> {
    let depths = disc.mesh.depths().to_vec();
    let m = depths.len();
    if data.g.len() != m || data.f.ncomp != 1 {
        return Err(Error::Shape(format!("{} traces and {} divergence components", data.g.len(), data.f.ncomp)));
    }
    let (defect, tol) = data.zero_mode_defect(disc);
    if defect > tol {
        return Err(Error::IncompatibleZeroMode { magnitude: defect, tolerance: tol });
    }
    let layer_part = |src: &VField, l: usize| -> VField {
        let layers = disc.mesh.node_layers();
        let mut out = src.clone();
        for v in out.data.chunks_mut(src.nnodes) {
            for (x, &k) in v.iter_mut().zip(&layers) {
                if k != l {
                    *x = ZERO;
                }
            }
        }
        out
    };
    let mut u = single_layer_solve(disc, &layer_part(&data.f, 0), &data.g[0], 0.0, depths[0])?;
    for k in 1..m {
        let ext = reflection_extension(disc, &u, depths[k - 1], depths[k])?;
        let rest = layer_part(&data.f, k).sub(&layer_part(&divergence(disc, &ext), k));
        let corr = single_layer_solve(disc, &rest, &data.g[k], depths[k - 1], depths[k])?;
        u = ext.add(&corr);
    }
    Ok(u)
}
