//! Vertical panels: each layer is covered by one or more Chebyshev panels.

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use super::cheb::ChebBasis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub degree: usize,
    /// 0-based index of the physical layer containing the panel.
    pub layer: usize,
}

impl Panel {
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    /// d/dy = scale * d/dx on the reference interval.
    pub fn scale(&self) -> f64 {
        2.0 / (self.hi - self.lo)
    }

    pub fn map(&self, x: f64) -> f64 {
        0.5 * (self.lo + self.hi) + 0.5 * (self.hi - self.lo) * x
    }

    pub fn unmap(&self, y: f64) -> f64 {
        (2.0 * y - self.lo - self.hi) / (self.hi - self.lo)
    }
}

/// Ordered stack of panels from y = 0 to y = a_m. Nodes at shared panel
/// boundaries are duplicated, one copy per panel.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalMesh {
    panels: Vec<Panel>,
    offsets: Vec<usize>,
    depths: Vec<f64>,
}

impl VerticalMesh {
    /// One panel per layer, same degree everywhere.
    pub fn layered(depths: &[f64], degree: usize) -> Self {
        Self::with_degrees(depths, &vec![degree; depths.len()])
    }

    pub fn with_degrees(depths: &[f64], degrees: &[usize]) -> Self {
        let panels = (0..depths.len())
            .map(|l| Panel {
                lo: if l == 0 { 0.0 } else { depths[l - 1] },
                hi: depths[l],
                degree: degrees[l],
                layer: l,
            })
            .collect();
        Self::from_panels(depths, panels).expect("layered mesh is always consistent")
    }

    /// Builds a mesh from explicit panels; they must tile [0, a_m] in order and
    /// respect layer boundaries.
    pub fn from_panels(depths: &[f64], panels: Vec<Panel>) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::Shape("mesh needs at least one panel".into()));
        }
        let mut y = 0.0;
        for p in &panels {
            if p.degree < 1 || !(p.hi > p.lo) || (p.lo - y).abs() > 1e-12 * (1.0 + y.abs()) {
                return Err(Error::Shape("panels must tile the slab in increasing order".into()));
            }
            let l = p.layer;
            if l >= depths.len() {
                return Err(Error::LayerIndex { layer: l, m: depths.len() });
            }
            let lo = if l == 0 { 0.0 } else { depths[l - 1] };
            if p.lo < lo - 1e-12 || p.hi > depths[l] + 1e-12 {
                return Err(Error::Shape("panel crosses a layer boundary".into()));
            }
            y = p.hi;
        }
        let mut offsets = Vec::with_capacity(panels.len() + 1);
        let mut acc = 0;
        for p in &panels {
            offsets.push(acc);
            acc += p.len();
        }
        offsets.push(acc);
        Ok(VerticalMesh { panels, offsets, depths: depths.to_vec() })
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn m(&self) -> usize {
        self.depths.len()
    }

    pub fn nnodes(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, p: usize) -> Range<usize> {
        self.offsets[p]..self.offsets[p + 1]
    }

    pub fn basis(&self, p: usize) -> Arc<ChebBasis> {
        ChebBasis::cached(self.panels[p].degree)
    }

    /// Panel indices belonging to layer `l`.
    pub fn layer_panels(&self, l: usize) -> Range<usize> {
        let first = self.panels.iter().position(|p| p.layer == l).expect("layer has panels");
        let last = self.panels.iter().rposition(|p| p.layer == l).unwrap();
        first..last + 1
    }

    /// Node index at the bottom of layer `l`.
    pub fn layer_bottom(&self, l: usize) -> usize {
        self.offsets[self.layer_panels(l).start]
    }

    /// Node index at the top of layer `l`.
    pub fn layer_top(&self, l: usize) -> usize {
        self.offsets[self.layer_panels(l).end] - 1
    }

    /// All node heights, panel by panel.
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nnodes());
        for (p, panel) in self.panels.iter().enumerate() {
            let b = self.basis(p);
            out.extend(b.nodes.iter().map(|&x| panel.map(x)));
        }
        out
    }

    /// Layer index of each node.
    pub fn node_layers(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnodes());
        for p in &self.panels {
            out.extend(std::iter::repeat(p.layer).take(p.len()));
        }
        out
    }

    /// Quadrature weights for integrating over y in [0, a_m].
    pub fn quad_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.nnodes());
        for (p, panel) in self.panels.iter().enumerate() {
            let b = self.basis(p);
            let h = 0.5 * (panel.hi - panel.lo);
            out.extend(b.quad.iter().map(|&w| w * h));
        }
        out
    }

    /// Panel-wise derivative of nodal values.
    pub fn diff(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        self.diff_into(v, &mut out);
        out
    }

    pub fn diff_into(&self, v: &[C64], out: &mut [C64]) {
        for (p, panel) in self.panels.iter().enumerate() {
            let b = self.basis(p);
            let r = self.range(p);
            apply_real(&b.diff, panel.scale(), &v[r.clone()], &mut out[r]);
        }
    }

    /// Panel-wise second derivative.
    pub fn diff2(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for (p, panel) in self.panels.iter().enumerate() {
            let b = self.basis(p);
            let r = self.range(p);
            let s = panel.scale();
            apply_real(&b.diff2, s * s, &v[r.clone()], &mut out[r]);
        }
        out
    }

    /// Integral over the whole slab.
    pub fn integrate(&self, v: &[C64]) -> C64 {
        self.quad_weights().iter().zip(v).map(|(w, x)| x * *w).sum()
    }

    /// Integral over the layers `0..=l`, i.e. over (0, a_{l+1}).
    pub fn integrate_to_interface(&self, v: &[C64], l: usize) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (p, panel) in self.panels.iter().enumerate() {
            if panel.layer > l {
                break;
            }
            let b = self.basis(p);
            let h = 0.5 * (panel.hi - panel.lo);
            for (w, x) in b.quad.iter().zip(&v[self.range(p)]) {
                s += x * (w * h);
            }
        }
        s
    }

    /// Exact integral of `a * conj(b)` for panel-wise polynomial profiles.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        self.inner_by_layer(a, b).into_iter().sum()
    }

    /// Per-layer exact integrals of `a * conj(b)`.
    pub fn inner_by_layer(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.m()];
        for (p, panel) in self.panels.iter().enumerate() {
            let basis = self.basis(p);
            let fine = ChebBasis::cached(2 * panel.degree);
            let up = basis.upsample();
            let r = self.range(p);
            let mut fa = vec![C64::new(0.0, 0.0); fine.len()];
            let mut fb = vec![C64::new(0.0, 0.0); fine.len()];
            apply_rect(&up, &a[r.clone()], &mut fa);
            apply_rect(&up, &b[r], &mut fb);
            let h = 0.5 * (panel.hi - panel.lo);
            let s = &mut out[panel.layer];
            for ((x, y), w) in fa.iter().zip(&fb).zip(&fine.quad) {
                *s += x * y.conj() * (w * h);
            }
        }
        out
    }

    /// Running integral from y = 0, continuous across panels.
    pub fn cumulative(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        let mut base = C64::new(0.0, 0.0);
        for (p, panel) in self.panels.iter().enumerate() {
            let b = self.basis(p);
            let r = self.range(p);
            let h = 0.5 * (panel.hi - panel.lo);
            apply_real(&b.cumint, h, &v[r.clone()], &mut out[r.clone()]);
            for x in out[r.clone()].iter_mut() {
                *x += base;
            }
            base = out[r.end - 1];
        }
        out
    }

    /// Index of the panel containing height `y` (lowest panel wins at shared
    /// boundaries unless `prefer_upper`).
    pub fn locate(&self, y: f64, prefer_upper: bool) -> Option<usize> {
        let tol = 1e-13 * (1.0 + self.depths.last().copied().unwrap_or(1.0));
        let mut hit = None;
        for (p, panel) in self.panels.iter().enumerate() {
            if y >= panel.lo - tol && y <= panel.hi + tol {
                hit = Some(p);
                if !prefer_upper {
                    break;
                }
            }
        }
        hit
    }

    /// Interpolates nodal values of panel `p` at height `y`.
    pub fn eval_in_panel(&self, v: &[C64], p: usize, y: f64) -> C64 {
        let b = self.basis(p);
        let row = b.interp_row(self.panels[p].unmap(y));
        row.iter().zip(&v[self.range(p)]).map(|(r, x)| x * *r).sum()
    }

    /// Interpolation weights at height `y` within panel `p`.
    pub fn interp_row(&self, p: usize, y: f64) -> Vec<f64> {
        self.basis(p).interp_row(self.panels[p].unmap(y))
    }
}

pub(crate) fn apply_real(m: &[f64], scale: f64, v: &[C64], out: &mut [C64]) {
    let n = v.len();
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        let mut acc = C64::new(0.0, 0.0);
        for (a, x) in row.iter().zip(v) {
            acc += x * *a;
        }
        out[i] = acc * scale;
    }
}

fn apply_rect(m: &[f64], v: &[C64], out: &mut [C64]) {
    let n = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i * n..(i + 1) * n].iter().zip(v).map(|(a, x)| x * *a).sum();
    }
}
