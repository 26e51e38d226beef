//! Spectral fields on the periodic slab: horizontal Fourier series times
//! per-panel vertical Chebyshev collocation.

pub mod cheb;
pub mod mesh;
pub mod norms;
pub mod torus;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub use mesh::{Panel, VerticalMesh};
pub use norms::NormTag;
pub use torus::TorusGrid;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Horizontal lattice plus vertical mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub torus: TorusGrid,
    pub mesh: VerticalMesh,
}

impl Discretization {
    pub fn new(torus: TorusGrid, mesh: VerticalMesh) -> Self {
        Discretization { torus, mesh }
    }

    /// One panel of degree `degree` per layer.
    pub fn layered(torus: TorusGrid, depths: &[f64], degree: usize) -> Self {
        Discretization { torus, mesh: VerticalMesh::layered(depths, degree) }
    }

    pub fn nfreq(&self) -> usize {
        self.torus.nfreq()
    }

    pub fn nnodes(&self) -> usize {
        self.mesh.nnodes()
    }

    pub fn hdim(&self) -> usize {
        self.torus.hdim()
    }
}

/// Horizontal field: one coefficient per lattice frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct HField {
    pub coef: Vec<C64>,
    /// Set when the field is the transform of a real function.
    pub real: bool,
}

impl HField {
    pub fn zeros(nfreq: usize, real: bool) -> Self {
        HField { coef: vec![ZERO; nfreq], real }
    }

    pub fn from_samples(torus: &TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != torus.npoints() {
            return Err(Error::Shape(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                torus.npoints()
            )));
        }
        Ok(HField { coef: torus.samples_to_coefficients(samples), real: true })
    }

    /// Real samples; the imaginary part is discarded.
    pub fn to_samples(&self, torus: &TorusGrid) -> Vec<f64> {
        torus.coefficients_to_samples(&self.coef)
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    pub fn scale(&self, a: f64) -> Self {
        HField { coef: self.coef.iter().map(|c| c * a).collect(), real: self.real }
    }

    pub fn add(&self, o: &HField) -> Self {
        self.axpy(1.0, o)
    }

    pub fn sub(&self, o: &HField) -> Self {
        self.axpy(-1.0, o)
    }

    /// `self + a * o`.
    pub fn axpy(&self, a: f64, o: &HField) -> Self {
        HField {
            coef: self.coef.iter().zip(&o.coef).map(|(x, y)| x + y * a).collect(),
            real: self.real && o.real,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coef.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Spectral partial derivative in horizontal direction `j` (Nyquist zeroed).
    pub fn derivative(&self, torus: &TorusGrid, j: usize) -> Self {
        let coef = (0..self.coef.len())
            .map(|idx| {
                if torus.is_nyquist(idx) {
                    ZERO
                } else {
                    self.coef[idx] * C64::new(0.0, 2.0 * std::f64::consts::PI * torus.xi(idx)[j])
                }
            })
            .collect();
        HField { coef, real: self.real }
    }

    /// Horizontal Laplacian, multiplier -4 pi^2 |xi|^2 (Nyquist zeroed).
    pub fn laplacian(&self, torus: &TorusGrid) -> Self {
        let c = 4.0 * std::f64::consts::PI.powi(2);
        let coef = (0..self.coef.len())
            .map(|idx| {
                if torus.is_nyquist(idx) {
                    ZERO
                } else {
                    self.coef[idx] * (-c * torus.xi_abs(idx).powi(2))
                }
            })
            .collect();
        HField { coef, real: self.real }
    }

    pub fn zero_nyquist(&mut self, torus: &TorusGrid) {
        for (idx, c) in self.coef.iter_mut().enumerate() {
            if torus.is_nyquist(idx) {
                *c = ZERO;
            }
        }
    }

    /// Largest violation of c(-xi) = conj(c(xi)).
    pub fn symmetry_defect(&self, torus: &TorusGrid) -> f64 {
        (0..self.coef.len())
            .map(|i| (self.coef[torus.partner(i)] - self.coef[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto conjugate-symmetric coefficients.
    pub fn symmetrize(&mut self, torus: &TorusGrid) {
        let old = self.coef.clone();
        for (i, c) in self.coef.iter_mut().enumerate() {
            *c = 0.5 * (old[i] + old[torus.partner(i)].conj());
        }
        self.real = true;
    }

    /// Circular shift by `dx` in physical space (phase rotation).
    pub fn translate(&self, torus: &TorusGrid, dx: [f64; 2]) -> Self {
        let coef = (0..self.coef.len())
            .map(|idx| {
                let xi = torus.xi(idx);
                let ph = -2.0 * std::f64::consts::PI * (xi[0] * dx[0] + xi[1] * dx[1]);
                self.coef[idx] * C64::from_polar(1.0, ph)
            })
            .collect();
        HField { coef, real: self.real }
    }
}

/// Vector-valued slab field, stored frequency-major: `data[(f * ncomp + c) * nnodes + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VField {
    pub ncomp: usize,
    pub nnodes: usize,
    pub data: Vec<C64>,
    pub real: bool,
}

impl VField {
    pub fn zeros(nfreq: usize, ncomp: usize, nnodes: usize, real: bool) -> Self {
        VField { ncomp, nnodes, data: vec![ZERO; nfreq * ncomp * nnodes], real }
    }

    pub fn zeros_on(disc: &Discretization, ncomp: usize) -> Self {
        Self::zeros(disc.nfreq(), ncomp, disc.nnodes(), true)
    }

    pub fn nfreq(&self) -> usize {
        self.data.len() / (self.ncomp * self.nnodes).max(1)
    }

    pub fn block(&self, f: usize) -> &[C64] {
        let w = self.ncomp * self.nnodes;
        &self.data[f * w..(f + 1) * w]
    }

    pub fn block_mut(&mut self, f: usize) -> &mut [C64] {
        let w = self.ncomp * self.nnodes;
        &mut self.data[f * w..(f + 1) * w]
    }

    pub fn profile(&self, f: usize, c: usize) -> &[C64] {
        let s = (f * self.ncomp + c) * self.nnodes;
        &self.data[s..s + self.nnodes]
    }

    pub fn profile_mut(&mut self, f: usize, c: usize) -> &mut [C64] {
        let s = (f * self.ncomp + c) * self.nnodes;
        &mut self.data[s..s + self.nnodes]
    }

    /// Builds a field from physical samples laid out `[comp][node][point]`.
    pub fn from_samples(disc: &Discretization, ncomp: usize, samples: &[f64]) -> Result<Self> {
        let np = disc.torus.npoints();
        let nn = disc.nnodes();
        if samples.len() != ncomp * nn * np {
            return Err(Error::Shape(format!(
                "{} samples, expected {ncomp} x {nn} x {np}",
                samples.len()
            )));
        }
        let mut out = Self::zeros(disc.nfreq(), ncomp, nn, true);
        for c in 0..ncomp {
            for j in 0..nn {
                let s = &samples[(c * nn + j) * np..(c * nn + j + 1) * np];
                let coef = disc.torus.samples_to_coefficients(s);
                for (f, v) in coef.into_iter().enumerate() {
                    out.data[(f * ncomp + c) * nn + j] = v;
                }
            }
        }
        Ok(out)
    }

    /// Physical samples laid out `[comp][node][point]`.
    pub fn to_samples(&self, disc: &Discretization) -> Vec<f64> {
        let np = disc.torus.npoints();
        let nn = self.nnodes;
        let mut out = vec![0.0; self.ncomp * nn * np];
        let mut buf = vec![ZERO; self.nfreq()];
        for c in 0..self.ncomp {
            for j in 0..nn {
                for (f, b) in buf.iter_mut().enumerate() {
                    *b = self.data[(f * self.ncomp + c) * nn + j];
                }
                let s = disc.torus.coefficients_to_samples(&buf);
                out[(c * nn + j) * np..(c * nn + j + 1) * np].copy_from_slice(&s);
            }
        }
        out
    }

    /// Horizontal field formed by node `j` of component `c`.
    pub fn node_field(&self, c: usize, j: usize) -> HField {
        let coef = (0..self.nfreq()).map(|f| self.data[(f * self.ncomp + c) * self.nnodes + j]).collect();
        HField { coef, real: self.real }
    }

    pub fn component(&self, c: usize) -> VField {
        let nf = self.nfreq();
        let mut out = VField::zeros(nf, 1, self.nnodes, self.real);
        for f in 0..nf {
            out.profile_mut(f, 0).copy_from_slice(self.profile(f, c));
        }
        out
    }

    pub fn set_component(&mut self, c: usize, src: &VField) {
        for f in 0..self.nfreq() {
            self.profile_mut(f, c).copy_from_slice(src.profile(f, 0));
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        VField { data: self.data.iter().map(|x| x * a).collect(), ..self.clone() }
    }

    pub fn axpy(&self, a: f64, o: &VField) -> Self {
        VField {
            ncomp: self.ncomp,
            nnodes: self.nnodes,
            data: self.data.iter().zip(&o.data).map(|(x, y)| x + y * a).collect(),
            real: self.real && o.real,
        }
    }

    pub fn add(&self, o: &VField) -> Self {
        self.axpy(1.0, o)
    }

    pub fn sub(&self, o: &VField) -> Self {
        self.axpy(-1.0, o)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn zero_nyquist(&mut self, torus: &TorusGrid) {
        for f in 0..self.nfreq() {
            if torus.is_nyquist(f) {
                self.block_mut(f).fill(ZERO);
            }
        }
    }

    /// Panel-wise vertical derivative of every profile.
    pub fn dy(&self, mesh: &VerticalMesh) -> Self {
        let mut out = self.clone();
        for f in 0..self.nfreq() {
            for c in 0..self.ncomp {
                let d = mesh.diff(self.profile(f, c));
                out.profile_mut(f, c).copy_from_slice(&d);
            }
        }
        out
    }

    /// Horizontal derivative in direction `j` (Nyquist zeroed).
    pub fn dx(&self, torus: &TorusGrid, j: usize) -> Self {
        let mut out = self.clone();
        for f in 0..self.nfreq() {
            let m = if torus.is_nyquist(f) {
                ZERO
            } else {
                C64::new(0.0, 2.0 * std::f64::consts::PI * torus.xi(f)[j])
            };
            for v in out.block_mut(f) {
                *v *= m;
            }
        }
        out
    }

    pub fn symmetry_defect(&self, torus: &TorusGrid) -> f64 {
        let mut worst: f64 = 0.0;
        for f in 0..self.nfreq() {
            let g = torus.partner(f);
            for (a, b) in self.block(f).iter().zip(self.block(g)) {
                worst = worst.max((b - a.conj()).norm());
            }
        }
        worst
    }
}

/// Per-frequency symbol values ready to multiply coefficients. Real fields use
/// the symmetrized symbol `(w(xi) + conj(w(xi')))/2`, `xi'` the lattice
/// partner; away from self-partnered modes a symmetry violation is an error.
fn lattice_symbol<T, F, S>(torus: &TorusGrid, real: bool, omega: F, sym: S) -> Result<Vec<T>>
where
    F: Fn(&[f64]) -> T,
    S: Fn(&T, &T) -> (T, f64, f64),
{
    let nf = torus.nfreq();
    let raw: Vec<T> = (0..nf).map(|i| omega(&torus.xi_vec(i))).collect();
    if !real {
        return Ok(raw);
    }
    let mut out = Vec::with_capacity(nf);
    for i in 0..nf {
        let j = torus.partner(i);
        let (avg, defect, size) = sym(&raw[i], &raw[j]);
        if !torus.is_nyquist(i) && defect > 1e-12 * (1.0 + size) {
            return Err(Error::SymbolSymmetry(i));
        }
        out.push(avg);
    }
    Ok(out)
}

/// Fourier multiplier with a scalar symbol.
pub fn multiplier<F: Fn(&[f64]) -> C64>(torus: &TorusGrid, omega: F, field: &HField) -> Result<HField> {
    let w = lattice_symbol(torus, field.real, omega, |a, b| {
        (0.5 * (a + b.conj()), (b - a.conj()).norm(), a.norm())
    })?;
    Ok(HField { coef: field.coef.iter().zip(&w).map(|(c, w)| c * w).collect(), real: field.real })
}

/// Matrix-valued multiplier acting on a tuple of horizontal fields.
pub fn multiplier_tuple<F>(torus: &TorusGrid, omega: F, fields: &[HField]) -> Result<Vec<HField>>
where
    F: Fn(&[f64]) -> DMatrix<C64>,
{
    let real = fields.iter().all(|f| f.real);
    let w = lattice_symbol(torus, real, omega, |a, b| {
        let avg = (a + b.conjugate()) * C64::new(0.5, 0.0);
        ((avg), (b - a.conjugate()).norm(), a.norm())
    })?;
    let nf = torus.nfreq();
    let rows = w.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = vec![HField::zeros(nf, real); rows];
    for f in 0..nf {
        let v = nalgebra::DVector::from_iterator(fields.len(), fields.iter().map(|h| h.coef[f]));
        let r = &w[f] * v;
        for (k, o) in out.iter_mut().enumerate() {
            o.coef[f] = r[k];
        }
    }
    Ok(out)
}

/// Matrix-valued multiplier acting on the components of a slab field.
pub fn multiplier_field<F>(torus: &TorusGrid, omega: F, field: &VField) -> Result<VField>
where
    F: Fn(&[f64]) -> DMatrix<C64>,
{
    let w = lattice_symbol(torus, field.real, omega, |a, b| {
        let avg = (a + b.conjugate()) * C64::new(0.5, 0.0);
        (avg, (b - a.conjugate()).norm(), a.norm())
    })?;
    let rows = w.first().map(|m| m.nrows()).unwrap_or(0);
    let nn = field.nnodes;
    let mut out = VField::zeros(field.nfreq(), rows, nn, field.real);
    for f in 0..field.nfreq() {
        let m = &w[f];
        for r in 0..rows {
            for c in 0..field.ncomp {
                let a = m[(r, c)];
                if a == ZERO {
                    continue;
                }
                let src: Vec<C64> = field.profile(f, c).to_vec();
                for (o, s) in out.profile_mut(f, r).iter_mut().zip(&src) {
                    *o += a * s;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_multiplier_on_sine() {
        let t = TorusGrid::new(2, 3.0, 32).unwrap();
        let s: Vec<f64> = (0..32).map(|j| (2.0 * PI * t.point(j)[0] / 3.0).sin()).collect();
        let h = HField::from_samples(&t, &s).unwrap();
        let d = multiplier(&t, |xi| C64::new(0.0, 2.0 * PI * xi[0]), &h).unwrap();
        let out = d.to_samples(&t);
        for j in 0..32 {
            let exact = 2.0 * PI / 3.0 * (2.0 * PI * t.point(j)[0] / 3.0).cos();
            assert!((out[j] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn band_pass_and_complement_sum_to_identity() {
        let t = TorusGrid::new(3, 2.0, 8).unwrap();
        let s: Vec<f64> = (0..64).map(|j| ((j * 37 % 11) as f64).sin()).collect();
        let h = HField::from_samples(&t, &s).unwrap();
        let inside = |xi: &[f64]| if xi[0].hypot(xi[1]) < 1.2 { C64::new(1.0, 0.0) } else { ZERO };
        let outside = |xi: &[f64]| C64::new(1.0, 0.0) - inside(xi);
        let a = multiplier(&t, inside, &h).unwrap();
        let b = multiplier(&t, outside, &h).unwrap();
        assert!(a.add(&b).sub(&h).max_abs() < 1e-15);
    }

    #[test]
    fn asymmetric_symbol_on_real_field_is_rejected() {
        let t = TorusGrid::new(2, 1.0, 8).unwrap();
        let h = HField::from_samples(&t, &[1.0; 8]).unwrap();
        let r = multiplier(&t, |xi| C64::new(xi[0], 0.0), &h);
        assert!(matches!(r, Err(Error::SymbolSymmetry(_))));
        let mut c = h.clone();
        c.real = false;
        assert!(multiplier(&t, |xi| C64::new(xi[0], 0.0), &c).is_ok());
    }

    #[test]
    fn nyquist_mode_stays_real_under_derivative() {
        let t = TorusGrid::new(2, 1.0, 8).unwrap();
        let s: Vec<f64> = (0..8).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let h = HField::from_samples(&t, &s).unwrap();
        let d = multiplier(&t, |xi| C64::new(0.0, 2.0 * PI * xi[0]), &h).unwrap();
        assert!(d.max_abs() < 1e-15);
    }

    #[test]
    fn slab_field_round_trip() {
        let t = TorusGrid::new(2, 2.0, 16).unwrap();
        let disc = Discretization::layered(t, &[1.0, 1.5], 10);
        let ys = disc.mesh.nodes();
        let np = t.npoints();
        let mut s = vec![0.0; 2 * ys.len() * np];
        for c in 0..2 {
            for (j, y) in ys.iter().enumerate() {
                for p in 0..np {
                    let x = t.point(p)[0];
                    s[(c * ys.len() + j) * np + p] = (PI * x).cos() * y + c as f64;
                }
            }
        }
        let v = VField::from_samples(&disc, 2, &s).unwrap();
        let back = v.to_samples(&disc);
        let err = s.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13);
        assert!(v.symmetry_defect(&t) < 1e-15);
    }
}
