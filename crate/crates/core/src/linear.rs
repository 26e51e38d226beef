//! The linearized gravity-capillary multilayer system and its inverse.
//!
//! The forward map applies the bulk rows, the stress jumps with the
//! gravity-capillary term and the kinematic rows. The inverse measures
//! compatibility, recovers the surfaces from `p_gamma(xi)^{-1} phi(xi)`,
//! moves their contribution into the data and solves the stress problem.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use rayon::prelude::*;

use crate::compat;
use crate::config::{Mode, PhysicalConfig};
use crate::error::{Error, Result};
use crate::grid::norms::{hnorm_sq, slab_norm_sq, NormTag};
use crate::grid::{Discretization, HField, VField};
use crate::random::{band_limited, slab_field, Profile};
use crate::symbols::{MeshPolicy, SymbolTable};
use crate::vertical_bvp::{apply_operator, Convention, FrequencyProblem, StressData, VerticalSolution};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative tolerance of the overdetermined consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Data `(g, f, k, h)`: divergence, force, stress jumps `k[l][comp]` and
/// normal traces.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTuple {
    pub g: VField,
    pub f: VField,
    pub k: Vec<Vec<HField>>,
    pub h: Vec<HField>,
}

impl DataTuple {
    pub fn zeros(disc: &Discretization, m: usize) -> Self {
        let n = disc.torus.n;
        let nf = disc.nfreq();
        DataTuple {
            g: VField::zeros_on(disc, 1),
            f: VField::zeros_on(disc, n),
            k: vec![vec![HField::zeros(nf, true); n]; m],
            h: vec![HField::zeros(nf, true); m],
        }
    }

    /// Random real data with matching zero modes.
    pub fn random<R: Rng>(disc: &Discretization, rng: &mut R, radius: f64) -> Self {
        let n = disc.torus.n;
        let m = disc.mesh.m();
        let g = slab_field(disc, rng, 1, radius, Profile::Piecewise);
        let f = slab_field(disc, rng, n, radius, Profile::Piecewise);
        let k = (0..m).map(|_| (0..n).map(|_| band_limited(&disc.torus, rng, radius, true)).collect()).collect();
        let h = (0..m)
            .map(|l| {
                let mut h = band_limited(&disc.torus, rng, radius, false);
                h.coef[0] = disc.mesh.integrate_to_interface(g.profile(0, 0), l);
                h
            })
            .collect();
        DataTuple { g, f, k, h }
    }

    pub fn is_real(&self) -> bool {
        self.g.real && self.f.real && self.k.iter().flatten().all(|k| k.real) && self.h.iter().all(|h| h.real)
    }

    /// Stress data and normal traces at lattice index `i`.
    pub fn at(&self, i: usize) -> (StressData, Vec<C64>) {
        let n = self.f.ncomp;
        let sd = StressData {
            g: self.g.profile(i, 0).to_vec(),
            f: (0..n).map(|c| self.f.profile(i, c).to_vec()).collect(),
            k: self.k.iter().map(|kl| kl.iter().map(|k| k.coef[i]).collect()).collect(),
        };
        (sd, self.h.iter().map(|h| h.coef[i]).collect())
    }

    fn set_at(&mut self, i: usize, sd: &StressData, h: &[C64]) {
        self.g.profile_mut(i, 0).copy_from_slice(&sd.g);
        for (c, f) in sd.f.iter().enumerate() {
            self.f.profile_mut(i, c).copy_from_slice(f);
        }
        for (kl, v) in self.k.iter_mut().zip(&sd.k) {
            for (k, x) in kl.iter_mut().zip(v) {
                k.coef[i] = *x;
            }
        }
        for (hl, x) in self.h.iter_mut().zip(h) {
            hl.coef[i] = *x;
        }
    }

    pub fn axpy(&self, a: f64, o: &DataTuple) -> Self {
        DataTuple {
            g: self.g.axpy(a, &o.g),
            f: self.f.axpy(a, &o.f),
            k: self.k.iter().zip(&o.k).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.axpy(a, q)).collect()).collect(),
            h: self.h.iter().zip(&o.h).map(|(x, y)| x.axpy(a, y)).collect(),
        }
    }

    pub fn sub(&self, o: &DataTuple) -> Self {
        self.axpy(-1.0, o)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.axpy(a - 1.0, self)
    }

    pub fn max_abs(&self) -> f64 {
        let k = self.k.iter().flatten().chain(&self.h).map(HField::max_abs).fold(0.0, f64::max);
        self.g.max_abs().max(self.f.max_abs()).max(k)
    }

    /// Largest `|h_l(0) - int_0^{a_l} g(0)|`.
    pub fn zero_mode_defect(&self, disc: &Discretization) -> f64 {
        let g0 = self.g.profile(0, 0);
        self.h
            .iter()
            .enumerate()
            .map(|(l, h)| (h.coef[0] - disc.mesh.integrate_to_interface(g0, l)).norm())
            .fold(0.0, f64::max)
    }

    /// The data norm of regularity `s`: g in H^{1+s}, f in H^s, k in
    /// H^{1/2+s}, h in H^{3/2+s}, and `h_l - int_0^{a_l} g` in homogeneous
    /// H^{-1} with its zero mode dropped.
    pub fn y_norm(&self, disc: &Discretization, s: f64) -> f64 {
        let t = &disc.torus;
        let mut total = slab_norm_sq(disc, &self.g, NormTag::Hs(1.0 + s)).expect("slab tag")
            + slab_norm_sq(disc, &self.f, NormTag::Hs(s)).expect("slab tag");
        for k in self.k.iter().flatten() {
            total += hnorm_sq(t, k, NormTag::Hs(0.5 + s)).expect("horizontal tag");
        }
        for (l, h) in self.h.iter().enumerate() {
            total += hnorm_sq(t, h, NormTag::Hs(1.5 + s)).expect("horizontal tag");
            let mut defect = h.clone();
            for (i, c) in defect.coef.iter_mut().enumerate() {
                *c -= disc.mesh.integrate_to_interface(self.g.profile(i, 0), l);
            }
            defect.coef[0] = ZERO;
            total += hnorm_sq(t, &defect, NormTag::HdotMinus1).expect("zero mode cleared");
        }
        total.sqrt()
    }
}

/// Solution `(p, u, eta)` on the flattened domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatState {
    pub p: VField,
    pub u: VField,
    pub eta: Vec<HField>,
    pub mode: Mode,
}

impl FlatState {
    pub fn zeros(disc: &Discretization, m: usize, mode: Mode) -> Self {
        FlatState {
            p: VField::zeros_on(disc, 1),
            u: VField::zeros_on(disc, disc.torus.n),
            eta: vec![HField::zeros(disc.nfreq(), true); m],
            mode,
        }
    }

    /// Random real state: smooth pressure, velocity continuous and zero at
    /// the bottom, zero-mean surfaces.
    pub fn random<R: Rng>(disc: &Discretization, rng: &mut R, radius: f64, mode: Mode) -> Self {
        let m = disc.mesh.m();
        FlatState {
            p: slab_field(disc, rng, 1, radius, Profile::Piecewise),
            u: slab_field(disc, rng, disc.torus.n, radius, Profile::Clamped),
            eta: (0..m).map(|_| band_limited(&disc.torus, rng, radius, false)).collect(),
            mode,
        }
    }

    pub fn axpy(&self, a: f64, o: &FlatState) -> Self {
        FlatState {
            p: self.p.axpy(a, &o.p),
            u: self.u.axpy(a, &o.u),
            eta: self.eta.iter().zip(&o.eta).map(|(x, y)| x.axpy(a, y)).collect(),
            mode: self.mode,
        }
    }

    pub fn sub(&self, o: &FlatState) -> Self {
        self.axpy(-1.0, o)
    }

    pub fn scale(&self, a: f64) -> Self {
        self.axpy(a - 1.0, self)
    }

    pub fn max_abs(&self) -> f64 {
        let e = self.eta.iter().map(HField::max_abs).fold(0.0, f64::max);
        self.p.max_abs().max(self.u.max_abs()).max(e)
    }

    /// `q = p + g sum_l [rho]_l eta_l 1_{(0,a_l)}` with surface tension, `p` without.
    pub fn q(&self, config: &PhysicalConfig, disc: &Discretization) -> VField {
        match self.mode {
            Mode::SurfaceTension => shift_pressure(config, disc, &self.p, &self.eta, 1.0),
            Mode::ZeroSurfaceTension => self.p.clone(),
        }
    }

    /// The state norm of regularity `s`: q in H^{1+s}, u in H^{2+s}, eta in
    /// the anisotropic space of order 5/2+s.
    pub fn x_norm(&self, config: &PhysicalConfig, disc: &Discretization, s: f64) -> f64 {
        let mut total = slab_norm_sq(disc, &self.q(config, disc), NormTag::Hs(1.0 + s)).expect("slab tag")
            + slab_norm_sq(disc, &self.u, NormTag::Hs(2.0 + s)).expect("slab tag");
        for e in &self.eta {
            total += hnorm_sq(&disc.torus, e, NormTag::CalH(2.5 + s)).expect("horizontal tag");
        }
        total.sqrt()
    }

    /// Largest `|eta_l|` over the physical grid.
    pub fn eta_sup(&self, disc: &Discretization) -> f64 {
        self.eta
            .iter()
            .map(|e| disc.torus.coefficients_to_samples(&e.coef).into_iter().map(f64::abs).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// Whether the surfaces satisfy the quarter-gap bound on the grid.
    pub fn admissible(&self, config: &PhysicalConfig, disc: &Discretization) -> bool {
        self.eta_sup(disc) <= 0.25 * config.min_gap()
    }
}

/// `p + sign g sum_l [rho]_l eta_l 1_{(0,a_l)}`.
fn shift_pressure(config: &PhysicalConfig, disc: &Discretization, p: &VField, eta: &[HField], sign: f64) -> VField {
    let layers = disc.mesh.node_layers();
    let mut out = p.clone();
    for i in 0..p.nfreq() {
        let prof = out.profile_mut(i, 0);
        for (l, e) in eta.iter().enumerate() {
            let a = sign * config.gravity * config.rho_jump(l) * e.coef[i];
            for (x, &lay) in prof.iter_mut().zip(&layers) {
                if lay <= l {
                    *x += a;
                }
            }
        }
    }
    out
}

/// Lattice indices solved for data of the given reality: one member of each
/// conjugate pair and no Nyquist modes for real data.
pub fn solved_indices(disc: &Discretization, real: bool) -> Vec<usize> {
    let t = &disc.torus;
    (0..disc.nfreq()).filter(|&i| !real || !(t.is_nyquist(i) || t.partner(i) < i)).collect()
}

/// Forward map of the linearized system, frequency by frequency.
pub fn forward(config: &PhysicalConfig, disc: &Discretization, state: &FlatState) -> DataTuple {
    let n = config.n;
    let m = config.m();
    let nn = disc.nnodes();
    let real = state.p.real && state.u.real && state.eta.iter().all(|e| e.real);
    let rows: Vec<(StressData, Vec<C64>)> = (0..disc.nfreq())
        .into_par_iter()
        .map(|i| {
            let xi = disc.torus.xi(i);
            let fp = FrequencyProblem::new(xi, config, &disc.mesh, Convention::Stress);
            let sol = VerticalSolution {
                p: state.p.profile(i, 0).to_vec(),
                u: (0..n).map(|c| state.u.profile(i, c).to_vec()).collect(),
            };
            let mut sd = apply_operator(&fp, &sol);
            let o = crate::symbols::capillary(config, xi, state.mode);
            let mut h = sol.normal_traces(&disc.mesh);
            for l in 0..m {
                let e = state.eta[l].coef[i];
                sd.k[l][n - 1] += o[l] * e;
                h[l] += C64::new(0.0, 2.0 * PI * config.gamma * xi[0]) * e;
            }
            (sd, h)
        })
        .collect();
    let mut out = DataTuple::zeros(disc, m);
    for (i, (sd, h)) in rows.iter().enumerate() {
        debug_assert_eq!(sd.g.len(), nn);
        out.set_at(i, sd, h);
    }
    for v in [&mut out.g, &mut out.f] {
        v.real = real;
    }
    for h in out.k.iter_mut().flatten().chain(out.h.iter_mut()) {
        h.real = real;
    }
    out
}

/// Diagnostics of one inverse solve.
#[derive(Debug, Clone, Copy)]
pub struct InverseReport {
    /// Largest `|phi_k(0)|` before it was cleared.
    pub phi_zero_mode: f64,
    /// H^{3/2} norm of the trace mismatch relative to the data norm.
    pub consistency: f64,
    pub data_norm: f64,
    pub eta_sup: f64,
    /// Quarter-gap bound satisfied by the recovered surfaces.
    pub admissible: bool,
}

/// Inverse of the linearized system on a fixed field mesh; owns the symbol
/// table and its dual profiles.
pub struct LinearSolver {
    config: PhysicalConfig,
    disc: Discretization,
    mode: Mode,
    table: SymbolTable,
}

impl LinearSolver {
    pub fn new(config: &PhysicalConfig, disc: &Discretization, mode: Mode) -> Result<Self> {
        config.validate()?;
        config.validate_mode(mode)?;
        if config.gamma == 0.0 {
            return Err(Error::InvalidConfig("the wave speed gamma must be nonzero".into()));
        }
        let table = SymbolTable::new(config, &disc.torus, MeshPolicy::Fixed(disc.mesh.clone()), mode)?;
        Ok(LinearSolver { config: config.clone(), disc: disc.clone(), mode, table })
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.config
    }

    pub fn disc(&self) -> &Discretization {
        &self.disc
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn forward(&self, state: &FlatState) -> DataTuple {
        forward(&self.config, &self.disc, &FlatState { mode: self.mode, ..state.clone() })
    }

    /// Solves for the state; fails when the zero modes are incompatible or
    /// the recovered traces miss the modified data.
    pub fn inverse(&self, data: &DataTuple) -> Result<(FlatState, InverseReport)> {
        self.inverse_against(data, 0.0)
    }

    /// [`Self::inverse`] with the trace mismatch judged against
    /// `max(norm(data), reference)`; used when `data` is a small difference of
    /// quantities of size `reference` and carries their rounding errors.
    pub fn inverse_against(&self, data: &DataTuple, reference: f64) -> Result<(FlatState, InverseReport)> {
        let cfg = &self.config;
        let disc = &self.disc;
        let n = cfg.n;
        let m = cfg.m();
        let meas = compat::measure(&self.table, disc, data, 0.0)?;
        let real = data.is_real();
        let layers = disc.mesh.node_layers();
        let idx = solved_indices(disc, real);
        let solved: Vec<(usize, VerticalSolution, Vec<C64>, Vec<C64>)> = idx
            .par_iter()
            .map(|&i| {
                let xi = disc.torus.xi(i);
                let phi: Vec<C64> = meas.phi.iter().map(|p| p.coef[i]).collect();
                let eta: Vec<C64> = match &self.table.entry(i)?.p.inverse {
                    Some(pinv) => (0..m).map(|r| (0..m).map(|c| pinv[(r, c)] * phi[c]).sum()).collect(),
                    None => vec![ZERO; m],
                };
                let (mut sd, mut h) = data.at(i);
                let lap = -4.0 * PI * PI * (xi[0] * xi[0] + xi[1] * xi[1]);
                for l in 0..m {
                    let grav = cfg.gravity * cfg.rho_jump(l) * eta[l];
                    match self.mode {
                        Mode::SurfaceTension => {
                            for c in 0..n - 1 {
                                let gx = C64::new(0.0, 2.0 * PI * xi[c]) * grav;
                                for (x, &lay) in sd.f[c].iter_mut().zip(&layers) {
                                    if lay <= l {
                                        *x += gx;
                                    }
                                }
                            }
                            sd.k[l][n - 1] += cfg.sigma[l] * lap * eta[l];
                        }
                        Mode::ZeroSurfaceTension => sd.k[l][n - 1] += grav,
                    }
                    h[l] -= C64::new(0.0, 2.0 * PI * cfg.gamma * xi[0]) * eta[l];
                }
                let fp = FrequencyProblem::new(xi, cfg, &disc.mesh, Convention::Stress);
                let sol = fp.factor()?.solve(&sd);
                let defect: Vec<C64> = sol.normal_traces(&disc.mesh).iter().zip(&h).map(|(a, b)| a - b).collect();
                Ok((i, sol, eta, defect))
            })
            .collect::<Result<_>>()?;

        let mut state = FlatState::zeros(disc, m, self.mode);
        let mut defect = vec![HField::zeros(disc.nfreq(), real); m];
        state.p.real = real;
        state.u.real = real;
        for e in &mut state.eta {
            e.real = real;
        }
        for (i, sol, eta, def) in solved {
            let mirror = real && disc.torus.partner(i) != i;
            let j = disc.torus.partner(i);
            state.p.profile_mut(i, 0).copy_from_slice(&sol.p);
            for c in 0..n {
                state.u.profile_mut(i, c).copy_from_slice(&sol.u[c]);
            }
            if mirror {
                let pc: Vec<C64> = sol.p.iter().map(|x| x.conj()).collect();
                state.p.profile_mut(j, 0).copy_from_slice(&pc);
                for c in 0..n {
                    let uc: Vec<C64> = sol.u[c].iter().map(|x| x.conj()).collect();
                    state.u.profile_mut(j, c).copy_from_slice(&uc);
                }
            }
            for l in 0..m {
                state.eta[l].coef[i] = eta[l];
                defect[l].coef[i] = def[l];
                if mirror {
                    state.eta[l].coef[j] = eta[l].conj();
                    defect[l].coef[j] = def[l].conj();
                }
            }
        }
        if self.mode == Mode::SurfaceTension {
            state.p = shift_pressure(cfg, disc, &state.p, &state.eta, -1.0);
        }
        let data_norm = data.y_norm(disc, 0.0);
        let mismatch: f64 = defect.iter().map(|d| hnorm_sq(&disc.torus, d, NormTag::Hs(1.5)).expect("tag")).sum();
        let scale = data_norm.max(reference);
        let consistency = if scale > 0.0 { mismatch.sqrt() / scale } else { mismatch.sqrt() };
        if !(consistency <= CONSISTENCY_TOL) {
            return Err(Error::Consistency { residual: consistency });
        }
        let eta_sup = state.eta_sup(disc);
        let report = InverseReport {
            phi_zero_mode: meas.zero_mode,
            consistency,
            data_norm,
            eta_sup,
            admissible: eta_sup <= 0.25 * cfg.min_gap(),
        };
        Ok((state, report))
    }
}
