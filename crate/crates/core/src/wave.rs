//! Small-amplitude nonlinear traveling waves.
//!
//! The flattened system is evaluated pseudo-spectrally: every product and
//! quotient is formed pointwise on the 3/2-padded horizontal grid at each
//! vertical node and projected back onto the lattice. The solver runs the
//! frozen Picard iteration `x <- x - L^{-1}(Xi(x) - target)` with the linear
//! inverse built once at the flat state.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::compat::data_scale;
use crate::config::PhysicalConfig;
use crate::error::{Error, Result};
use crate::geometry::{mean_curvature, unflatten_height, DepthProfile, GeometryFields, SurfaceTuple};
use crate::grid::{Discretization, HField, TorusGrid, VField};
use crate::linear::{DataTuple, FlatState, LinearSolver};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn node_coef(v: &VField, c: usize, j: usize) -> Vec<C64> {
    (0..v.nfreq()).map(|f| v.data[(f * v.ncomp + c) * v.nnodes + j]).collect()
}

fn set_node(v: &mut VField, c: usize, j: usize, coef: &[C64]) {
    for (f, x) in coef.iter().enumerate() {
        v.data[(f * v.ncomp + c) * v.nnodes + j] = *x;
    }
}

/// Forcing `(f, T_l)` scaled by `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSpec {
    /// Bulk force on the flattened slab (`n` components), if any.
    pub bulk: Option<VField>,
    /// Symmetric stress on each interface, `n * n` entries row-major; empty
    /// when the interface is unloaded.
    pub stress: Vec<Vec<HField>>,
    pub epsilon: f64,
}

impl ForcingSpec {
    pub fn none(m: usize) -> Self {
        ForcingSpec { bulk: None, stress: vec![Vec::new(); m], epsilon: 0.0 }
    }

    /// Pressure `phi` applied on interface `l`, i.e. `T_l = -phi I`.
    pub fn pressure(n: usize, m: usize, l: usize, phi: &HField, epsilon: f64) -> Self {
        let mut s = ForcingSpec::none(m);
        let zero = HField::zeros(phi.len(), true);
        s.stress[l] = (0..n * n).map(|e| if e / n == e % n { phi.scale(-1.0) } else { zero.clone() }).collect();
        s.epsilon = epsilon;
        s
    }

    /// Pressure `amplitude exp(-d^2 / (2 width^2))` on the top interface, `d`
    /// the periodic distance to `center`.
    pub fn gaussian_bump(disc: &Discretization, m: usize, center: [f64; 2], width: f64, amplitude: f64, epsilon: f64) -> Result<Self> {
        let t = &disc.torus;
        let samples: Vec<f64> = (0..t.npoints())
            .map(|j| {
                let x = t.point(j);
                let d2: f64 = (0..t.hdim())
                    .map(|k| {
                        let d = (x[k] - center[k]).rem_euclid(t.period);
                        let d = d.min(t.period - d);
                        d * d
                    })
                    .sum();
                amplitude * (-0.5 * d2 / (width * width)).exp()
            })
            .collect();
        let mut phi = HField::from_samples(t, &samples)?;
        phi.zero_nyquist(t);
        Ok(Self::pressure(t.n, m, m - 1, &phi, epsilon))
    }

    /// Pressure `amplitude cos(2 pi k.x / L)` on the top interface.
    pub fn mode_k(disc: &Discretization, m: usize, k: [i64; 2], amplitude: f64, epsilon: f64) -> Result<Self> {
        let t = &disc.torus;
        let idx = t.index_of(k).ok_or_else(|| Error::InvalidConfig(format!("wavenumber {k:?} not on the lattice")))?;
        let jdx = t.partner(idx);
        if t.is_nyquist(idx) {
            return Err(Error::InvalidConfig(format!("wavenumber {k:?} is a Nyquist mode")));
        }
        let mut phi = HField::zeros(t.nfreq(), true);
        phi.coef[idx] += C64::new(0.5 * amplitude, 0.0);
        phi.coef[jdx] += C64::new(0.5 * amplitude, 0.0);
        Ok(Self::pressure(t.n, m, m - 1, &phi, epsilon))
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        ForcingSpec { epsilon, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.epsilon == 0.0
            || (self.bulk.as_ref().is_none_or(|f| f.max_abs() == 0.0)
                && self.stress.iter().flatten().all(|h| h.max_abs() == 0.0))
    }

    /// Horizontal shift of every forcing field.
    pub fn translate(&self, torus: &TorusGrid, dx: [f64; 2]) -> Self {
        let bulk = self.bulk.as_ref().map(|f| {
            let mut out = f.clone();
            for c in 0..f.ncomp {
                for j in 0..f.nnodes {
                    set_node(&mut out, c, j, &HField { coef: node_coef(f, c, j), real: f.real }.translate(torus, dx).coef);
                }
            }
            out
        });
        let stress = self.stress.iter().map(|t| t.iter().map(|h| h.translate(torus, dx)).collect()).collect();
        ForcingSpec { bulk, stress, epsilon: self.epsilon }
    }

    /// The linear data `(0, eps f, eps T_l e_n, 0)`.
    pub fn target(&self, disc: &Discretization, n: usize) -> DataTuple {
        let m = self.stress.len();
        let mut d = DataTuple::zeros(disc, m);
        if let Some(f) = &self.bulk {
            d.f = f.scale(self.epsilon);
        }
        for (l, t) in self.stress.iter().enumerate() {
            if !t.is_empty() {
                for i in 0..n {
                    d.k[l][i] = t[i * n + n - 1].scale(self.epsilon);
                }
            }
        }
        d
    }

    fn check(&self, disc: &Discretization, n: usize, m: usize) -> Result<()> {
        if self.stress.len() != m || self.stress.iter().any(|t| !t.is_empty() && t.len() != n * n) {
            return Err(Error::Shape("forcing needs m interface stresses of n x n entries".into()));
        }
        if let Some(f) = &self.bulk {
            if f.ncomp != n || f.nnodes != disc.nnodes() || f.nfreq() != disc.nfreq() {
                return Err(Error::Shape("bulk force does not match the discretization".into()));
            }
        }
        let t = &disc.torus;
        let real = self.stress.iter().flatten().all(|h| h.real && h.symmetry_defect(t) <= 1e-12 * h.max_abs().max(1e-300))
            && self.bulk.as_ref().is_none_or(|f| f.real);
        if !real {
            return Err(Error::InvalidConfig("forcing fields must be real".into()));
        }
        for t_l in self.stress.iter().filter(|t| !t.is_empty()) {
            for i in 0..n {
                for k in 0..i {
                    if t_l[i * n + k].sub(&t_l[k * n + i]).max_abs() > 0.0 {
                        return Err(Error::InvalidConfig("interface stresses must be symmetric".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Diagnostics of one residual evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidualReport {
    /// Largest `|h_l(0) - int_0^{a_l} g(0)|`; zero up to rounding by the
    /// nonlinear divergence identity.
    pub zero_mode_defect: f64,
    /// Scale of the residual data against which the defect is judged.
    pub scale: f64,
}

/// `Xi(state) - target`.
pub fn residual(config: &PhysicalConfig, disc: &Discretization, forcing: &ForcingSpec, state: &FlatState) -> Result<(DataTuple, ResidualReport)> {
    let n = config.n;
    let m = config.m();
    let hd = n - 1;
    forcing.check(disc, n, m)?;
    let bound = 0.25 * config.min_gap();
    let max_eta = state.eta_sup(disc);
    if !(max_eta <= bound) {
        return Err(Error::LeftTrustRegion { max_eta, bound });
    }
    let t = &disc.torus;
    let mesh = &disc.mesh;
    let profile = DepthProfile::new(config.depths.clone())?;
    let geo = GeometryFields::new(&profile, &SurfaceTuple::new(*t, state.eta.clone()), true)?;
    let ys = mesh.nodes();
    let layers = mesh.node_layers();
    let nn = disc.nnodes();
    let np = geo.npoints;
    let du: Vec<VField> = (0..n).map(|k| if k < hd { state.u.dx(t, k) } else { state.u.dy(mesh) }).collect();

    // divergence row, advection and the stress tensor at every node
    let stage1: Vec<(Vec<C64>, Vec<Vec<C64>>, Vec<Vec<C64>>)> = (0..nn)
        .into_par_iter()
        .map(|j| {
            let (l, y) = (layers[j], ys[j]);
            let pad = |v: &VField, c: usize| t.to_padded(&node_coef(v, c, j));
            let u: Vec<Vec<f64>> = (0..n).map(|c| pad(&state.u, c)).collect();
            let g: Vec<Vec<Vec<f64>>> = (0..n).map(|i| (0..n).map(|k| pad(&du[k], i)).collect()).collect();
            let p = pad(&state.p, 0);
            let (rho, mu) = (config.rho[l], config.mu[l]);
            let mut div = vec![0.0; np];
            let mut adv = vec![vec![0.0; np]; n];
            let mut s = vec![vec![0.0; np]; n * n];
            for q in 0..np {
                let a = geo.a_matrix(l, q, y);
                let mut ga = [[0.0; 3]; 3];
                for i in 0..n {
                    for k in 0..n {
                        ga[i][k] = (0..n).map(|c| g[i][c][q] * a[k][c]).sum();
                    }
                }
                div[q] = geo.jac[l][q] * (0..n).map(|i| ga[i][i]).sum::<f64>();
                for i in 0..n {
                    adv[i][q] = rho * (0..n).map(|k| (u[k][q] - if k == 0 { config.gamma } else { 0.0 }) * ga[i][k]).sum::<f64>();
                    for k in 0..n {
                        let pk = if i == k { p[q] } else { 0.0 };
                        s[i * n + k][q] = pk - mu * (ga[i][k] + ga[k][i]);
                    }
                }
            }
            (
                t.from_padded(&div),
                adv.iter().map(|v| t.from_padded(v)).collect(),
                s.iter().map(|v| t.from_padded(v)).collect(),
            )
        })
        .collect();

    let mut out = DataTuple::zeros(disc, m);
    let mut stress = VField::zeros_on(disc, n * n);
    for (j, (div, _, s)) in stage1.iter().enumerate() {
        set_node(&mut out.g, 0, j, div);
        for (e, se) in s.iter().enumerate() {
            set_node(&mut stress, e, j, se);
        }
    }

    // momentum: horizontal divergence spectrally, vertical terms through A
    let s_dy = stress.dy(mesh);
    let s_dx: Vec<VField> = (0..hd).map(|k| stress.dx(t, k)).collect();
    let stage2: Vec<Vec<Vec<C64>>> = (0..nn)
        .into_par_iter()
        .map(|j| {
            let (l, y) = (layers[j], ys[j]);
            let ds: Vec<Vec<f64>> = (0..n * n).map(|e| t.to_padded(&node_coef(&s_dy, e, j))).collect();
            (0..n)
                .map(|i| {
                    let corr: Vec<f64> = (0..np)
                        .map(|q| {
                            let jac = geo.jac[l][q];
                            let b = geo.blend_grad(l, q, y);
                            let mut v = ds[i * n + n - 1][q] / jac;
                            for k in 0..hd {
                                v -= b[k] / jac * ds[i * n + k][q];
                            }
                            v
                        })
                        .collect();
                    let mut c = t.from_padded(&corr);
                    let h: Vec<C64> = (0..hd).fold(vec![ZERO; c.len()], |acc, k| {
                        acc.iter().zip(node_coef(&s_dx[k], i * n + k, j)).map(|(a, b)| a + b).collect()
                    });
                    for (x, (hv, av)) in c.iter_mut().zip(h.iter().zip(&stage1[j].1[i])) {
                        *x += hv + av;
                    }
                    c
                })
                .collect()
        })
        .collect();
    for (j, rows) in stage2.iter().enumerate() {
        for (i, r) in rows.iter().enumerate() {
            set_node(&mut out.f, i, j, r);
        }
    }
    if let Some(f) = &forcing.bulk {
        out.f = out.f.axpy(-forcing.epsilon, f);
        out.f.zero_nyquist(t);
    }

    // interface rows
    let eps = forcing.epsilon;
    for l in 0..m {
        let below = mesh.layer_top(l);
        let above = (l + 1 < m).then(|| mesh.layer_bottom(l + 1));
        let pad_s = |j: usize| -> Vec<Vec<f64>> { (0..n * n).map(|e| t.to_padded(&stage1[j].2[e])).collect() };
        let sb = pad_s(below);
        let sa = above.map(pad_s);
        let curv = if config.sigma[l] != 0.0 { Some(t.to_padded(&mean_curvature(t, &state.eta[l]).coef)) } else { None };
        let tl: Vec<Vec<f64>> = forcing.stress[l].iter().map(|h| t.to_padded(&h.coef)).collect();
        let u_top: Vec<Vec<f64>> = (0..n).map(|c| t.to_padded(&node_coef(&state.u, c, below))).collect();
        let mut k = vec![vec![0.0; np]; n];
        let mut kin = vec![0.0; np];
        for q in 0..np {
            let nrm = geo.normal(l, q);
            let mut load = config.gravity * config.rho_jump(l) * geo.eta[l][q];
            if let Some(h) = &curv {
                load += config.sigma[l] * h[q];
            }
            for i in 0..n {
                let mut v = -load * nrm[i];
                for c in 0..n {
                    let jump = sa.as_ref().map_or(0.0, |s| s[i * n + c][q]) - sb[i * n + c][q];
                    v += jump * nrm[c];
                    if !tl.is_empty() {
                        v -= eps * tl[i * n + c][q] * nrm[c];
                    }
                }
                k[i][q] = v;
            }
            kin[q] = (0..n).map(|c| u_top[c][q] * nrm[c]).sum();
        }
        for i in 0..n {
            out.k[l][i] = HField { coef: t.from_padded(&k[i]), real: true };
        }
        let transport = state.eta[l].derivative(t, 0).scale(config.gamma);
        out.h[l] = transport.add(&HField { coef: t.from_padded(&kin), real: true });
    }
    let report = ResidualReport { zero_mode_defect: out.zero_mode_defect(disc), scale: data_scale(disc, &out) };
    Ok((out, report))
}

/// Replaces `h_l(0)` by `int_0^{a_l} g(0)`.
fn enforce_zero_modes(disc: &Discretization, data: &mut DataTuple) {
    let g0 = data.g.profile(0, 0).to_vec();
    for (l, h) in data.h.iter_mut().enumerate() {
        h.coef[0] = disc.mesh.integrate_to_interface(&g0, l);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
    /// Regularity index of the reported norms.
    pub s: f64,
}

impl Default for WaveOptions {
    fn default() -> Self {
        WaveOptions { rtol: 1e-9, atol: 1e-13, max_iter: 50, s: 0.0 }
    }
}

/// State of the iteration after one residual evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub state_norm: f64,
    pub eta_sup: f64,
    /// Quarter gap minus `eta_sup`.
    pub margin: f64,
    /// Residual over the previous residual.
    pub ratio: Option<f64>,
    pub zero_mode_defect: f64,
    /// Consistency residual of the linear solve that produced this state.
    pub consistency: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationReport {
    pub forcing_norm: f64,
    pub tolerance: f64,
    pub quarter_gap: f64,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub verdict: String,
}

impl IterationReport {
    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual)
    }

    /// Number of linear solves performed.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Largest ratio of consecutive residuals.
    pub fn worst_ratio(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }
}

/// Failure of [`solve_wave`] with the iterations recorded so far.
#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct WaveFailure {
    pub error: Error,
    pub report: IterationReport,
}

/// Frozen Picard iteration from the flat state.
pub fn solve_wave(solver: &LinearSolver, forcing: &ForcingSpec, options: &WaveOptions) -> std::result::Result<(FlatState, IterationReport), WaveFailure> {
    let cfg = solver.config();
    let disc = solver.disc();
    let m = cfg.m();
    let forcing_norm = forcing.target(disc, cfg.n).y_norm(disc, options.s);
    let tolerance = options.rtol * forcing_norm + options.atol;
    let mut report = IterationReport {
        forcing_norm,
        tolerance,
        quarter_gap: 0.25 * cfg.min_gap(),
        records: Vec::new(),
        converged: false,
        verdict: String::new(),
    };
    let fail = |error: Error, mut report: IterationReport| {
        report.verdict = error.to_string();
        Err(WaveFailure { error, report })
    };
    let mut x = FlatState::zeros(disc, m, solver.mode());
    let mut consistency = None;
    let mut growth = 0;
    for it in 0..=options.max_iter {
        let (mut r, rr) = match residual(cfg, disc, forcing, &x) {
            Ok(v) => v,
            Err(e) => return fail(e, report),
        };
        let norm = r.y_norm(disc, options.s);
        let eta_sup = x.eta_sup(disc);
        let ratio = report.records.last().map(|p| norm / p.residual);
        report.records.push(IterationRecord {
            iteration: it,
            residual: norm,
            state_norm: x.x_norm(cfg, disc, options.s),
            eta_sup,
            margin: report.quarter_gap - eta_sup,
            ratio,
            zero_mode_defect: rr.zero_mode_defect,
            consistency,
        });
        if norm <= tolerance {
            report.converged = true;
            report.verdict = format!("converged after {it} iterations");
            return Ok((x, report));
        }
        if ratio.is_some_and(|q| q > 1.0) {
            growth += 1;
            if growth >= 3 {
                return fail(Error::NonConvergence(format!("residual grew over 3 consecutive iterations at iteration {it}")), report);
            }
        } else {
            growth = 0;
        }
        if it == options.max_iter {
            break;
        }
        enforce_zero_modes(disc, &mut r);
        let (dx, ir) = match solver.inverse_against(&r, forcing_norm) {
            Ok(v) => v,
            Err(e) => return fail(e, report),
        };
        consistency = Some(ir.consistency);
        x = x.sub(&dx);
    }
    fail(Error::NonConvergence(format!("no convergence within {} iterations", options.max_iter)), report)
}

/// Eulerian velocity and pressure at one point of the perturbed domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerianPoint {
    pub x: [f64; 2],
    pub y: f64,
    pub layer: usize,
    pub v: [f64; 3],
    pub q: f64,
}

/// Evaluates `v = u o F^{-1}` and `q = p o F^{-1}` at arbitrary points.
pub struct Unflattener<'a> {
    disc: &'a Discretization,
    state: &'a FlatState,
    profile: DepthProfile,
    surf: SurfaceTuple,
}

impl<'a> Unflattener<'a> {
    pub fn new(config: &PhysicalConfig, disc: &'a Discretization, state: &'a FlatState) -> Result<Self> {
        let profile = DepthProfile::new(config.depths.clone())?;
        let surf = SurfaceTuple::new(disc.torus, state.eta.clone());
        surf.check_admissible(&profile)?;
        Ok(Unflattener { disc, state, profile, surf })
    }

    pub fn surfaces(&self) -> &SurfaceTuple {
        &self.surf
    }

    /// Perturbed interface heights `a_l + eta_l(x)`.
    pub fn interface_heights(&self, x: [f64; 2]) -> Vec<f64> {
        self.surf.heights_at(x).iter().enumerate().map(|(l, h)| self.profile.upper(l) + h).collect()
    }

    /// Evaluation using the map of layer `l`, so points on an interface can
    /// be approached from either side.
    pub fn eval_in_layer(&self, l: usize, x: [f64; 2], y: f64) -> Result<EulerianPoint> {
        let heights = self.surf.heights_at(x);
        let y0 = unflatten_height(&self.profile, &heights, l, y)?;
        let mesh = &self.disc.mesh;
        let panels = mesh.layer_panels(l);
        let p = panels
            .clone()
            .find(|&p| y0 <= mesh.panels()[p].hi)
            .unwrap_or(panels.end - 1);
        let ph = self.disc.torus.phases(x);
        let range = mesh.range(p);
        let column = |v: &VField, c: usize| -> f64 {
            let nodes: Vec<C64> = range
                .clone()
                .map(|j| (0..v.nfreq()).map(|f| v.data[(f * v.ncomp + c) * v.nnodes + j] * ph[f]).sum())
                .collect();
            let row = mesh.interp_row(p, y0);
            row.iter().zip(&nodes).map(|(r, z)| z.re * r).sum()
        };
        let mut v = [0.0; 3];
        for (c, vc) in v.iter_mut().enumerate().take(self.state.u.ncomp) {
            *vc = column(&self.state.u, c);
        }
        Ok(EulerianPoint { x, y, layer: l, v, q: column(&self.state.p, 0) })
    }

    /// Evaluation at a point of the perturbed domain; interface points use
    /// the lower layer.
    pub fn eval(&self, x: [f64; 2], y: f64) -> Result<EulerianPoint> {
        let tops = self.interface_heights(x);
        let tol = 1e-12 * tops.last().unwrap().abs().max(1.0);
        let outside = || Error::OutsideDomain { x: x[..self.disc.hdim()].to_vec(), y };
        if y < -tol {
            return Err(outside());
        }
        let l = tops.iter().position(|&top| y <= top + tol).ok_or_else(outside)?;
        self.eval_in_layer(l, x, y)
    }

    pub fn sample(&self, points: &[([f64; 2], f64)]) -> Result<Vec<EulerianPoint>> {
        points.par_iter().map(|&(x, y)| self.eval(x, y)).collect()
    }

    /// Finite-difference residual of `rho (v - gamma e_1).grad v + grad q -
    /// mu Lap v - F` at an interior point, with central differences of step
    /// `h` and the bulk force taken from `forcing` through the flattening.
    pub fn momentum_residual(&self, config: &PhysicalConfig, forcing: &ForcingSpec, x: [f64; 2], y: f64, h: f64) -> Result<[f64; 3]> {
        let n = config.n;
        let c = self.eval(x, y)?;
        let l = c.layer;
        let (rho, mu) = (config.rho[l], config.mu[l]);
        let mut grad = [[0.0; 3]; 3];
        let mut lap = [0.0; 3];
        let mut gq = [0.0; 3];
        for k in 0..n {
            let shift = |s: f64| -> Result<EulerianPoint> {
                if k < n - 1 {
                    let mut xs = x;
                    xs[k] += s;
                    self.eval_in_layer(l, xs, y)
                } else {
                    self.eval_in_layer(l, x, y + s)
                }
            };
            let (a, b) = (shift(h)?, shift(-h)?);
            for i in 0..n {
                grad[i][k] = (a.v[i] - b.v[i]) / (2.0 * h);
                lap[i] += (a.v[i] - 2.0 * c.v[i] + b.v[i]) / (h * h);
            }
            gq[k] = (a.q - b.q) / (2.0 * h);
        }
        let bulk = match &forcing.bulk {
            Some(f) => {
                let st = FlatState { u: f.clone(), ..self.state.clone() };
                let ev = Unflattener { state: &st, surf: self.surf.clone(), profile: self.profile.clone(), disc: self.disc };
                ev.eval_in_layer(l, x, y)?.v.map(|v| forcing.epsilon * v)
            }
            None => [0.0; 3],
        };
        let mut r = [0.0; 3];
        for i in 0..n {
            let adv: f64 = (0..n).map(|k| (c.v[k] - if k == 0 { config.gamma } else { 0.0 }) * grad[i][k]).sum();
            r[i] = rho * adv + gq[i] - mu * lap[i] - bulk[i];
        }
        Ok(r)
    }
}

/// Eulerian samples of a flattened state at the given points.
pub fn unflatten(config: &PhysicalConfig, disc: &Discretization, state: &FlatState, points: &[([f64; 2], f64)]) -> Result<Vec<EulerianPoint>> {
    Unflattener::new(config, disc, state)?.sample(points)
}

/// Largest surface amplitude in the horizontal L^2 sense, `(sum_l int eta_l^2)^{1/2}`.
pub fn surface_l2(disc: &Discretization, eta: &[HField]) -> f64 {
    let v = disc.torus.volume();
    eta.iter().flat_map(|e| e.coef.iter()).map(|c| c.norm_sqr() * v).sum::<f64>().sqrt()
}
