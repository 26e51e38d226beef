//! Per-frequency two-point boundary value problems for the layered traveling
//! Stokes system.
//!
//! After a horizontal Fourier transform the unknowns `(p, u)` at a fixed
//! frequency are complex profiles in `y`. The system is rotated into the frame
//! `(e, t, e_n)` with `e = xi/|xi|`, where the longitudinal velocity `u_L`,
//! the normal velocity `w` and the pressure couple, and the transverse
//! velocity `u_T` (n = 3 only) solves a scalar problem on its own. Each panel
//! is collocated at its Chebyshev nodes; the two rows at each panel end that
//! carry the highest derivatives are replaced by continuity and stress-jump
//! rows.

mod dense;
pub mod exact;

use faer::Mat;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::config::PhysicalConfig;
use crate::error::{Error, Result};
use crate::grid::VerticalMesh;
pub(crate) use dense::DenseLu;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Largest admissible condition estimate of the equilibrated system.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Highest Chebyshev degree used by the adaptive policy.
pub const MAX_DEGREE: usize = 200;
/// Lowest degree used by the adaptive policy.
pub const MIN_DEGREE: usize = 16;

/// Sign of the advection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convention {
    /// `div S - gamma rho d_1 u = f`: the stress-data problem.
    Stress,
    /// `div S + gamma rho d_1 u = 0`: the normal-stress problem.
    NormalStress,
}

impl Convention {
    /// Coefficient `c` of the term `c rho d_1 u`.
    pub fn advection(self, gamma: f64) -> f64 {
        match self {
            Convention::Stress => -gamma,
            Convention::NormalStress => gamma,
        }
    }
}

/// One frequency of the layered problem.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyProblem<'a> {
    /// Horizontal frequency (second entry ignored when n = 2).
    pub xi: [f64; 2],
    pub config: &'a PhysicalConfig,
    pub mesh: &'a VerticalMesh,
    pub convention: Convention,
}

/// Data of the stress problem at one frequency: divergence target `g`,
/// force `f[comp]` and stress jumps `k[interface][comp]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressData {
    pub g: Vec<C64>,
    pub f: Vec<Vec<C64>>,
    pub k: Vec<Vec<C64>>,
}

impl StressData {
    pub fn zeros(n: usize, nnodes: usize, m: usize) -> Self {
        StressData { g: vec![ZERO; nnodes], f: vec![vec![ZERO; nnodes]; n], k: vec![vec![ZERO; n]; m] }
    }
}

/// Pressure and velocity profiles at one frequency, `u[comp][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalSolution {
    pub p: Vec<C64>,
    pub u: Vec<Vec<C64>>,
}

impl VerticalSolution {
    pub fn zeros(n: usize, nnodes: usize) -> Self {
        VerticalSolution { p: vec![ZERO; nnodes], u: vec![vec![ZERO; nnodes]; n] }
    }

    /// Normal velocity at the top of every layer.
    pub fn normal_traces(&self, mesh: &VerticalMesh) -> Vec<C64> {
        let w = self.u.last().expect("velocity has components");
        (0..mesh.m()).map(|l| w[mesh.layer_top(l)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.p.iter().chain(self.u.iter().flatten()).map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Chebyshev degree for a layer of thickness `h` whose profiles vary like
/// `exp(rate * y)`: the larger of `1.5 rate h` and the degree at which the
/// coefficients of `exp(rate * y)` drop below roundoff.
///
/// Chebyshev coefficients of `exp(beta x)` on [-1, 1] fall like
/// `exp(-k^2 / (2 beta))`, so degree `d` resolves `beta <= (d - 4)^2 / 74`
/// with a margin of four degrees.
pub fn degree_policy(rate: f64, h: f64) -> usize {
    let beta = 0.5 * rate * h;
    let d = (1.5 * rate * h).ceil().max((74.0 * beta).sqrt().ceil() + 4.0);
    (d as usize).clamp(MIN_DEGREE, MAX_DEGREE)
}

/// Frequency beyond which `exp(-2 pi |xi| y)` is no longer resolved to
/// roundoff by a degree-`MAX_DEGREE` panel on the thickest layer.
pub fn trusted_cutoff(config: &PhysicalConfig) -> f64 {
    let h = (0..config.m()).map(|l| config.thickness(l)).fold(0.0, f64::max);
    resolved_frequency(MAX_DEGREE, h)
}

/// Largest `|xi|` resolved by a degree-`d` panel of thickness `h`.
pub fn resolved_frequency(d: usize, h: f64) -> f64 {
    let e = d.saturating_sub(4) as f64;
    e * e / 74.0 / (PI * h)
}

/// Largest `|xi|` resolved by every panel of `mesh`.
pub fn mesh_cutoff(mesh: &VerticalMesh) -> f64 {
    mesh.panels().iter().map(|p| resolved_frequency(p.degree, p.hi - p.lo)).fold(f64::INFINITY, f64::min)
}

/// Largest decay rate `|lambda|` of the homogeneous solutions in layer `l`,
/// `lambda^2 = 4 pi^2 |xi|^2 + 2 pi i gamma rho xi_1 / mu`.
pub fn layer_rate(config: &PhysicalConfig, xi: [f64; 2], l: usize) -> f64 {
    let r = if config.n == 2 { xi[0].abs() } else { xi[0].hypot(xi[1]) };
    let k2 = (2.0 * PI * r).powi(2);
    let adv = 2.0 * PI * config.gamma * config.rho[l] * xi[0] / config.mu[l];
    k2.hypot(adv).sqrt()
}

/// One panel per layer with the adaptive degree.
pub fn policy_mesh(config: &PhysicalConfig, xi: [f64; 2]) -> VerticalMesh {
    let degrees: Vec<usize> =
        (0..config.m()).map(|l| degree_policy(layer_rate(config, xi, l), config.thickness(l))).collect();
    VerticalMesh::with_degrees(&config.depths, &degrees)
}

/// Orthonormal horizontal frame aligned with the frequency.
#[derive(Debug, Clone, Copy)]
struct Frame {
    e: [f64; 2],
    t: [f64; 2],
    /// `xi . e`; signed when n = 2.
    k: f64,
}

impl Frame {
    fn new(n: usize, xi: [f64; 2]) -> Self {
        if n == 2 {
            return Frame { e: [1.0, 0.0], t: [0.0, 1.0], k: xi[0] };
        }
        let r = xi[0].hypot(xi[1]);
        let e = if r > 0.0 { [xi[0] / r, xi[1] / r] } else { [1.0, 0.0] };
        Frame { e, t: [-e[1], e[0]], k: r }
    }

    fn project(&self, v: &[C64], hdim: usize) -> (C64, C64) {
        let mut l = ZERO;
        let mut t = ZERO;
        for i in 0..hdim {
            l += v[i] * self.e[i];
            t += v[i] * self.t[i];
        }
        (l, t)
    }
}

struct PanelOps {
    d: Vec<f64>,
    d2: Vec<f64>,
    np: usize,
    mu: f64,
    rho: f64,
    start: usize,
    /// Interface index when the panel's top is an interface (or the surface).
    interface: Option<usize>,
}

fn panel_ops(fp: &FrequencyProblem) -> Vec<PanelOps> {
    let mesh = fp.mesh;
    let mut out = Vec::with_capacity(mesh.panels().len());
    for (p, panel) in mesh.panels().iter().enumerate() {
        let b = mesh.basis(p);
        let s = panel.scale();
        let l = panel.layer;
        let last_of_layer = mesh.layer_panels(l).end == p + 1;
        out.push(PanelOps {
            d: b.diff.iter().map(|x| x * s).collect(),
            d2: b.diff2.iter().map(|x| x * s * s).collect(),
            np: panel.len(),
            mu: fp.config.mu[l],
            rho: fp.config.rho[l],
            start: mesh.range(p).start,
            interface: last_of_layer.then_some(l),
        });
    }
    out
}

/// LU factors of the collocation system at one frequency.
pub struct Factorization {
    n: usize,
    m: usize,
    nnodes: usize,
    frame: Frame,
    lt: DenseLu,
    tr: Option<DenseLu>,
    ops_meta: Vec<(usize, usize, Option<usize>)>,
    condition: f64,
}

impl<'a> FrequencyProblem<'a> {
    pub fn new(xi: [f64; 2], config: &'a PhysicalConfig, mesh: &'a VerticalMesh, convention: Convention) -> Self {
        FrequencyProblem { xi, config, mesh, convention }
    }

    fn kappa(&self) -> f64 {
        let n = self.config.n;
        let r = if n == 2 { self.xi[0].abs() } else { self.xi[0].hypot(self.xi[1]) };
        2.0 * PI * r
    }

    fn adv(&self, rho: f64) -> C64 {
        C64::new(0.0, self.convention.advection(self.config.gamma) * 2.0 * PI * self.xi[0] * rho)
    }

    /// Assembles, equilibrates and factors the collocation system.
    pub fn factor(&self) -> Result<Factorization> {
        let n = self.config.n;
        let frame = Frame::new(n, self.xi);
        let ops = panel_ops(self);
        let nn = self.mesh.nnodes();
        let kap2 = self.kappa().powi(2);
        let ik = C64::new(0.0, 2.0 * PI * frame.k);

        // Unknown layout: panel-major, then (u_L, w, p) blocks of the panel's nodes.
        let col = |p: usize, var: usize, i: usize| 3 * ops[p].start + var * ops[p].np + i;
        let size = 3 * nn;
        let mut a = Mat::<C64>::zeros(size, size);
        for (p, op) in ops.iter().enumerate() {
            let np = op.np;
            let mu = op.mu;
            let adv = self.adv(op.rho);
            for i in 0..np {
                let (rl, rn, rd) = (col(p, 0, i), col(p, 1, i), col(p, 2, i));
                for j in 0..np {
                    let dij = op.d[i * np + j];
                    let d2ij = op.d2[i * np + j];
                    a[(rl, col(p, 0, j))] += C64::new(-mu * d2ij, 0.0);
                    a[(rl, col(p, 1, j))] += -mu * ik * dij;
                    a[(rn, col(p, 1, j))] += C64::new(-2.0 * mu * d2ij, 0.0);
                    a[(rn, col(p, 0, j))] += -mu * ik * dij;
                    a[(rn, col(p, 2, j))] += C64::new(dij, 0.0);
                    a[(rd, col(p, 1, j))] += C64::new(dij, 0.0);
                }
                a[(rl, col(p, 0, i))] += mu * kap2 - mu * ik * ik + adv;
                a[(rl, col(p, 2, i))] += ik;
                a[(rn, col(p, 1, i))] += mu * kap2 + adv;
                a[(rd, col(p, 0, i))] += ik;
            }
        }
        let clear = |a: &mut Mat<C64>, r: usize| {
            for j in 0..size {
                a[(r, j)] = ZERO;
            }
        };
        for (p, op) in ops.iter().enumerate() {
            let last = op.np - 1;
            // Bottom node: continuity of u_L and w (no slip at y = 0).
            for (var, row) in [(0usize, col(p, 0, 0)), (1, col(p, 2, 0))] {
                clear(&mut a, row);
                a[(row, col(p, var, 0))] = C64::new(1.0, 0.0);
                if p > 0 {
                    a[(row, col(p - 1, var, ops[p - 1].np - 1))] = C64::new(-1.0, 0.0);
                }
            }
            // Top node: jumps of tangential and normal stress.
            let (rt, rn) = (col(p, 0, last), col(p, 1, last));
            clear(&mut a, rt);
            clear(&mut a, rn);
            let stress = |a: &mut Mat<C64>, q: usize, i: usize, sign: f64| {
                let oq = &ops[q];
                for j in 0..oq.np {
                    let dij = oq.d[i * oq.np + j];
                    a[(rt, col(q, 0, j))] += C64::new(-sign * oq.mu * dij, 0.0);
                    a[(rn, col(q, 1, j))] += C64::new(-2.0 * sign * oq.mu * dij, 0.0);
                }
                a[(rt, col(q, 1, i))] += -sign * oq.mu * ik;
                a[(rn, col(q, 2, i))] += C64::new(sign, 0.0);
            };
            if p + 1 < ops.len() {
                stress(&mut a, p + 1, 0, 1.0);
            }
            stress(&mut a, p, last, -1.0);
        }
        let lt = DenseLu::new(a);
        let mut condition = lt.condition_estimate();

        let tr = if n == 3 {
            let mut b = Mat::<C64>::zeros(nn, nn);
            for op in &ops {
                let np = op.np;
                let adv = self.adv(op.rho);
                for i in 0..np {
                    for j in 0..np {
                        b[(op.start + i, op.start + j)] += C64::new(-op.mu * op.d2[i * np + j], 0.0);
                    }
                    b[(op.start + i, op.start + i)] += op.mu * kap2 + adv;
                }
            }
            for (p, op) in ops.iter().enumerate() {
                let r0 = op.start;
                for j in 0..nn {
                    b[(r0, j)] = ZERO;
                }
                b[(r0, r0)] = C64::new(1.0, 0.0);
                if p > 0 {
                    b[(r0, r0 - 1)] = C64::new(-1.0, 0.0);
                }
                let rt = op.start + op.np - 1;
                for j in 0..nn {
                    b[(rt, j)] = ZERO;
                }
                let mut add = |q: usize, i: usize, sign: f64| {
                    let oq = &ops[q];
                    for j in 0..oq.np {
                        b[(rt, oq.start + j)] += C64::new(-sign * oq.mu * oq.d[i * oq.np + j], 0.0);
                    }
                };
                if p + 1 < ops.len() {
                    add(p + 1, 0, 1.0);
                }
                add(p, op.np - 1, -1.0);
            }
            let lu = DenseLu::new(b);
            condition = condition.max(lu.condition_estimate());
            Some(lu)
        } else {
            None
        };

        if !(condition <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned { xi: self.xi[..n - 1].to_vec(), estimate: condition });
        }
        Ok(Factorization {
            n,
            m: self.mesh.m(),
            nnodes: nn,
            frame,
            lt,
            tr,
            ops_meta: ops.iter().map(|o| (o.start, o.np, o.interface)).collect(),
            condition,
        })
    }
}

impl Factorization {
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn nnodes(&self) -> usize {
        self.nnodes
    }

    /// Solves for several data sets sharing the factorization.
    pub fn solve_many(&self, data: &[StressData]) -> Vec<VerticalSolution> {
        let n = self.n;
        let hd = n - 1;
        let fr = self.frame;
        let mut rhs_lt = Vec::with_capacity(data.len());
        let mut rhs_t = Vec::with_capacity(data.len());
        for d in data {
            let mut r = vec![ZERO; 3 * self.nnodes];
            let mut rt = vec![ZERO; self.nnodes];
            let mut fh = vec![ZERO; hd];
            for &(start, np, iface) in &self.ops_meta {
                let base = 3 * start;
                for i in 0..np {
                    for c in 0..hd {
                        fh[c] = d.f[c][start + i];
                    }
                    let (fl, ft) = fr.project(&fh, hd);
                    r[base + i] = fl;
                    r[base + np + i] = d.f[n - 1][start + i];
                    r[base + 2 * np + i] = d.g[start + i];
                    rt[start + i] = ft;
                }
                // replaced rows
                r[base] = ZERO;
                r[base + 2 * np] = ZERO;
                rt[start] = ZERO;
                let (kl, kt, kn) = match iface {
                    Some(l) => {
                        let (kl, kt) = fr.project(&d.k[l][..hd], hd);
                        (kl, kt, d.k[l][n - 1])
                    }
                    None => (ZERO, ZERO, ZERO),
                };
                r[base + np - 1] = kl;
                r[base + 2 * np - 1] = kn;
                rt[start + np - 1] = kt;
            }
            rhs_lt.push(r);
            rhs_t.push(rt);
        }
        let x = self.lt.solve_columns(&rhs_lt);
        let xt = self.tr.as_ref().map(|lu| lu.solve_columns(&rhs_t));
        let mut out = Vec::with_capacity(data.len());
        for (s, xs) in x.iter().enumerate() {
            let mut sol = VerticalSolution::zeros(n, self.nnodes);
            for &(start, np, _) in &self.ops_meta {
                let base = 3 * start;
                for i in 0..np {
                    let ul = xs[base + i];
                    let ut = xt.as_ref().map(|v| v[s][start + i]).unwrap_or(ZERO);
                    for c in 0..hd {
                        sol.u[c][start + i] = ul * fr.e[c] + ut * fr.t[c];
                    }
                    sol.u[n - 1][start + i] = xs[base + np + i];
                    sol.p[start + i] = xs[base + 2 * np + i];
                }
            }
            out.push(sol);
        }
        debug_assert!(out.iter().all(|s| s.u.len() == n) && self.m > 0);
        out
    }

    pub fn solve(&self, data: &StressData) -> VerticalSolution {
        self.solve_many(std::slice::from_ref(data)).pop().unwrap()
    }
}

/// Solves the stress-data problem at one frequency.
pub fn solve_stress_problem(fp: &FrequencyProblem, data: &StressData) -> Result<VerticalSolution> {
    Ok(fp.factor()?.solve(data))
}

/// Stress data `psi_l e_n` on interface `l`, zero force and divergence.
pub fn normal_stress_data(n: usize, nnodes: usize, psi: &[C64]) -> StressData {
    let mut d = StressData::zeros(n, nnodes, psi.len());
    for (l, &v) in psi.iter().enumerate() {
        d.k[l][n - 1] = v;
    }
    d
}

/// Solves the normal-stress problem with interface loads `psi`.
pub fn solve_normal_stress(fp: &FrequencyProblem, psi: &[C64]) -> Result<VerticalSolution> {
    if fp.convention != Convention::NormalStress {
        return Err(Error::InvalidConfig("the normal-stress problem uses the +gamma convention".into()));
    }
    if psi.len() != fp.mesh.m() {
        return Err(Error::Shape(format!("{} loads for {} interfaces", psi.len(), fp.mesh.m())));
    }
    solve_stress_problem(fp, &normal_stress_data(fp.config.n, fp.mesh.nnodes(), psi))
}

/// Applies the operator in Cartesian components: bulk rows at every node and
/// stress jumps `[S e_n]` at every interface. This is the forward map of the
/// stress problem.
pub fn apply_operator(fp: &FrequencyProblem, sol: &VerticalSolution) -> StressData {
    let n = fp.config.n;
    let hd = n - 1;
    let mesh = fp.mesh;
    let nn = mesh.nnodes();
    let tp = 2.0 * PI;
    let kap2 = fp.kappa().powi(2);
    let layers = mesh.node_layers();
    let ixi: Vec<C64> = (0..hd).map(|j| C64::new(0.0, tp * fp.xi[j])).collect();

    let du: Vec<Vec<C64>> = sol.u.iter().map(|u| mesh.diff(u)).collect();
    let d2u: Vec<Vec<C64>> = sol.u.iter().map(|u| mesh.diff2(u)).collect();
    let dp = mesh.diff(&sol.p);
    let mut div = du[n - 1].clone();
    for (j, x) in ixi.iter().enumerate() {
        for (d, u) in div.iter_mut().zip(&sol.u[j]) {
            *d += x * u;
        }
    }
    let ddiv = mesh.diff(&div);

    let mut out = StressData::zeros(n, nn, mesh.m());
    out.g = div.clone();
    for i in 0..nn {
        let l = layers[i];
        let mu = fp.config.mu[l];
        let adv = fp.adv(fp.config.rho[l]);
        for c in 0..n {
            let lap = d2u[c][i] - sol.u[c][i] * kap2;
            let (grad_p, grad_div) = if c < hd { (ixi[c] * sol.p[i], ixi[c] * div[i]) } else { (dp[i], ddiv[i]) };
            out.f[c][i] = grad_p - mu * lap - mu * grad_div + adv * sol.u[c][i];
        }
    }
    let traction = |i: usize| -> Vec<C64> {
        let mu = fp.config.mu[layers[i]];
        let mut t: Vec<C64> = (0..hd).map(|c| -mu * (du[c][i] + ixi[c] * sol.u[n - 1][i])).collect();
        t.push(sol.p[i] - 2.0 * mu * du[n - 1][i]);
        t
    };
    for l in 0..mesh.m() {
        let below = traction(mesh.layer_top(l));
        let above = if l + 1 < mesh.m() { traction(mesh.layer_bottom(l + 1)) } else { vec![ZERO; n] };
        out.k[l] = above.iter().zip(&below).map(|(a, b)| a - b).collect();
    }
    out
}

/// `sum_l int (mu_l/2) Dw : conj(Dv) + c rho_l d_1 w . conj(v)` over the
/// vertical column at this frequency, `c` from the problem's convention.
pub fn energy_form(fp: &FrequencyProblem, w: &VerticalSolution, v: &VerticalSolution) -> C64 {
    let n = fp.config.n;
    let mesh = fp.mesh;
    let tp = 2.0 * PI;
    let sym = |u: &[Vec<C64>]| -> Vec<Vec<Vec<C64>>> {
        let du: Vec<Vec<C64>> = u.iter().map(|x| mesh.diff(x)).collect();
        let d = |i: usize, j: usize| -> Vec<C64> {
            if j == n - 1 {
                du[i].clone()
            } else {
                u[i].iter().map(|x| x * C64::new(0.0, tp * fp.xi[j])).collect()
            }
        };
        (0..n)
            .map(|i| (0..n).map(|j| d(i, j).iter().zip(&d(j, i)).map(|(a, b)| a + b).collect()).collect())
            .collect()
    };
    let sw = sym(&w.u);
    let sv = sym(&v.u);
    let c = fp.convention.advection(fp.config.gamma);
    let cfg = fp.config;
    let mut s = ZERO;
    for i in 0..n {
        for j in 0..n {
            for (l, v) in mesh.inner_by_layer(&sw[i][j], &sv[i][j]).into_iter().enumerate() {
                s += 0.5 * cfg.mu[l] * v;
            }
        }
        let ad = C64::new(0.0, c * tp * fp.xi[0]);
        for (l, v) in mesh.inner_by_layer(&w.u[i], &v.u[i]).into_iter().enumerate() {
            s += ad * cfg.rho[l] * v;
        }
    }
    s
}

#[cfg(test)]
mod tests;
