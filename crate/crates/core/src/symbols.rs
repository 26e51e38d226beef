//! The normal-stress to normal-velocity symbol `n_gamma(xi)`, the capillary
//! matrix `o(xi)` and the free-surface symbol
//! `p_gamma(xi) = n_{-gamma}(xi) o(xi) - 2 pi i gamma xi_1 I`.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, PhysicalConfig};
use crate::error::{Error, Result};
use crate::grid::{TorusGrid, VerticalMesh};
use crate::vertical_bvp::{
    mesh_cutoff, normal_stress_data, policy_mesh, trusted_cutoff, Convention, FrequencyProblem, VerticalSolution,
};

/// Condition number of `p_gamma` above which it counts as singular.
pub const P_CONDITION_LIMIT: f64 = 1e12;

/// `min(|xi|^2, |xi|^{-1})`, the scale of `n_gamma`.
pub fn n_scale(r: f64) -> f64 {
    (r * r).min(1.0 / r)
}

/// How the vertical mesh is chosen per frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshPolicy {
    /// Degree from [`crate::vertical_bvp::degree_policy`]; frequencies beyond
    /// the trusted cutoff use the fitted `1/|xi|` tail.
    Adaptive,
    /// One mesh for every frequency, as used by the field solvers.
    Fixed(VerticalMesh),
}

fn xi_abs(n: usize, xi: [f64; 2]) -> f64 {
    if n == 2 {
        xi[0].abs()
    } else {
        xi[0].hypot(xi[1])
    }
}

/// Normal traces of the normal-stress solutions with unit loads, together
/// with the solutions themselves (the dual profiles).
pub fn dual_solutions(config: &PhysicalConfig, xi: [f64; 2], mesh: &VerticalMesh) -> Result<(DMatrix<C64>, Vec<VerticalSolution>)> {
    let m = config.m();
    let fp = FrequencyProblem::new(xi, config, mesh, Convention::NormalStress);
    let lu = fp.factor()?;
    let data: Vec<_> = (0..m)
        .map(|k| {
            let mut psi = vec![C64::new(0.0, 0.0); m];
            psi[k] = C64::new(1.0, 0.0);
            normal_stress_data(config.n, mesh.nnodes(), &psi)
        })
        .collect();
    let sols = lu.solve_many(&data);
    let mut nmat = DMatrix::zeros(m, m);
    if xi_abs(config.n, xi) > 0.0 {
        for (k, s) in sols.iter().enumerate() {
            for (l, t) in s.normal_traces(mesh).into_iter().enumerate() {
                nmat[(l, k)] = t;
            }
        }
    }
    Ok((nmat, sols))
}

/// `n_gamma(xi)` on a given mesh.
pub fn compute_n_on(config: &PhysicalConfig, xi: [f64; 2], mesh: &VerticalMesh) -> Result<DMatrix<C64>> {
    dual_solutions(config, xi, mesh).map(|(n, _)| n)
}

/// `n_gamma(xi)` on the adaptive mesh; fails beyond the trusted cutoff.
pub fn compute_n(config: &PhysicalConfig, xi: [f64; 2]) -> Result<DMatrix<C64>> {
    let r = xi_abs(config.n, xi);
    let cutoff = trusted_cutoff(config);
    if r > cutoff {
        return Err(Error::Untrusted { xi_abs: r, cutoff });
    }
    compute_n_on(config, xi, &policy_mesh(config, xi))
}

/// Diagonal of `o(xi)`: `-g [rho]_l + 4 pi^2 |xi|^2 sigma_l`, or `-g [rho]_l`
/// without surface tension.
pub fn capillary(config: &PhysicalConfig, xi: [f64; 2], mode: Mode) -> Vec<f64> {
    let r2 = xi_abs(config.n, xi).powi(2);
    (0..config.m())
        .map(|l| {
            let grav = -config.gravity * config.rho_jump(l);
            match mode {
                Mode::SurfaceTension => grav + 4.0 * PI * PI * r2 * config.sigma[l],
                Mode::ZeroSurfaceTension => grav,
            }
        })
        .collect()
}

/// `n_minus * diag(o) - 2 pi i gamma xi_1 I`.
pub fn assemble_p(n_minus: &DMatrix<C64>, o: &[f64], gamma: f64, xi1: f64) -> DMatrix<C64> {
    let m = o.len();
    let mut p = n_minus * DMatrix::from_diagonal(&DVector::from_iterator(m, o.iter().map(|&v| C64::new(v, 0.0))));
    for l in 0..m {
        p[(l, l)] -= C64::new(0.0, 2.0 * PI * gamma * xi1);
    }
    p
}

/// 2-norm condition number of a small matrix.
pub fn condition_number(a: &DMatrix<C64>) -> f64 {
    let sv = a.clone().singular_values();
    let big = sv.max();
    let small = sv.min();
    if small == 0.0 {
        f64::INFINITY
    } else {
        big / small
    }
}

/// `p_gamma(xi)` with its inverse; the inverse is absent at xi = 0.
#[derive(Debug, Clone)]
pub struct PSymbol {
    pub p: DMatrix<C64>,
    pub inverse: Option<DMatrix<C64>>,
    pub condition: f64,
}

fn invert_p(p: DMatrix<C64>, xi: [f64; 2], n: usize) -> Result<PSymbol> {
    if xi_abs(n, xi) == 0.0 {
        let m = p.nrows();
        return Ok(PSymbol { p: DMatrix::zeros(m, m), inverse: None, condition: f64::INFINITY });
    }
    let condition = condition_number(&p);
    if !(condition <= P_CONDITION_LIMIT) {
        return Err(Error::SingularSymbol { xi: xi[..n - 1].to_vec() });
    }
    let inverse = p.clone().try_inverse().ok_or(Error::SingularSymbol { xi: xi[..n - 1].to_vec() })?;
    Ok(PSymbol { p, inverse: Some(inverse), condition })
}

/// `p_gamma(xi)` from `n_{-gamma}` on the adaptive mesh.
pub fn compute_p(config: &PhysicalConfig, xi: [f64; 2], mode: Mode) -> Result<PSymbol> {
    config.validate_mode(mode)?;
    let n_minus = compute_n(&config.with_gamma(-config.gamma), xi)?;
    let p = assemble_p(&n_minus, &capillary(config, xi, mode), config.gamma, xi[0]);
    invert_p(p, xi, config.n)
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn hermitian_margin(a: &DMatrix<C64>) -> f64 {
    let h = (a + a.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().min()
}

/// Fits `n(xi) ~ C / |xi|` along the direction of `xi` on the decade below
/// the trusted cutoff, minimizing the relative misfit.
fn fitted_tail(config: &PhysicalConfig, xi: [f64; 2]) -> Result<DMatrix<C64>> {
    let r = xi_abs(config.n, xi);
    let e = [xi[0] / r, if config.n == 2 { 0.0 } else { xi[1] / r }];
    let cutoff = trusted_cutoff(config);
    let m = config.m();
    let samples = 5;
    let mut c = DMatrix::<C64>::zeros(m, m);
    for j in 0..samples {
        let rj = cutoff * 10f64.powf(-(j as f64) / (samples - 1) as f64);
        c += compute_n(config, [rj * e[0], rj * e[1]])? * C64::new(rj, 0.0);
    }
    Ok(c * C64::new(1.0 / (samples as f64 * r), 0.0))
}

/// Cached symbols at one lattice frequency.
#[derive(Debug, Clone)]
pub struct SymbolEntry {
    pub xi: [f64; 2],
    pub n_plus: DMatrix<C64>,
    pub n_minus: DMatrix<C64>,
    pub o: Vec<f64>,
    pub p: PSymbol,
    /// Normal-stress solutions with unit loads (fixed mesh only).
    pub duals: Option<Vec<VerticalSolution>>,
    /// Whether `n` comes from the fitted tail rather than a solve.
    pub tail: bool,
    /// Smallest Hermitian eigenvalue of `n_gamma` over `min(|xi|^2, |xi|^{-1})`.
    pub coercivity: f64,
}

/// Lazily filled symbol cache over a frequency lattice.
#[derive(Debug)]
pub struct SymbolTable {
    config: PhysicalConfig,
    torus: TorusGrid,
    policy: MeshPolicy,
    mode: Mode,
    hash: u64,
    entries: Vec<OnceLock<Result<SymbolEntry>>>,
}

/// FNV-1a over a byte stream.
fn fnv(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl SymbolTable {
    pub fn new(config: &PhysicalConfig, torus: &TorusGrid, policy: MeshPolicy, mode: Mode) -> Result<Self> {
        config.validate_mode(mode)?;
        if torus.n != config.n {
            return Err(Error::Shape(format!("torus dimension {} for an n = {} config", torus.n, config.n)));
        }
        if let MeshPolicy::Fixed(mesh) = &policy {
            if mesh.depths() != config.depths.as_slice() {
                return Err(Error::Shape("mesh depths differ from the configuration".into()));
            }
        }
        let mut words: Vec<f64> = vec![config.n as f64, config.gravity, config.gamma, torus.period, torus.modes as f64];
        for v in [&config.depths, &config.rho, &config.mu, &config.sigma] {
            words.extend(v.iter());
        }
        words.push(mode as u8 as f64);
        match &policy {
            MeshPolicy::Adaptive => words.push(-1.0),
            MeshPolicy::Fixed(mesh) => {
                for p in mesh.panels() {
                    words.extend([p.lo, p.hi, p.degree as f64]);
                }
            }
        }
        let hash = fnv(words.iter().flat_map(|w| w.to_le_bytes()));
        let entries = (0..torus.nfreq()).map(|_| OnceLock::new()).collect();
        Ok(SymbolTable { config: config.clone(), torus: torus.clone(), policy, mode, hash, entries })
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.config
    }

    pub fn torus(&self) -> &TorusGrid {
        &self.torus
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn policy(&self) -> &MeshPolicy {
        &self.policy
    }

    /// Hash of the configuration, lattice, mode and mesh policy.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    fn compute(&self, idx: usize) -> Result<SymbolEntry> {
        let cfg = &self.config;
        let xi = self.torus.xi(idx);
        let r = self.torus.xi_abs(idx);
        let minus = cfg.with_gamma(-cfg.gamma);
        let (n_plus, n_minus, duals, tail) = match &self.policy {
            MeshPolicy::Fixed(mesh) => {
                let cutoff = mesh_cutoff(mesh);
                if r > cutoff {
                    return Err(Error::Untrusted { xi_abs: r, cutoff });
                }
                let (np, d) = dual_solutions(cfg, xi, mesh)?;
                (np, compute_n_on(&minus, xi, mesh)?, Some(d), false)
            }
            MeshPolicy::Adaptive => {
                if r > trusted_cutoff(cfg) {
                    (fitted_tail(cfg, xi)?, fitted_tail(&minus, xi)?, None, true)
                } else {
                    (compute_n(cfg, xi)?, compute_n(&minus, xi)?, None, false)
                }
            }
        };
        let o = capillary(cfg, xi, self.mode);
        let p = invert_p(assemble_p(&n_minus, &o, cfg.gamma, xi[0]), xi, cfg.n)?;
        let coercivity = if r > 0.0 { hermitian_margin(&n_plus) / n_scale(r) } else { f64::INFINITY };
        Ok(SymbolEntry { xi, n_plus, n_minus, o, p, duals, tail, coercivity })
    }

    /// Entry at lattice index `idx`, computed on first access.
    pub fn entry(&self, idx: usize) -> Result<&SymbolEntry> {
        self.entries[idx].get_or_init(|| self.compute(idx)).as_ref().map_err(Clone::clone)
    }

    /// Computes every entry, in parallel over frequencies.
    pub fn fill(&self) -> Result<()> {
        (0..self.entries.len()).into_par_iter().try_for_each(|i| self.entry(i).map(|_| ()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// CSV with one row per lattice frequency: frequency components, real and
    /// imaginary parts of `n_gamma` and `p_gamma` (row-major), the condition
    /// number of `p_gamma` and the coercivity margin.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        self.fill()?;
        let m = self.config.m();
        let hd = self.config.n - 1;
        let io = |e: io::Error| Error::Shape(format!("write failed: {e}"));
        let mut head: Vec<String> = (1..=hd).map(|j| format!("xi_{j}")).collect();
        for name in ["n", "p"] {
            for a in 1..=m {
                for b in 1..=m {
                    head.push(format!("re_{name}_{a}{b}"));
                    head.push(format!("im_{name}_{a}{b}"));
                }
            }
        }
        head.extend(["p_condition".into(), "coercivity".into(), "tail".into()]);
        writeln!(w, "{}", head.join(",")).map_err(io)?;
        for i in 0..self.len() {
            let e = self.entry(i)?;
            let mut row: Vec<String> = e.xi[..hd].iter().map(|v| fmt17(*v)).collect();
            for mat in [&e.n_plus, &e.p.p] {
                for a in 0..m {
                    for b in 0..m {
                        row.push(fmt17(mat[(a, b)].re));
                        row.push(fmt17(mat[(a, b)].im));
                    }
                }
            }
            row.push(fmt17(e.p.condition));
            row.push(fmt17(e.coercivity));
            row.push((e.tail as u8).to_string());
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Frequency sweep for [`verify_asymptotics`].
#[derive(Debug, Clone, Serialize)]
pub struct Sweep {
    pub low: (f64, f64),
    pub high: (f64, f64),
    /// Points per range, log-spaced, endpoints included.
    pub points: usize,
    /// Unit directions of the sweep rays.
    pub directions: Vec<[f64; 2]>,
    pub slope_tolerance: f64,
}

impl Sweep {
    pub fn standard(n: usize) -> Self {
        let directions = if n == 2 { vec![[1.0, 0.0]] } else { vec![[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] };
        Sweep { low: (1e-3, 1e-2), high: (1e1, 1e2), points: 7, directions, slope_tolerance: 0.1 }
    }
}

/// One sampled frequency of an asymptotics sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepSample {
    pub xi: [f64; 2],
    pub xi_abs: f64,
    pub norm: f64,
    /// Smallest Hermitian eigenvalue over `min(|xi|^2, |xi|^{-1})`.
    pub coercivity: f64,
    /// `|n^{-1}| min(|xi|^2, |xi|^{-1})`.
    pub inverse_bound: f64,
}

/// Outcome of [`verify_asymptotics`].
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    /// Fitted log-log slope of `|n_gamma|` per direction on the low range.
    pub low_slopes: Vec<f64>,
    pub high_slopes: Vec<f64>,
    pub min_coercivity: f64,
    pub max_inverse_bound: f64,
    pub low_pass: bool,
    pub high_pass: bool,
    pub coercivity_pass: bool,
    pub samples: Vec<SweepSample>,
}

impl AsymptoticsReport {
    pub fn pass(&self) -> bool {
        self.low_pass && self.high_pass && self.coercivity_pass
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn log_space(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (k - 1).max(1) as f64).exp()).collect()
}

/// Samples `n_gamma` along each sweep ray and fits the low- and
/// high-frequency slopes of its norm.
pub fn verify_asymptotics(config: &PhysicalConfig, sweep: &Sweep) -> Result<AsymptoticsReport> {
    config.validate_shape()?;
    let cutoff = trusted_cutoff(config);
    let top = sweep.high.1.max(sweep.low.1);
    if top > cutoff {
        return Err(Error::Untrusted { xi_abs: top, cutoff });
    }
    let target = [(2.0, sweep.low), (-1.0, sweep.high)];
    let mut slopes = [Vec::new(), Vec::new()];
    let mut samples = Vec::new();
    for dir in &sweep.directions {
        let d = if config.n == 2 { [1.0, 0.0] } else { *dir };
        for (which, (_, range)) in target.iter().enumerate() {
            let rs = log_space(range.0, range.1, sweep.points);
            let results: Vec<Result<SweepSample>> = rs
                .par_iter()
                .map(|&r| {
                    let xi = [r * d[0], r * d[1]];
                    let nm = compute_n(config, xi)?;
                    let norm = nm.clone().singular_values().max();
                    let coercivity = hermitian_margin(&nm) / n_scale(r);
                    let inv = nm.try_inverse().ok_or(Error::SingularSymbol { xi: xi[..config.n - 1].to_vec() })?;
                    let inverse_bound = inv.singular_values().max() * n_scale(r);
                    Ok(SweepSample { xi, xi_abs: r, norm, coercivity, inverse_bound })
                })
                .collect();
            let chunk: Vec<SweepSample> = results.into_iter().collect::<Result<_>>()?;
            let xs: Vec<f64> = chunk.iter().map(|s| s.xi_abs.ln()).collect();
            let ys: Vec<f64> = chunk.iter().map(|s| s.norm.ln()).collect();
            slopes[which].push(fit_slope(&xs, &ys));
            samples.extend(chunk);
        }
        if config.n == 2 {
            break;
        }
    }
    let min_coercivity = samples.iter().map(|s| s.coercivity).fold(f64::INFINITY, f64::min);
    let max_inverse_bound = samples.iter().map(|s| s.inverse_bound).fold(0.0, f64::max);
    let within = |v: &[f64], t: f64| v.iter().all(|s| (s - t).abs() <= sweep.slope_tolerance);
    let [low_slopes, high_slopes] = slopes;
    Ok(AsymptoticsReport {
        low_pass: within(&low_slopes, 2.0),
        high_pass: within(&high_slopes, -1.0),
        coercivity_pass: min_coercivity > 0.0,
        low_slopes,
        high_slopes,
        min_coercivity,
        max_inverse_bound,
        samples,
    })
}
