//! The `verify` subcommand: seeded property checks grouped by module.

use std::f64::consts::PI;

use clap::ValueEnum;
use rand::Rng;
use serde::Serialize;
use stwave::compat::measure;
use stwave::divtools::{divergence, multi_trace_solve, normal_traces, reflection_mesh, TraceDivergenceData};
use stwave::geometry::{flatten_map, mean_curvature, unflatten_map, DepthProfile, GeometryFields, SurfaceTuple};
use stwave::grid::norms::{hnorm, slab_norm, NormTag};
use stwave::linear::{forward, LinearSolver, CONSISTENCY_TOL};
use stwave::random::{band_limited, seeded, slab_field, Profile, SeededRng};
use stwave::symbols::{compute_n, verify_asymptotics, MeshPolicy, Sweep, SymbolTable};
use stwave::vertical_bvp::{exact, Convention};
use stwave::wave::{solve_wave, ForcingSpec, Unflattener, WaveOptions};
use stwave::{DataTuple, Discretization, FlatState, HField, Mode, PhysicalConfig, Result, TorusGrid};

use crate::commands::Run;
use crate::io::{self, Manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Geometry,
    Divtools,
    Symbols,
    Compat,
    Linear,
    Wave,
    All,
}

impl Suite {
    const EACH: [Suite; 6] = [Suite::Geometry, Suite::Divtools, Suite::Symbols, Suite::Compat, Suite::Linear, Suite::Wave];

    fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Divtools => "divtools",
            Suite::Symbols => "symbols",
            Suite::Compat => "compat",
            Suite::Linear => "linear",
            Suite::Wave => "wave",
            Suite::All => "all",
        }
    }

    /// Per-suite stream so a suite sees the same numbers alone or inside `all`.
    fn rng(self, seed: u64) -> SeededRng {
        let k = Suite::EACH.iter().position(|s| *s == self).unwrap_or(0) as u64;
        seeded(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(k))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">"`.
    pub relation: &'static str,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: "<=", threshold, pass: value <= threshold, error: None }
    }

    fn above(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, relation: ">", threshold, pass: value > threshold, error: None }
    }

    fn failed(name: &str, e: stwave::Error) -> Self {
        Check { name: name.into(), value: f64::NAN, relation: "<=", threshold: f64::NAN, pass: false, error: Some(e.to_string()) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub selector: &'static str,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteResult>,
}

/// Collects checks; a failing computation becomes a failed check.
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, c: Check) {
        self.0.push(c);
    }

    fn run(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.0.push(Check::failed(name, e));
        }
    }
}

fn torus_for(n: usize, p2: (f64, usize), p3: (f64, usize)) -> Result<TorusGrid> {
    if n == 2 {
        TorusGrid::new(2, p2.0, p2.1)
    } else {
        TorusGrid::new(3, p3.0, p3.1)
    }
}

fn geometry(cfg: &PhysicalConfig, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let profile = DepthProfile::new(cfg.depths.clone())?;
    let t = torus_for(cfg.n, (4.0, 32), (4.0, 16))?;
    let eta: Vec<HField> = (0..cfg.m())
        .map(|_| {
            let h = band_limited(&t, rng, 0.8, false);
            let sup = h.to_samples(&t).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            h.scale(0.5 * profile.quarter_gap() / sup)
        })
        .collect();
    let s = SurfaceTuple::new(t, eta);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let x = [rng.gen_range(0.0..t.period), rng.gen_range(0.0..t.period)];
        let l = rng.gen_range(0..cfg.m());
        let y = profile.lower(l) + rng.gen_range(0.0..1.0) * profile.thickness(l);
        let (_, z) = flatten_map(&profile, &s, l, x, y)?;
        worst = worst.max((unflatten_map(&profile, &s, l, x, z)?.1 - y).abs());
    }
    c.push(Check::at_most("flattening_inverse_error", worst, 1e-12));

    let g = GeometryFields::new(&profile, &s, true)?;
    let mut worst = 0.0f64;
    for p in (0..g.npoints).step_by(11) {
        for l in 0..cfg.m() {
            for frac in [0.0, 0.4, 1.0] {
                let y = profile.lower(l) + frac * profile.thickness(l);
                let (f, a) = (g.grad_map(l, p, y), g.a_matrix(l, p, y));
                for i in 0..3 {
                    for k in 0..3 {
                        let v: f64 = (0..3).map(|j| a[i][j] * f[k][j]).sum();
                        let id = if i == k && i < cfg.n { 1.0 } else { 0.0 };
                        worst = worst.max((v - id).abs());
                    }
                }
                let det = (0..cfg.n).map(|i| f[i][i]).product::<f64>();
                worst = worst.max((det - g.jac[l][p]).abs());
            }
        }
    }
    c.push(Check::at_most("geometry_matrix_identity_error", worst, 1e-12));

    let (period, amp) = (2.0 * PI, 0.3);
    let t1 = TorusGrid::new(2, period, 64)?;
    let samples: Vec<f64> = (0..t1.npoints()).map(|j| amp * t1.point(j)[0].sin()).collect();
    let h = mean_curvature(&t1, &HField::from_samples(&t1, &samples)?).to_samples(&t1);
    let err = (0..t1.npoints())
        .map(|j| {
            let x = t1.point(j)[0];
            let (d1, d2) = (amp * x.cos(), -amp * x.sin());
            (h[j] - d2 / (1.0 + d1 * d1).powf(1.5)).abs()
        })
        .fold(0.0, f64::max);
    c.push(Check::at_most("curvature_sine_closed_form_error", err, 1e-10));

    let e = band_limited(&t, rng, 1.0, false);
    let lap = e.laplacian(&t);
    let lin = mean_curvature(&t, &e.scale(1e-5)).scale(1e5).sub(&lap).max_abs() / lap.max_abs();
    c.push(Check::at_most("curvature_linearization_error", lin, 1e-6));
    Ok(())
}

fn divtools(cfg: &PhysicalConfig, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let t = torus_for(cfg.n, (6.0, 24), (4.0, 12))?;
    let d = Discretization::new(t, reflection_mesh(&cfg.depths, 20));
    let m = cfg.m();
    let mut worst = [0.0f64; 3];
    for _ in 0..3 {
        let f = slab_field(&d, rng, 1, 2.0, Profile::Piecewise);
        let g = (0..m)
            .map(|l| {
                let mut h = band_limited(&d.torus, rng, 2.0, false);
                h.coef[0] = d.mesh.integrate_to_interface(f.profile(0, 0), l);
                h
            })
            .collect();
        let data = TraceDivergenceData { f, g };
        let u = multi_trace_solve(&d, &data)?;
        let tr = normal_traces(&d, &u).iter().zip(&data.g).map(|(a, b)| a.sub(b).max_abs()).fold(0.0, f64::max);
        let bottom = (0..u.ncomp).map(|k| u.node_field(k, 0).max_abs()).fold(0.0, f64::max);
        let div = divergence(&d, &u).sub(&data.f).max_abs();
        for (w, v) in worst.iter_mut().zip([div, tr, bottom]) {
            *w = w.max(v);
        }
    }
    c.push(Check::at_most("divergence_residual", worst[0], 1e-10));
    c.push(Check::at_most("trace_residual", worst[1], 1e-10));
    c.push(Check::at_most("bottom_trace", worst[2], 1e-14));

    let mut ratio = 0.0f64;
    for _ in 0..5 {
        let u = slab_field(&d, rng, cfg.n, 2.0, Profile::Clamped);
        let f = divergence(&d, &u);
        let l2 = slab_norm(&d, &u, NormTag::L2)?;
        let mut lhs = 0.0;
        for (l, g) in normal_traces(&d, &u).iter().enumerate() {
            let mut defect = g.clone();
            for fr in 0..d.nfreq() {
                defect.coef[fr] -= d.mesh.integrate_to_interface(f.profile(fr, 0), l);
            }
            lhs += hnorm(&d.torus, &defect, NormTag::HdotMinus1)?;
        }
        let rhs = 2.0 * PI * cfg.depths.iter().map(|a| a.sqrt()).sum::<f64>() * l2;
        ratio = ratio.max(lhs / rhs);
    }
    c.push(Check::at_most("compatibility_estimate_ratio", ratio, 1.0));
    Ok(())
}

fn random_xi(n: usize, rng: &mut SeededRng, lo: f64, hi: f64) -> [f64; 2] {
    let r = (lo.ln() + rng.gen_range(0.0..1.0) * (hi.ln() - lo.ln())).exp();
    let th = if n == 2 { 0.0 } else { rng.gen_range(0.0..2.0 * PI) };
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    [sign * r * th.cos(), r * th.sin()]
}

fn symbols(cfg: &PhysicalConfig, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let sweep = Sweep::standard(cfg.n);
    let rep = verify_asymptotics(cfg, &sweep)?;
    let dev = |v: &[f64], t: f64| v.iter().map(|s| (s - t).abs()).fold(0.0, f64::max);
    c.push(Check::at_most("low_slope_deviation", dev(&rep.low_slopes, 2.0), sweep.slope_tolerance));
    c.push(Check::at_most("high_slope_deviation", dev(&rep.high_slopes, -1.0), sweep.slope_tolerance));
    c.push(Check::above("min_coercivity", rep.min_coercivity, 0.0));
    let rev = cfg.with_gamma(-cfg.gamma);
    let (mut adj, mut orc) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let xi = random_xi(cfg.n, rng, 1e-2, 30.0);
        let a = compute_n(cfg, xi)?;
        let b = compute_n(&rev, xi)?;
        adj = adj.max((a.adjoint() - &b).norm() / a.norm());
        let e = exact::normal_stress_symbol(cfg, xi, Convention::NormalStress)?;
        orc = orc.max((&a - &e).norm() / e.norm());
    }
    c.push(Check::at_most("adjoint_identity_error", adj, 1e-8));
    c.push(Check::at_most("exponential_oracle_error", orc, 1e-9));
    Ok(())
}

fn field_setup(cfg: &PhysicalConfig) -> Result<Discretization> {
    Ok(Discretization::layered(torus_for(cfg.n, (8.0, 32), (4.0, 8))?, &cfg.depths, 32))
}

fn compat(cfg: &PhysicalConfig, mode: Mode, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let disc = field_setup(cfg)?;
    let table = SymbolTable::new(cfg, &disc.torus, MeshPolicy::Fixed(disc.mesh.clone()), mode)?;
    let mut worst = 0.0f64;
    let mut last = None;
    for _ in 0..3 {
        let mut x = FlatState::random(&disc, rng, 2.0, mode);
        x.eta.iter_mut().for_each(|e| *e = HField::zeros(disc.nfreq(), true));
        let data = forward(cfg, &disc, &x);
        worst = worst.max(measure(&table, &disc, &data, 0.0)?.regular / data.y_norm(&disc, 0.0));
        last = Some(data);
    }
    c.push(Check::at_most("range_measure_relative", worst, 1e-8));
    let mut data = last.expect("three samples");
    let top = cfg.m() - 1;
    // perturbation of size 1e-3 relative to the data, measured in the trace norm
    let delta = band_limited(&disc.torus, rng, 2.0, false);
    let size = 1e-3 * data.y_norm(&disc, 0.0) / hnorm(&disc.torus, &delta, NormTag::Hs(1.5))?;
    data.h[top] = data.h[top].add(&delta.scale(size));
    let rel = measure(&table, &disc, &data, 0.0)?.regular / data.y_norm(&disc, 0.0);
    c.push(Check::above("perturbed_measure_relative", rel, 1e-5));
    Ok(())
}

fn linear(cfg: &PhysicalConfig, mode: Mode, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let disc = field_setup(cfg)?;
    let s = LinearSolver::new(cfg, &disc, mode)?;
    let (mut st, mut dt, mut cons) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..3 {
        let x = FlatState::random(&disc, rng, 2.0, mode);
        let (y, rep) = s.inverse(&s.forward(&x))?;
        st = st.max(y.sub(&x).x_norm(cfg, &disc, 0.0) / x.x_norm(cfg, &disc, 0.0));
        cons = cons.max(rep.consistency);
        let d = DataTuple::random(&disc, rng, 2.0);
        let (z, rep) = s.inverse(&d)?;
        dt = dt.max(s.forward(&z).sub(&d).y_norm(&disc, 0.0) / d.y_norm(&disc, 0.0));
        cons = cons.max(rep.consistency);
    }
    c.push(Check::at_most("inverse_forward_relative", st, 1e-8));
    c.push(Check::at_most("forward_inverse_relative", dt, 1e-8));
    c.push(Check::at_most("consistency", cons, CONSISTENCY_TOL));
    Ok(())
}

fn wave(cfg: &PhysicalConfig, mode: Mode, rng: &mut SeededRng, c: &mut Checks) -> Result<()> {
    let t = torus_for(cfg.n, (16.0, 32), (8.0, 8))?;
    let disc = Discretization::layered(t, &cfg.depths, 32);
    let s = LinearSolver::new(cfg, &disc, mode)?;
    let f = ForcingSpec::gaussian_bump(&disc, cfg.m(), [0.5 * t.period, 0.5 * t.period], 1.0, 1.0, 1e-2)?;
    let (x, rep) = solve_wave(&s, &f, &WaveOptions::default()).map_err(|e| e.error)?;
    c.push(Check::at_most("relative_residual", rep.final_residual() / rep.forcing_norm, 1e-9));
    c.push(Check::at_most("worst_contraction_ratio", rep.worst_ratio().unwrap_or(0.0), 0.9));
    let margin = rep.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    c.push(Check::above("quarter_gap_margin", margin, 0.0));
    let ev = Unflattener::new(cfg, &disc, &x)?;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let xp = [rng.gen_range(0.0..t.period), if cfg.n == 3 { rng.gen_range(0.0..t.period) } else { 0.0 }];
        let l = rng.gen_range(0..cfg.m());
        let tops = ev.interface_heights(xp);
        let bot = if l == 0 { 0.0 } else { tops[l - 1] };
        let y = bot + rng.gen_range(0.05..0.95) * (tops[l] - bot);
        let r = ev.momentum_residual(cfg, &f, xp, y, 1e-3)?;
        worst = worst.max(r.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
    }
    c.push(Check::at_most("eulerian_momentum_residual", worst, 1e-4));
    Ok(())
}

/// Runs the selected suites against the configured physics.
pub fn run_suites(cfg: &PhysicalConfig, mode: Mode, selector: Suite, seed: u64) -> VerifyReport {
    let chosen: Vec<Suite> = if selector == Suite::All { Suite::EACH.to_vec() } else { vec![selector] };
    let suites: Vec<SuiteResult> = chosen
        .into_iter()
        .map(|suite| {
            let mut rng = suite.rng(seed);
            let mut c = Checks(Vec::new());
            let rng = &mut rng;
            c.run(suite.name(), |c| match suite {
                Suite::Geometry => geometry(cfg, rng, c),
                Suite::Divtools => divtools(cfg, rng, c),
                Suite::Symbols => symbols(cfg, rng, c),
                Suite::Compat => compat(cfg, mode, rng, c),
                Suite::Linear => linear(cfg, mode, rng, c),
                Suite::Wave => wave(cfg, mode, rng, c),
                Suite::All => unreachable!("expanded above"),
            });
            let pass = !c.0.is_empty() && c.0.iter().all(|k| k.pass);
            SuiteResult { suite: suite.name(), pass, checks: c.0 }
        })
        .collect();
    VerifyReport { selector: selector.name(), seed, pass: suites.iter().all(|s| s.pass), suites }
}

pub fn verify(run: &Run, selector: Suite) -> Result<u8> {
    let report = run_suites(&run.rc.physical, run.rc.mode(), selector, run.seed);
    io::write_json(&run.path("verify.json"), &report)?;
    Manifest::new("verify", &run.config_bytes, run.seed).write(&run.out, &["verify.json"])?;
    Ok(if report.pass { 0 } else { 2 })
}

