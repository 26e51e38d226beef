//! Acceptance criteria 1-8, run in sequence with one pass/fail line each.
//!
//! Lines go straight to the process stdout so they show up in plain
//! `cargo test` logs.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use stwave::compat::measure;
use stwave::divtools::{divergence, multi_trace_solve, normal_traces, reflection_mesh, TraceDivergenceData};
use stwave::grid::norms::{hnorm, slab_norm, slab_norm_sq, NormTag};
use stwave::linear::{forward, LinearSolver, CONSISTENCY_TOL};
use stwave::random::{band_limited, seeded, slab_field, Profile, SeededRng};
use stwave::symbols::{compute_n, fit_slope, n_scale, verify_asymptotics, MeshPolicy, Sweep, SymbolTable};
use stwave::vertical_bvp::{solve_normal_stress, Convention, FrequencyProblem};
use stwave::wave::{solve_wave, surface_l2, ForcingSpec, Unflattener, WaveOptions};
use stwave::{DataTuple, Discretization, FlatState, HField, Mode, PhysicalConfig, TorusGrid, VField, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference(n: usize) -> PhysicalConfig {
    PhysicalConfig { n, ..PhysicalConfig::reference() }
}

fn torus(n: usize, period: f64, modes: usize) -> TorusGrid {
    TorusGrid::new(n, period, modes).unwrap()
}

fn spectral_norm(a: &nalgebra::DMatrix<C64>) -> f64 {
    a.clone().singular_values().max()
}

fn c1_symbol_asymptotics() -> Outcome {
    let sweep = Sweep::standard(2);
    let rep = verify_asymptotics(&reference(2), &sweep).unwrap();
    let pass = rep.low_slopes.iter().all(|s| (s - 2.0).abs() <= 0.1)
        && rep.high_slopes.iter().all(|s| (s + 1.0).abs() <= 0.1)
        && rep.samples.iter().all(|s| s.coercivity > 0.0);
    outcome(
        pass,
        format!(
            "low slope {:.4} (2 +- 0.1), high slope {:.4} (-1 +- 0.1), min coercivity margin {:.3e} over {} samples",
            rep.low_slopes[0],
            rep.high_slopes[0],
            rep.min_coercivity,
            rep.samples.len()
        ),
    )
}

fn random_xi(n: usize, rng: &mut SeededRng) -> [f64; 2] {
    let r = 10f64.powf(rng.gen_range(-3.0..2.0));
    let th: f64 = if n == 2 { 0.0 } else { rng.gen_range(0.0..std::f64::consts::TAU) };
    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    [s * r * th.cos(), r * th.sin()]
}

fn c2_adjoint_identity() -> Outcome {
    let mut rng = seeded(202);
    let mut worst = [0.0f64; 2];
    for (w, n) in worst.iter_mut().zip([2, 3]) {
        let cfg = reference(n);
        let rev = cfg.with_gamma(-cfg.gamma);
        for _ in 0..50 {
            let xi = random_xi(n, &mut rng);
            let a = compute_n(&cfg, xi).unwrap();
            let b = compute_n(&rev, xi).unwrap();
            *w = w.max(spectral_norm(&(a.adjoint() - &b)) / spectral_norm(&a));
        }
    }
    outcome(
        worst.iter().all(|w| *w <= 1e-8),
        format!("max relative defect over 50 frequencies: n=2 {:.2e}, n=3 {:.2e} (<= 1e-8)", worst[0], worst[1]),
    )
}

/// Ratios `|u|_{H^1}^2 / sum min(|xi|^2, |xi|^{-1}) |psi|^2` for 20 loads
/// spread over the whole band.
fn energy_ratios(disc: &Discretization) -> Vec<f64> {
    let cfg = reference(2);
    let t = disc.torus;
    let mut rng = seeded(303);
    (0..20)
        .map(|_| {
            let psi: Vec<HField> = (0..2).map(|_| band_limited(&t, &mut rng, f64::INFINITY, false)).collect();
            let mut u = VField::zeros_on(disc, 2);
            let mut denom = 0.0;
            for f in 1..t.nfreq() {
                let loads: Vec<C64> = psi.iter().map(|h| h.coef[f]).collect();
                denom += n_scale(t.xi_abs(f)) * loads.iter().map(|c| c.norm_sqr()).sum::<f64>();
                let fp = FrequencyProblem::new(t.xi(f), &cfg, &disc.mesh, Convention::NormalStress);
                let s = solve_normal_stress(&fp, &loads).unwrap();
                for c in 0..2 {
                    u.profile_mut(f, c).copy_from_slice(&s.u[c]);
                }
            }
            slab_norm_sq(disc, &u, NormTag::Hs(1.0)).unwrap() / (t.volume() * denom)
        })
        .collect()
}

/// Smallest `c` with every lattice ratio in `[1/c, c]`: the extreme
/// eigenvalues of the per-frequency energy form against the load weight.
fn sharp_constant(disc: &Discretization) -> f64 {
    let cfg = reference(2);
    let (t, mesh) = (&disc.torus, &disc.mesh);
    let mut c: f64 = 0.0;
    for f in 1..t.nfreq() {
        if t.is_nyquist(f) {
            continue;
        }
        let fp = FrequencyProblem::new(t.xi(f), &cfg, mesh, Convention::NormalStress);
        let us: Vec<Vec<Vec<C64>>> = (0..2)
            .map(|l| {
                let mut e = vec![C64::new(0.0, 0.0); 2];
                e[l] = C64::new(1.0, 0.0);
                solve_normal_stress(&fp, &e).unwrap().u
            })
            .collect();
        let w = t.xi_abs(f).max(1.0).powi(2);
        let form = |i: usize, j: usize| -> C64 {
            (0..2).map(|k| mesh.inner(&us[j][k], &us[i][k]) * w + mesh.inner(&mesh.diff(&us[j][k]), &mesh.diff(&us[i][k]))).sum()
        };
        let (a, d, b) = (form(0, 0).re, form(1, 1).re, form(0, 1).norm());
        let (mid, rad) = (0.5 * (a + d), (0.25 * (a - d).powi(2) + b * b).sqrt());
        let scale = n_scale(t.xi_abs(f));
        c = c.max((mid + rad) / scale).max(scale / (mid - rad));
    }
    c
}

fn c3_energy_equivalence() -> Outcome {
    let cfg = reference(2);
    let mut parts = Vec::new();
    let mut cs = Vec::new();
    let mut inside = true;
    for modes in [32, 64] {
        let disc = Discretization::layered(torus(2, 8.0, modes), &cfg.depths, 24);
        let c = sharp_constant(&disc);
        let r = energy_ratios(&disc);
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.iter().cloned().fold(0.0, f64::max);
        inside &= lo >= 1.0 / c && hi <= c;
        parts.push(format!("N={modes}: c {c:.3}, ratios in [{lo:.4}, {hi:.4}]"));
        cs.push(c);
    }
    let change = (cs[1] - cs[0]).abs() / cs[0];
    outcome(
        inside && cs[0].is_finite() && change < 0.2,
        format!("{}; c changes {:.1}% (< 20%), all ratios inside [1/c, c]: {inside}", parts.join("; "), 100.0 * change),
    )
}

fn c4_divergence_toolbox() -> Outcome {
    let depths = [0.6, 1.3, 2.0];
    let mut worst = 0.0f64;
    let mut ratio = 0.0f64;
    for (n, t) in [(2, torus(2, 6.0, 24)), (3, torus(3, 4.0, 12))] {
        let d = Discretization::new(t, reflection_mesh(&depths, 20));
        let mut rng = seeded(404 + n as u64);
        for _ in 0..3 {
            let f = slab_field(&d, &mut rng, 1, 2.0, Profile::Piecewise);
            let g = (0..3)
                .map(|l| {
                    let mut h = band_limited(&d.torus, &mut rng, 2.0, false);
                    h.coef[0] = d.mesh.integrate_to_interface(f.profile(0, 0), l);
                    h
                })
                .collect();
            let data = TraceDivergenceData { f, g };
            let u = multi_trace_solve(&d, &data).unwrap();
            let div = divergence(&d, &u).sub(&data.f).max_abs();
            let tr = normal_traces(&d, &u).iter().zip(&data.g).map(|(a, b)| a.sub(b).max_abs()).fold(0.0, f64::max);
            let bottom = (0..n).map(|c| u.node_field(c, 0).max_abs()).fold(0.0, f64::max);
            worst = worst.max(div).max(tr).max(bottom);
        }
        for _ in 0..10 {
            let u = slab_field(&d, &mut rng, n, 2.0, Profile::Clamped);
            let f = divergence(&d, &u);
            let mut lhs = 0.0;
            for (l, g) in normal_traces(&d, &u).iter().enumerate() {
                let mut defect = g.clone();
                for fr in 0..d.nfreq() {
                    defect.coef[fr] -= d.mesh.integrate_to_interface(f.profile(fr, 0), l);
                }
                lhs += hnorm(&d.torus, &defect, NormTag::HdotMinus1).unwrap();
            }
            let rhs = 2.0 * std::f64::consts::PI * depths.iter().map(|a: &f64| a.sqrt()).sum::<f64>() * slab_norm(&d, &u, NormTag::L2).unwrap();
            ratio = ratio.max(lhs / rhs);
        }
    }
    outcome(
        worst <= 1e-10 && ratio <= 1.0,
        format!("m=3 worst residual {worst:.2e} (<= 1e-10), worst estimate lhs/rhs {ratio:.3} (<= 1) over 20 samples"),
    )
}

fn c5_compatibility() -> Outcome {
    let cfg = reference(2);
    let disc = Discretization::layered(torus(2, 8.0, 32), &cfg.depths, 32);
    let table = SymbolTable::new(&cfg, &disc.torus, MeshPolicy::Fixed(disc.mesh.clone()), Mode::SurfaceTension).unwrap();
    let mut rng = seeded(505);
    let (mut range, mut perturbed) = (0.0f64, f64::INFINITY);
    for _ in 0..5 {
        let mut x = FlatState::random(&disc, &mut rng, 2.0, Mode::SurfaceTension);
        x.eta.iter_mut().for_each(|e| *e = HField::zeros(disc.nfreq(), true));
        let mut data = forward(&cfg, &disc, &x);
        let scale = data.y_norm(&disc, 0.0);
        range = range.max(measure(&table, &disc, &data, 0.0).unwrap().regular / scale);
        let delta = band_limited(&disc.torus, &mut rng, 2.0, false);
        let size = 1e-3 * scale / hnorm(&disc.torus, &delta, NormTag::Hs(1.5)).unwrap();
        data.h[1] = data.h[1].add(&delta.scale(size));
        perturbed = perturbed.min(measure(&table, &disc, &data, 0.0).unwrap().regular / data.y_norm(&disc, 0.0));
    }
    outcome(
        range <= 1e-8 && perturbed > 1e-5,
        format!("range data |phi|/|data| <= {range:.2e} (<= 1e-8); perturbed data >= {perturbed:.2e} (> 1e-5)"),
    )
}

fn c6_linear_round_trip() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let zero_st = PhysicalConfig { sigma: vec![0.0, 0.0], ..reference(2) };
    for (cfg, mode, tag) in [(reference(2), Mode::SurfaceTension, "sigma>0"), (zero_st, Mode::ZeroSurfaceTension, "sigma=0")] {
        let disc = Discretization::layered(torus(2, 8.0, 32), &cfg.depths, 32);
        let s = LinearSolver::new(&cfg, &disc, mode).unwrap();
        let mut rng = seeded(606);
        let (mut st, mut dt, mut cons) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..10 {
            let x = FlatState::random(&disc, &mut rng, 2.0, mode);
            let (y, rep) = s.inverse(&s.forward(&x)).unwrap();
            st = st.max(y.sub(&x).x_norm(&cfg, &disc, 0.0) / x.x_norm(&cfg, &disc, 0.0));
            cons = cons.max(rep.consistency);
            let d = DataTuple::random(&disc, &mut rng, 2.0);
            let (z, rep) = s.inverse(&d).unwrap();
            dt = dt.max(s.forward(&z).sub(&d).y_norm(&disc, 0.0) / d.y_norm(&disc, 0.0));
            cons = cons.max(rep.consistency);
        }
        pass &= st <= 1e-8 && dt <= 1e-8 && cons <= CONSISTENCY_TOL;
        parts.push(format!("{tag}: inverse.forward {st:.2e}, forward.inverse {dt:.2e}, consistency {cons:.2e}"));
    }
    outcome(pass, format!("{} (all <= 1e-8, 10 instances each)", parts.join("; ")))
}

/// Picard at three amplitudes; returns the pass flag and a summary.
fn wave_family(n: usize, period: f64, modes: usize) -> (bool, String) {
    let cfg = reference(n);
    let disc = Discretization::layered(torus(n, period, modes), &cfg.depths, 32);
    let s = LinearSolver::new(&cfg, &disc, Mode::SurfaceTension).unwrap();
    let bump = ForcingSpec::gaussian_bump(&disc, 2, [0.5 * period, 0.5 * period], 1.0, 1.0, 1.0).unwrap();
    let eps = [1e-4, 1e-3, 1e-2];
    let mut norms = Vec::new();
    let mut pass = true;
    let (mut ratio, mut iters, mut margin) = (0.0f64, 0usize, f64::INFINITY);
    for e in eps {
        match solve_wave(&s, &bump.with_epsilon(e), &WaveOptions::default()) {
            Ok((x, rep)) => {
                ratio = ratio.max(rep.worst_ratio().unwrap_or(0.0));
                iters = iters.max(rep.iterations());
                margin = margin.min(rep.quarter_gap - x.eta_sup(&disc));
                pass &= rep.converged;
                norms.push(surface_l2(&disc, &x.eta));
            }
            Err(f) => return (false, format!("n={n}: eps={e:e} failed: {}", f.error)),
        }
    }
    let slope = fit_slope(&eps.map(f64::ln), &norms.iter().map(|v| v.ln()).collect::<Vec<_>>());
    pass &= ratio < 0.9 && (slope - 1.0).abs() <= 0.05 && margin > 0.0;
    (pass, format!("n={n} N={modes}: slope {slope:.4} (1 +- 0.05), worst ratio {ratio:.2e} (< 0.9), <= {iters} iterations, quarter-gap margin {margin:.3}"))
}

fn c7_nonlinear_waves() -> Outcome {
    let t = Instant::now();
    let (p2, d2) = wave_family(2, 16.0, 64);
    let s2 = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let (p3, d3) = wave_family(3, 16.0, 64);
    let s3 = t.elapsed().as_secs_f64();
    outcome(
        p2 && p3 && s2 < 300.0 && s3 < 1200.0,
        format!("{d2}, {s2:.1} s (< 300 s); {d3}, {s3:.1} s (< 1200 s)"),
    )
}

fn c8_eulerian_validity() -> Outcome {
    let cfg = reference(2);
    let disc = Discretization::layered(torus(2, 16.0, 64), &cfg.depths, 32);
    let s = LinearSolver::new(&cfg, &disc, Mode::SurfaceTension).unwrap();
    let f = ForcingSpec::gaussian_bump(&disc, 2, [8.0, 0.0], 1.0, 1.0, 1e-2).unwrap();
    let (x, _) = solve_wave(&s, &f, &WaveOptions::default()).unwrap();
    let ev = Unflattener::new(&cfg, &disc, &x).unwrap();
    let mut rng = seeded(808);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xp = [rng.gen_range(0.0..16.0), 0.0];
        let l = rng.gen_range(0..2);
        let tops = ev.interface_heights(xp);
        let bot = if l == 0 { 0.0 } else { tops[0] };
        let y = bot + rng.gen_range(0.05..0.95) * (tops[l] - bot);
        let r = ev.momentum_residual(&cfg, &f, xp, y, 1e-3).unwrap();
        worst = worst.max(r.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
    }
    outcome(worst <= 1e-4, format!("max momentum residual {worst:.2e} at 100 interior points (<= 1e-4)"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, f64, fn() -> Outcome); 8] = [
        ("symbol asymptotics", 60.0, c1_symbol_asymptotics),
        ("adjoint identity", 30.0, c2_adjoint_identity),
        ("energy equivalence", 60.0, c3_energy_equivalence),
        ("divergence toolbox", 20.0, c4_divergence_toolbox),
        ("compatibility", 60.0, c5_compatibility),
        ("linear round trip", 120.0, c6_linear_round_trip),
        ("nonlinear waves", 1500.0, c7_nonlinear_waves),
        ("eulerian validity", 60.0, c8_eulerian_validity),
    ];
    let mut failed = Vec::new();
    for (k, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < *budget;
        let line = format!(
            "acceptance criterion {} ({name}): {} | {} | {secs:.1} s (budget {budget:.0} s)\n",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        let mut out = std::io::stdout().lock();
        out.write_all(line.as_bytes()).unwrap();
        out.flush().unwrap();
        if !pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
