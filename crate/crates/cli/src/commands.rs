//! The `symbol`, `solve-linear` and `solve-wave` subcommands.

use std::path::{Path, PathBuf};

use serde::Serialize;
use stwave::linear::{LinearSolver, CONSISTENCY_TOL};
use stwave::symbols::{compute_n, fmt17, verify_asymptotics, Sweep};
use stwave::vertical_bvp::{exact, Convention};
use stwave::wave::{surface_l2, IterationReport, Unflattener, WaveFailure};
use stwave::{Discretization, Error, FlatState, Result};

use crate::config::{ForcingProfile, RunConfig};
use crate::io::{self, Manifest, StwvHeader};

/// Everything a subcommand needs besides its own arguments.
pub struct Run {
    pub rc: RunConfig,
    pub config_bytes: Vec<u8>,
    pub out: PathBuf,
    pub seed: u64,
}

impl Run {
    pub fn new(rc: RunConfig, config_bytes: Vec<u8>, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self> {
        let out = out.or_else(|| rc.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out).map_err(|e| Error::InvalidConfig(format!("{}: {e}", out.display())))?;
        let seed = seed.unwrap_or(rc.output.seed);
        Ok(Run { rc, config_bytes, out, seed })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn manifest(&self, command: &str, files: &[&str]) -> Result<PathBuf> {
        Manifest::new(command, &self.config_bytes, self.seed).write(&self.out, files)
    }

    fn stwv_header(&self, disc: &Discretization) -> StwvHeader {
        let rc = &self.rc;
        StwvHeader {
            n: rc.physical.n,
            modes: rc.grid.modes,
            degree: rc.grid.degree,
            nnodes: disc.nnodes(),
            period: rc.grid.period,
            depths: rc.physical.depths.clone(),
            mode: rc.mode(),
        }
    }
}

/// Exit status for a failed run.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Consistency { .. } | Error::LeftTrustRegion { .. } => 2,
        Error::NonConvergence(_) => 3,
        _ => 1,
    }
}

#[derive(Serialize)]
struct SymbolReport {
    pass: bool,
    sweep: Sweep,
    low_slopes: Vec<f64>,
    high_slopes: Vec<f64>,
    low_pass: bool,
    high_pass: bool,
    min_coercivity: f64,
    coercivity_pass: bool,
    max_inverse_bound: f64,
    /// Largest relative distance to the exponential-basis oracle, if it
    /// could be evaluated at every sample.
    max_oracle_rel_diff: Option<f64>,
}

/// Oracle norm and relative distance of `n_gamma` to it.
fn oracle_columns(rc: &RunConfig, xi: [f64; 2]) -> (f64, f64) {
    let cfg = &rc.physical;
    match (compute_n(cfg, xi), exact::normal_stress_symbol(cfg, xi, Convention::NormalStress)) {
        (Ok(n), Ok(e)) => (e.clone().singular_values().max(), (&n - &e).norm() / e.norm()),
        _ => (f64::NAN, f64::NAN),
    }
}

pub fn symbol(run: &Run) -> Result<u8> {
    let rc = &run.rc;
    let n = rc.physical.n;
    let sweep = rc.sweep();
    let rep = verify_asymptotics(&rc.physical, &sweep)?;
    let mut header: Vec<String> = (1..n).map(|i| format!("xi{i}")).collect();
    header.extend(["xi_abs", "norm", "coercivity", "inverse_bound", "oracle_norm", "oracle_rel_diff"].map(String::from));
    let mut worst = Some(0.0f64);
    let rows: Vec<Vec<String>> = rep
        .samples
        .iter()
        .map(|s| {
            let (on, od) = oracle_columns(rc, s.xi);
            worst = worst.and_then(|w| if od.is_nan() { None } else { Some(w.max(od)) });
            let mut r: Vec<String> = s.xi[..n - 1].iter().map(|v| fmt17(*v)).collect();
            r.extend([s.xi_abs, s.norm, s.coercivity, s.inverse_bound, on, od].map(fmt17));
            r
        })
        .collect();
    io::write_table(&run.path("symbol.csv"), &header, rows)?;
    let report = SymbolReport {
        pass: rep.pass(),
        sweep,
        low_pass: rep.low_pass,
        high_pass: rep.high_pass,
        coercivity_pass: rep.coercivity_pass,
        low_slopes: rep.low_slopes,
        high_slopes: rep.high_slopes,
        min_coercivity: rep.min_coercivity,
        max_inverse_bound: rep.max_inverse_bound,
        max_oracle_rel_diff: worst,
    };
    io::write_json(&run.path("report.json"), &report)?;
    run.manifest("symbol", &["symbol.csv", "report.json"])?;
    Ok(if report.pass { 0 } else { 2 })
}

#[derive(Serialize)]
struct LinearReport {
    status: String,
    message: Option<String>,
    consistency: Option<f64>,
    consistency_tolerance: f64,
    phi_zero_mode: Option<f64>,
    data_norm: Option<f64>,
    eta_sup: Option<f64>,
    quarter_gap: f64,
    admissible: Option<bool>,
}

pub fn solve_linear(run: &Run) -> Result<u8> {
    let rc = &run.rc;
    let files = rc
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("solve-linear needs a [data] table with `bulk` and `surface` paths".into()))?;
    let disc = rc.discretization()?;
    let data = io::read_data_tables(&disc, rc.physical.m(), &files.bulk, &files.surface)?;
    let solver = LinearSolver::new(&rc.physical, &disc, rc.mode())?;
    let mut report = LinearReport {
        status: "ok".into(),
        message: None,
        consistency: None,
        consistency_tolerance: CONSISTENCY_TOL,
        phi_zero_mode: None,
        data_norm: None,
        eta_sup: None,
        quarter_gap: 0.25 * rc.physical.min_gap(),
        admissible: None,
    };
    match solver.inverse(&data) {
        Ok((x, rep)) => {
            report.consistency = Some(rep.consistency);
            report.phi_zero_mode = Some(rep.phi_zero_mode);
            report.data_norm = Some(rep.data_norm);
            report.eta_sup = Some(rep.eta_sup);
            report.admissible = Some(rep.admissible);
            io::write_state_tables(&disc, &x, &run.path("state_bulk.csv"), &run.path("state_surface.csv"))?;
            io::write_stwv(&run.path("state.stwv"), &run.stwv_header(&disc), &x)?;
            io::write_json(&run.path("report.json"), &report)?;
            run.manifest("solve-linear", &["state_bulk.csv", "state_surface.csv", "state.stwv", "report.json"])?;
            Ok(0)
        }
        Err(e) => {
            report.status = "error".into();
            report.message = Some(e.to_string());
            if let Error::Consistency { residual } = e {
                report.consistency = Some(residual);
            }
            io::write_json(&run.path("report.json"), &report)?;
            run.manifest("solve-linear", &["report.json"])?;
            Err(e)
        }
    }
}

#[derive(Serialize)]
struct WaveReport {
    status: String,
    message: Option<String>,
    epsilon: f64,
    profile: ForcingProfile,
    quarter_gap: f64,
    final_eta_sup: Option<f64>,
    /// Quarter gap minus the largest surface excursion; positive when the
    /// bound holds.
    quarter_gap_margin: Option<f64>,
    quarter_gap_satisfied: Option<bool>,
    surface_l2: Option<f64>,
    iteration: IterationReport,
}

/// Eulerian samples on the `x_2 = 0` slice: nine levels per layer between
/// the perturbed interfaces at every grid abscissa.
fn eulerian_rows(rc: &RunConfig, disc: &Discretization, x: &FlatState) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    const LEVELS: usize = 9;
    let n = rc.physical.n;
    let ev = Unflattener::new(&rc.physical, disc, x)?;
    let mut header = io::x_columns(n);
    header.extend(["y".to_string(), "layer".to_string()]);
    header.extend((1..=n).map(|c| format!("v{c}")));
    header.push("q".into());
    let mut rows = Vec::new();
    for i in 0..disc.torus.modes {
        let xp = [i as f64 * disc.torus.period / disc.torus.modes as f64, 0.0];
        let tops = ev.interface_heights(xp);
        for (l, &top) in tops.iter().enumerate() {
            let bot = if l == 0 { 0.0 } else { tops[l - 1] };
            for k in 0..LEVELS {
                let y = bot + (top - bot) * k as f64 / (LEVELS - 1) as f64;
                let e = ev.eval_in_layer(l, xp, y)?;
                let mut r: Vec<String> = xp[..n - 1].iter().map(|v| fmt17(*v)).collect();
                r.push(fmt17(y));
                r.push(l.to_string());
                r.extend(e.v[..n].iter().map(|v| fmt17(*v)));
                r.push(fmt17(e.q));
                rows.push(r);
            }
        }
    }
    Ok((header, rows))
}

pub fn solve_wave(run: &Run) -> Result<u8> {
    let rc = &run.rc;
    let disc = rc.discretization()?;
    let solver = LinearSolver::new(&rc.physical, &disc, rc.mode())?;
    let forcing = rc.forcing(&disc)?;
    let report = |iteration: IterationReport, message: Option<String>| WaveReport {
        status: if message.is_none() { "converged".into() } else { "error".into() },
        message,
        epsilon: rc.forcing.epsilon,
        profile: rc.forcing.profile.clone(),
        quarter_gap: iteration.quarter_gap,
        final_eta_sup: iteration.records.last().map(|r| r.eta_sup),
        quarter_gap_margin: iteration.records.last().map(|r| r.margin),
        quarter_gap_satisfied: iteration.records.last().map(|r| r.margin >= 0.0),
        surface_l2: None,
        iteration,
    };
    match stwave::wave::solve_wave(&solver, &forcing, &rc.wave_options()) {
        Ok((x, iter)) => {
            let mut rep = report(iter, None);
            rep.surface_l2 = Some(surface_l2(&disc, &x.eta));
            write_wave_outputs(run, &disc, &x)?;
            io::write_json(&run.path("report.json"), &rep)?;
            run.manifest("solve-wave", &["surfaces.csv", "eulerian.csv", "state.stwv", "report.json"])?;
            Ok(0)
        }
        Err(WaveFailure { error, report: iter }) => {
            io::write_json(&run.path("report.json"), &report(iter, Some(error.to_string())))?;
            run.manifest("solve-wave", &["report.json"])?;
            Err(error)
        }
    }
}

fn write_wave_outputs(run: &Run, disc: &Discretization, x: &FlatState) -> Result<()> {
    let n = disc.torus.n;
    let (_, cols) = io::state_columns(n, x.eta.len());
    io::write_table(&run.path("surfaces.csv"), &io::surface_header(n, &cols), io::surface_rows(disc, &x.eta))?;
    let (header, rows) = eulerian_rows(&run.rc, disc, x)?;
    io::write_table(&run.path("eulerian.csv"), &header, rows)?;
    io::write_stwv(&run.path("state.stwv"), &run.stwv_header(disc), x)
}

/// Reads a config file, or the built-in reference configuration when absent.
pub fn load_config(path: Option<&Path>) -> Result<(RunConfig, Vec<u8>)> {
    match path {
        Some(p) => RunConfig::load(p),
        None => {
            let rc = RunConfig::default();
            let text = toml::to_string(&rc).map_err(|e| Error::InvalidConfig(e.to_string()))?;
            Ok((rc, text.into_bytes()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_documented_exit_codes() {
        assert_eq!(exit_code(&Error::Consistency { residual: 1e-3 }), 2);
        assert_eq!(exit_code(&Error::LeftTrustRegion { max_eta: 0.3, bound: 0.25 }), 2);
        assert_eq!(exit_code(&Error::NonConvergence("stalled".into())), 3);
        assert_eq!(exit_code(&Error::RayleighTaylor), 1);
        assert_eq!(exit_code(&Error::IncompatibleZeroMode { magnitude: 1.0, tolerance: 1e-9 }), 1);
    }

    #[test]
    fn default_config_serializes_and_reparses() {
        let (rc, bytes) = load_config(None).unwrap();
        let back = RunConfig::parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(back.physical, rc.physical);
    }
}
