//! Shared setups for the criterion benchmarks.

use stwave::linear::LinearSolver;
use stwave::{Discretization, Mode, PhysicalConfig, TorusGrid};

/// Linear solver on the reference two-layer configuration.
pub fn reference_solver(period: f64, modes: usize) -> LinearSolver {
    let cfg = PhysicalConfig::reference();
    let disc = Discretization::layered(TorusGrid::new(2, period, modes).expect("valid grid"), &cfg.depths, 32);
    LinearSolver::new(&cfg, &disc, Mode::SurfaceTension).expect("reference config is legal")
}
