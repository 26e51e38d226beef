use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Rayleigh–Taylor ordering violated: densities must strictly decrease upward and stay positive")]
    RayleighTaylor,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("zero mode obstructs homogeneous seminorm")]
    ZeroModeSeminorm,

    #[error("multiplier symbol is not conjugate symmetric on the lattice (at frequency index {0})")]
    SymbolSymmetry(usize),

    #[error("layer index {layer} out of range for {m} layers")]
    LayerIndex { layer: usize, m: usize },

    #[error("vertical coordinate {y} outside layer [{lo}, {hi}]")]
    OutsideLayer { y: f64, lo: f64, hi: f64 },

    #[error("degenerate layer {layer}: thickness {thickness} below floor")]
    DegenerateLayer { layer: usize, thickness: f64 },

    #[error("inadmissible surfaces: interfaces cross or touch the bottom")]
    Inadmissible,

    #[error("ill-conditioned vertical system at xi = {xi:?}: condition estimate {estimate:e}")]
    IllConditioned { xi: Vec<f64>, estimate: f64 },

    #[error("numerically singular symbol at xi = {xi:?}")]
    SingularSymbol { xi: Vec<f64> },

    #[error("frequency {xi_abs} outside the trusted range (cutoff {cutoff})")]
    Untrusted { xi_abs: f64, cutoff: f64 },

    #[error("incompatible zero mode: |phi(0)| = {magnitude:e} exceeds tolerance {tolerance:e}")]
    IncompatibleZeroMode { magnitude: f64, tolerance: f64 },

    #[error("solution of the Stokes problem with the modified data misses the normal traces: relative residual {residual:e}")]
    Consistency { residual: f64 },

    #[error("solenoidal extension requires a vanishing zero mode")]
    NonzeroZeroMode,

    #[error("left trust region: max |eta| = {max_eta} exceeds quarter gap {bound}")]
    LeftTrustRegion { max_eta: f64, bound: f64 },

    #[error("Picard iteration failed to converge: {0}")]
    NonConvergence(String),

    #[error("evaluation point ({x:?}, {y}) lies outside the fluid domain")]
    OutsideDomain { x: Vec<f64>, y: f64 },
}
