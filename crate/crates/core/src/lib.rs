//! Spectral solver and verification kit for viscous, incompressible, multilayer
//! traveling waves with free interfaces.
//!
//! The horizontal variable lives on a periodic torus and is handled mode by mode
//! in Fourier space; each layer is discretized vertically by Chebyshev
//! collocation. The crate is organized bottom-up:
//!
//! * [`grid`]: Fourier lattice, Chebyshev panels, fields, multipliers and norms.
//! * [`geometry`]: flattening maps, Jacobians, geometry matrices, mean curvature.
//! * [`vertical_bvp`]: per-frequency two-point boundary value problems for the
//!   stress-data and normal-stress Stokes systems.
//! * [`symbols`]: the normal-stress to normal-velocity symbol and its relatives.
//! * [`divtools`]: right inverses of the divergence with prescribed normal traces.
//! * [`compat`]: compatibility measurement for the overdetermined Stokes problem.
//! * [`linear`]: forward and inverse maps of the linearized free-boundary system.
//! * [`wave`]: Picard iteration for small nonlinear traveling waves.

pub mod compat;
pub mod config;
pub mod divtools;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod linear;
pub mod random;
pub mod symbols;
pub mod vertical_bvp;
pub mod wave;

pub use config::{Mode, PhysicalConfig};
pub use error::{Error, Result};
pub use linear::{DataTuple, FlatState};
pub use grid::{Discretization, HField, Panel, TorusGrid, VField, VerticalMesh};
pub use num_complex::Complex64 as C64;

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
