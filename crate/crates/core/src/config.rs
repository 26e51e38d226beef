//! Physical parameters shared by every module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which linear isomorphism is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SurfaceTension,
    ZeroSurfaceTension,
}

/// Layer count, depths, densities, viscosities, surface tensions, gravity,
/// wave speed and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// Spatial dimension, 2 or 3.
    pub n: usize,
    /// Interface heights a_1 < ... < a_m above the rigid bottom.
    pub depths: Vec<f64>,
    pub rho: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub gravity: f64,
    pub gamma: f64,
}

impl PhysicalConfig {
    /// Two layers of depth one, densities (2, 1), viscosities (1, 0.5), unit
    /// speed and gravity, surface tension 0.1 on both interfaces.
    pub fn reference() -> Self {
        PhysicalConfig {
            n: 2,
            depths: vec![1.0, 2.0],
            rho: vec![2.0, 1.0],
            mu: vec![1.0, 0.5],
            sigma: vec![0.1, 0.1],
            gravity: 1.0,
            gamma: 1.0,
        }
    }

    pub fn m(&self) -> usize {
        self.depths.len()
    }

    /// Height of the lower boundary of layer `l` (0-based), i.e. a_{l}.
    pub fn lower(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.depths[l - 1]
        }
    }

    pub fn thickness(&self, l: usize) -> f64 {
        self.depths[l] - self.lower(l)
    }

    pub fn min_gap(&self) -> f64 {
        (0..self.m()).map(|l| self.thickness(l)).fold(f64::INFINITY, f64::min)
    }

    /// Density jump across interface `l` (0-based): rho above minus rho below,
    /// with nothing above the top interface.
    pub fn rho_jump(&self, l: usize) -> f64 {
        let above = if l + 1 < self.m() { self.rho[l + 1] } else { 0.0 };
        above - self.rho[l]
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        PhysicalConfig { gamma, ..self.clone() }
    }

    /// Checks everything except the density ordering.
    pub fn validate_shape(&self) -> Result<()> {
        let m = self.m();
        if self.n != 2 && self.n != 3 {
            return Err(Error::InvalidConfig(format!("dimension n = {} must be 2 or 3", self.n)));
        }
        if m == 0 {
            return Err(Error::InvalidConfig("at least one layer is required".into()));
        }
        for (name, v) in [("rho", &self.rho), ("mu", &self.mu), ("sigma", &self.sigma)] {
            if v.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "{name} has {} entries, expected {m}",
                    v.len()
                )));
            }
        }
        let mut prev = 0.0;
        for &a in &self.depths {
            if !(a > prev) || !a.is_finite() {
                return Err(Error::InvalidConfig("depths must be positive and strictly increasing".into()));
            }
            prev = a;
        }
        if self.mu.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidConfig("viscosities must be positive".into()));
        }
        if self.rho.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidConfig("densities must be positive".into()));
        }
        if self.sigma.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidConfig("surface tensions must be nonnegative".into()));
        }
        if !self.gamma.is_finite() || !self.gravity.is_finite() {
            return Err(Error::InvalidConfig("gamma and gravity must be finite".into()));
        }
        Ok(())
    }

    /// Full validation including the strict density ordering.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if self.rho.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(Error::RayleighTaylor);
        }
        if !(self.gravity > 0.0) {
            return Err(Error::InvalidConfig("gravity must be positive".into()));
        }
        Ok(())
    }

    /// Checks that `mode` is legal for this configuration.
    pub fn validate_mode(&self, mode: Mode) -> Result<()> {
        self.validate()?;
        match mode {
            Mode::SurfaceTension => {
                if self.sigma.iter().any(|&s| !(s > 0.0)) {
                    return Err(Error::InvalidConfig(
                        "surface tension mode needs every sigma > 0".into(),
                    ));
                }
            }
            Mode::ZeroSurfaceTension => {
                if self.n != 2 {
                    return Err(Error::InvalidConfig(
                        "the zero surface tension mode is only available for n = 2".into(),
                    ));
                }
                if self.sigma.iter().any(|&s| s != 0.0) {
                    return Err(Error::InvalidConfig(
                        "zero surface tension mode needs every sigma = 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The mode implied by the surface tensions.
    pub fn natural_mode(&self) -> Mode {
        if self.sigma.iter().all(|&s| s == 0.0) {
            Mode::ZeroSurfaceTension
        } else {
            Mode::SurfaceTension
        }
    }
}
