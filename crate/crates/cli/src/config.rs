//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stwave::symbols::Sweep;
use stwave::wave::{ForcingSpec, WaveOptions};
use stwave::{Discretization, Error, Mode, PhysicalConfig, Result, TorusGrid};

/// Horizontal period, modes per direction and Chebyshev degree per layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_period")]
    pub period: f64,
    #[serde(default = "GridSpec::default_modes")]
    pub modes: usize,
    #[serde(default = "GridSpec::default_degree")]
    pub degree: usize,
}

impl GridSpec {
    fn default_period() -> f64 {
        16.0
    }
    fn default_modes() -> usize {
        64
    }
    fn default_degree() -> usize {
        32
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { period: 16.0, modes: 64, degree: 32 }
    }
}

/// Built-in pressure profiles on the top interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ForcingProfile {
    None,
    GaussianBump { center: [f64; 2], width: f64, amplitude: f64 },
    ModeK { k: [i64; 2], amplitude: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForcingConfig {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(flatten)]
    pub profile: ForcingProfile,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig { epsilon: 0.0, profile: ForcingProfile::None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let w = WaveOptions::default();
        Tolerances { rtol: w.rtol, atol: w.atol, max_iter: w.max_iter }
    }
}

/// Frequency ranges of the asymptotics sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub low: [f64; 2],
    pub high: [f64; 2],
    pub points: usize,
    #[serde(default = "SweepSpec::default_tolerance")]
    pub slope_tolerance: f64,
}

impl SweepSpec {
    fn default_tolerance() -> f64 {
        0.1
    }
}

/// Input tables of `solve-linear`, relative to the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub bulk: PathBuf,
    pub surface: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physical: PhysicalConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Defaults to the mode implied by the surface tensions.
    pub mode: Option<Mode>,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub sweep: Option<SweepSpec>,
    pub data: Option<DataFiles>,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            physical: PhysicalConfig::reference(),
            grid: GridSpec::default(),
            mode: None,
            forcing: ForcingConfig::default(),
            tolerances: Tolerances::default(),
            sweep: None,
            data: None,
            output: OutputSpec::default(),
        }
    }
}

impl RunConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let rc: RunConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        rc.validate()?;
        Ok(rc)
    }

    /// Reads a config file; relative data paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let mut rc = Self::parse(text)?;
        if let (Some(d), Some(base)) = (rc.data.as_mut(), path.parent()) {
            d.bulk = base.join(&d.bulk);
            d.surface = base.join(&d.surface);
        }
        Ok((rc, bytes))
    }

    pub fn validate(&self) -> Result<()> {
        self.physical.validate_mode(self.mode())?;
        self.torus()?;
        if self.grid.degree < 2 {
            return Err(Error::InvalidConfig("grid.degree must be at least 2".into()));
        }
        let t = &self.tolerances;
        if !(t.rtol >= 0.0) || !(t.atol >= 0.0) {
            return Err(Error::InvalidConfig("tolerances must be nonnegative".into()));
        }
        if !self.forcing.epsilon.is_finite() {
            return Err(Error::InvalidConfig("forcing.epsilon must be finite".into()));
        }
        match self.forcing.profile {
            ForcingProfile::GaussianBump { width, amplitude, .. } if !(width > 0.0) || !amplitude.is_finite() => {
                return Err(Error::InvalidConfig("gaussian_bump needs width > 0 and a finite amplitude".into()));
            }
            ForcingProfile::ModeK { amplitude, .. } if !amplitude.is_finite() => {
                return Err(Error::InvalidConfig("mode_k needs a finite amplitude".into()));
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            let ok = s.points >= 2 && s.low[0] > 0.0 && s.low[1] > s.low[0] && s.high[0] > 0.0 && s.high[1] > s.high[0];
            if !ok {
                return Err(Error::InvalidConfig("sweep ranges must be positive and increasing with points >= 2".into()));
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> Mode {
        self.mode.unwrap_or_else(|| self.physical.natural_mode())
    }

    pub fn torus(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.physical.n, self.grid.period, self.grid.modes)
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization::layered(self.torus()?, &self.physical.depths, self.grid.degree))
    }

    pub fn sweep(&self) -> Sweep {
        let mut sw = Sweep::standard(self.physical.n);
        if let Some(s) = &self.sweep {
            sw.low = (s.low[0], s.low[1]);
            sw.high = (s.high[0], s.high[1]);
            sw.points = s.points;
            sw.slope_tolerance = s.slope_tolerance;
        }
        sw
    }

    pub fn wave_options(&self) -> WaveOptions {
        let t = &self.tolerances;
        WaveOptions { rtol: t.rtol, atol: t.atol, max_iter: t.max_iter, ..WaveOptions::default() }
    }

    pub fn forcing(&self, disc: &Discretization) -> Result<ForcingSpec> {
        let m = self.physical.m();
        let eps = self.forcing.epsilon;
        match self.forcing.profile {
            ForcingProfile::None => Ok(ForcingSpec::none(m)),
            ForcingProfile::GaussianBump { center, width, amplitude } => ForcingSpec::gaussian_bump(disc, m, center, width, amplitude, eps),
            ForcingProfile::ModeK { k, amplitude } => ForcingSpec::mode_k(disc, m, k, amplitude, eps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[physical]
n = 2
depths = [1.0, 2.0]
rho = [2.0, 1.0]
mu = [1.0, 0.5]
sigma = [0.1, 0.1]
gravity = 1.0
gamma = 1.0
"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let rc = RunConfig::parse(BASE).unwrap();
        assert_eq!(rc.physical, PhysicalConfig::reference());
        assert_eq!(rc.mode(), Mode::SurfaceTension);
        assert_eq!(rc.grid.modes, 64);
        assert!(matches!(rc.forcing.profile, ForcingProfile::None));
    }

    #[test]
    fn forcing_profiles_parse() {
        let text = format!("{BASE}\n[forcing]\nprofile = \"gaussian_bump\"\nepsilon = 0.01\ncenter = [8.0, 0.0]\nwidth = 1.0\namplitude = 1.0\n");
        let rc = RunConfig::parse(&text).unwrap();
        assert_eq!(rc.forcing.epsilon, 0.01);
        assert!(matches!(rc.forcing.profile, ForcingProfile::GaussianBump { width, .. } if width == 1.0));
        let text = format!("{BASE}\n[forcing]\nprofile = \"mode_k\"\nk = [2, 0]\namplitude = 0.5\n");
        assert!(matches!(RunConfig::parse(&text).unwrap().forcing.profile, ForcingProfile::ModeK { k: [2, 0], .. }));
    }

    #[test]
    fn increasing_density_is_refused() {
        let text = BASE.replace("rho = [2.0, 1.0]", "rho = [1.0, 2.0]");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("Rayleigh–Taylor ordering violated"));
    }

    #[test]
    fn illegal_mode_and_grid_are_refused() {
        let text = format!("mode = \"zero_surface_tension\"\n{BASE}");
        assert!(RunConfig::parse(&text).is_err());
        let text = format!("{BASE}\n[grid]\nperiod = -1.0\n");
        assert!(RunConfig::parse(&text).is_err());
        let text = format!("{BASE}\n[forcing]\nprofile = \"gaussian_bump\"\ncenter = [0.0, 0.0]\nwidth = 0.0\namplitude = 1.0\n");
        assert!(RunConfig::parse(&text).is_err());
        assert!(RunConfig::parse(&format!("unknown = 1\n{BASE}")).is_err());
    }
}
