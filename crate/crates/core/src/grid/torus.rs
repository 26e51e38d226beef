//! Periodic horizontal lattice and FFT plumbing.
//!
//! Coefficients follow `f(x) = sum_xi c_xi exp(2 pi i xi.x)`; frequency
//! indices are stored in FFT order, so index `N/2` is the Nyquist mode.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    /// Spatial dimension (2 or 3); the torus has dimension n - 1.
    pub n: usize,
    /// Period in every horizontal direction.
    pub period: f64,
    /// Modes per horizontal direction (even).
    pub modes: usize,
}

impl TorusGrid {
    pub fn new(n: usize, period: f64, modes: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::InvalidConfig(format!("dimension n = {n} must be 2 or 3")));
        }
        if modes < 4 || modes % 2 != 0 {
            return Err(Error::InvalidConfig(format!("mode count {modes} must be even and at least 4")));
        }
        if !(period > 0.0) {
            return Err(Error::InvalidConfig("period must be positive".into()));
        }
        Ok(TorusGrid { n, period, modes })
    }

    pub fn hdim(&self) -> usize {
        self.n - 1
    }

    pub fn nfreq(&self) -> usize {
        self.modes.pow(self.hdim() as u32)
    }

    /// Number of physical sample points (same as `nfreq`).
    pub fn npoints(&self) -> usize {
        self.nfreq()
    }

    /// L^{n-1}, the torus volume.
    pub fn volume(&self) -> f64 {
        self.period.powi(self.hdim() as i32)
    }

    fn signed(&self, i: usize) -> i64 {
        if i <= self.modes / 2 {
            i as i64
        } else {
            i as i64 - self.modes as i64
        }
    }

    /// Integer wavenumbers of frequency index `idx` (second entry 0 when n = 2).
    pub fn wavenumbers(&self, idx: usize) -> [i64; 2] {
        if self.hdim() == 1 {
            [self.signed(idx), 0]
        } else {
            [self.signed(idx / self.modes), self.signed(idx % self.modes)]
        }
    }

    /// Frequency vector xi = k / L.
    pub fn xi(&self, idx: usize) -> [f64; 2] {
        let k = self.wavenumbers(idx);
        [k[0] as f64 / self.period, k[1] as f64 / self.period]
    }

    pub fn xi_abs(&self, idx: usize) -> f64 {
        let x = self.xi(idx);
        x[0].hypot(x[1])
    }

    /// Frequency components as a slice of length n - 1.
    pub fn xi_vec(&self, idx: usize) -> Vec<f64> {
        self.xi(idx)[..self.hdim()].to_vec()
    }

    pub fn index_of(&self, k: [i64; 2]) -> Option<usize> {
        let nn = self.modes as i64;
        let wrap = |v: i64| -> Option<usize> {
            if v > nn / 2 || v <= -nn / 2 {
                None
            } else {
                Some(v.rem_euclid(nn) as usize)
            }
        };
        if self.hdim() == 1 {
            if k[1] != 0 {
                return None;
            }
            wrap(k[0])
        } else {
            Some(wrap(k[0])? * self.modes + wrap(k[1])?)
        }
    }

    /// Lattice index holding the conjugate partner of `idx` (negated indices
    /// modulo N).
    pub fn partner(&self, idx: usize) -> usize {
        let nn = self.modes;
        let neg = |i: usize| (nn - i) % nn;
        if self.hdim() == 1 {
            neg(idx)
        } else {
            neg(idx / nn) * nn + neg(idx % nn)
        }
    }

    /// True when any component sits on the Nyquist wavenumber N/2.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let k = self.wavenumbers(idx);
        let h = (self.modes / 2) as i64;
        k[0] == h || (self.hdim() == 2 && k[1] == h)
    }

    /// Physical sample coordinates of point `j`.
    pub fn point(&self, j: usize) -> [f64; 2] {
        let dx = self.period / self.modes as f64;
        if self.hdim() == 1 {
            [j as f64 * dx, 0.0]
        } else {
            [(j / self.modes) as f64 * dx, (j % self.modes) as f64 * dx]
        }
    }

    /// Samples to coefficients (in place).
    pub fn forward(&self, buf: &mut [C64]) {
        fft_nd(buf, self.modes, self.hdim(), false);
        let s = 1.0 / self.nfreq() as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// Coefficients to samples (in place).
    pub fn inverse(&self, buf: &mut [C64]) {
        fft_nd(buf, self.modes, self.hdim(), true);
    }

    pub fn samples_to_coefficients(&self, samples: &[f64]) -> Vec<C64> {
        let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn coefficients_to_samples(&self, coef: &[C64]) -> Vec<f64> {
        let mut buf = coef.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Size of the 3/2-rule dealiasing grid in each direction.
    pub fn padded_modes(&self) -> usize {
        let p = (3 * self.modes).div_ceil(2);
        p + p % 2
    }

    /// Evaluates coefficients on the padded grid (Nyquist mode dropped).
    pub fn to_padded(&self, coef: &[C64]) -> Vec<f64> {
        let mp = self.padded_modes();
        let hd = self.hdim();
        let mut buf = vec![C64::new(0.0, 0.0); mp.pow(hd as u32)];
        for (idx, &c) in coef.iter().enumerate() {
            if self.is_nyquist(idx) {
                continue;
            }
            buf[padded_index(self.wavenumbers(idx), mp, hd)] = c;
        }
        fft_nd(&mut buf, mp, hd, true);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Projects padded-grid samples back onto the lattice (Nyquist set to 0).
    pub fn from_padded(&self, samples: &[f64]) -> Vec<C64> {
        let mp = self.padded_modes();
        let hd = self.hdim();
        let mut buf: Vec<C64> = samples.iter().map(|&x| C64::new(x, 0.0)).collect();
        fft_nd(&mut buf, mp, hd, false);
        let s = 1.0 / buf.len() as f64;
        (0..self.nfreq())
            .map(|idx| {
                if self.is_nyquist(idx) {
                    C64::new(0.0, 0.0)
                } else {
                    buf[padded_index(self.wavenumbers(idx), mp, hd)] * s
                }
            })
            .collect()
    }

    /// Sample coordinates on the padded grid.
    pub fn padded_point(&self, j: usize) -> [f64; 2] {
        let mp = self.padded_modes();
        let dx = self.period / mp as f64;
        if self.hdim() == 1 {
            [j as f64 * dx, 0.0]
        } else {
            [(j / mp) as f64 * dx, (j % mp) as f64 * dx]
        }
    }

    /// Evaluates a coefficient vector at an arbitrary horizontal point.
    pub fn eval_at(&self, coef: &[C64], x: [f64; 2]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (idx, &c) in coef.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let xi = self.xi(idx);
            let ph = 2.0 * std::f64::consts::PI * (xi[0] * x[0] + xi[1] * x[1]);
            s += c * C64::from_polar(1.0, ph);
        }
        s
    }

    /// Plane-wave factors exp(2 pi i xi.x) for every lattice frequency.
    pub fn phases(&self, x: [f64; 2]) -> Vec<C64> {
        (0..self.nfreq())
            .map(|idx| {
                let xi = self.xi(idx);
                C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (xi[0] * x[0] + xi[1] * x[1]))
            })
            .collect()
    }
}

fn padded_index(k: [i64; 2], mp: usize, hd: usize) -> usize {
    let w = |v: i64| v.rem_euclid(mp as i64) as usize;
    if hd == 1 {
        w(k[0])
    } else {
        w(k[0]) * mp + w(k[1])
    }
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    type Plans = RwLock<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;
    static PLANS: OnceLock<Plans> = OnceLock::new();
    let plans = PLANS.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = plans.read().expect("fft plan cache poisoned").get(&(len, inverse)) {
        return p.clone();
    }
    let mut planner = FftPlanner::new();
    let p = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
    plans.write().expect("fft plan cache poisoned").entry((len, inverse)).or_insert(p).clone()
}

/// Unnormalized FFT over a row-major hypercube of side `n` in `dims` dimensions.
fn fft_nd(buf: &mut [C64], n: usize, dims: usize, inverse: bool) {
    let p = plan(n, inverse);
    if dims == 1 {
        p.process(buf);
        return;
    }
    // rows (contiguous last index)
    for row in buf.chunks_mut(n) {
        p.process(row);
    }
    // columns
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        p.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}
