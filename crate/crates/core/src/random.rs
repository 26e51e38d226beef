//! Seeded generators of smooth, band-limited test data.
//!
//! Vertical profiles are low-degree polynomials, so they are represented
//! exactly on every mesh of degree at least [`PROFILE_DEGREE`]. Horizontal
//! content is confined to a ball in frequency space. Real fields are produced
//! by generating one member of each conjugate pair and mirroring it.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::grid::{Discretization, HField, TorusGrid, VField, VerticalMesh};

/// Generator used for all reproducible test data.
pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Polynomial degree of generated vertical profiles.
pub const PROFILE_DEGREE: usize = 6;

/// Shape of a generated vertical profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Independent polynomial on each layer, discontinuous at interfaces.
    Piecewise,
    /// One polynomial over the whole column, vanishing at y = 0.
    Clamped,
}

fn unit<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Spectral envelope of generated coefficients.
fn envelope(r: f64) -> f64 {
    1.0 / (1.0 + r * r)
}

/// Fills every lattice frequency `f` with `gen(f)` for one member of each
/// conjugate pair inside `|xi| <= radius`; partners receive the conjugate,
/// self-paired modes are made real (zero mode) or cleared (Nyquist).
fn mirrored<T, G, C>(torus: &TorusGrid, radius: f64, zero: T, mut gen: G, conj: C) -> Vec<T>
where
    T: Clone,
    G: FnMut(usize) -> T,
    C: Fn(&T, bool) -> T,
{
    let nf = torus.nfreq();
    let mut out: Vec<T> = vec![zero.clone(); nf];
    for f in 0..nf {
        let g = torus.partner(f);
        if torus.is_nyquist(f) || torus.xi_abs(f) > radius {
            continue;
        }
        if g < f {
            out[f] = conj(&out[g], false);
        } else if g == f {
            out[f] = conj(&gen(f), true);
        } else {
            out[f] = gen(f);
        }
    }
    out
}

/// Real horizontal field with coefficients in `0 < |xi| <= radius`, plus a
/// zero mode when `zero_mode` is set.
pub fn band_limited<R: Rng>(torus: &TorusGrid, rng: &mut R, radius: f64, zero_mode: bool) -> HField {
    let coef = mirrored(
        torus,
        radius,
        C64::new(0.0, 0.0),
        |f| unit(rng) * envelope(torus.xi_abs(f)),
        |c, self_paired| if self_paired { C64::new(c.re, 0.0) } else { c.conj() },
    );
    let mut h = HField { coef, real: true };
    if !zero_mode {
        h.coef[0] = C64::new(0.0, 0.0);
    }
    h
}

/// Random polynomial profile of the given shape on the mesh nodes.
pub fn profile<R: Rng>(mesh: &VerticalMesh, rng: &mut R, shape: Profile) -> Vec<C64> {
    let ys = mesh.nodes();
    let layers = mesh.node_layers();
    let depths = mesh.depths();
    let top = *depths.last().expect("mesh has layers");
    let cheb = |c: &[C64], x: f64| -> C64 {
        // T_j(x) by the three-term recurrence
        let (mut t0, mut t1) = (1.0, x);
        let mut s = c[0] + c[1] * x;
        for cj in &c[2..] {
            let t2 = 2.0 * x * t1 - t0;
            s += cj * t2;
            t0 = t1;
            t1 = t2;
        }
        s
    };
    let draw = |rng: &mut R| -> Vec<C64> {
        (0..=PROFILE_DEGREE).map(|j| unit(rng) / (1.0 + j as f64)).collect()
    };
    match shape {
        Profile::Piecewise => {
            let coefs: Vec<Vec<C64>> = (0..mesh.m()).map(|_| draw(rng)).collect();
            ys.iter()
                .zip(&layers)
                .map(|(&y, &l)| {
                    let lo = if l == 0 { 0.0 } else { depths[l - 1] };
                    let x = (2.0 * y - lo - depths[l]) / (depths[l] - lo);
                    cheb(&coefs[l], x)
                })
                .collect()
        }
        Profile::Clamped => {
            let c = draw(rng);
            let base = cheb(&c, -1.0);
            ys.iter().map(|&y| cheb(&c, 2.0 * y / top - 1.0) - base).collect()
        }
    }
}

/// Real slab field with `ncomp` components, band-limited horizontally and
/// polynomial vertically.
pub fn slab_field<R: Rng>(disc: &Discretization, rng: &mut R, ncomp: usize, radius: f64, shape: Profile) -> VField {
    let nn = disc.nnodes();
    let blocks = mirrored(
        &disc.torus,
        radius,
        Vec::new(),
        |f| {
            let w = envelope(disc.torus.xi_abs(f));
            let mut b = Vec::with_capacity(ncomp * nn);
            for _ in 0..ncomp {
                b.extend(profile(&disc.mesh, rng, shape).into_iter().map(|v| v * w));
            }
            b
        },
        |b, self_paired| {
            b.iter().map(|c| if self_paired { C64::new(c.re, 0.0) } else { c.conj() }).collect()
        },
    );
    let mut out = VField::zeros(disc.nfreq(), ncomp, nn, true);
    for (f, b) in blocks.into_iter().enumerate() {
        if !b.is_empty() {
            out.block_mut(f).copy_from_slice(&b);
        }
    }
    out
}
