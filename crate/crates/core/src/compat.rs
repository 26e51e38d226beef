//! Compatibility of data for the overdetermined stress problem.
//!
//! At every frequency the measurement pairs the data with the normal-stress
//! solutions `(Q_k, V_k)` for unit loads on interface `k`:
//!
//! `phi_k = int f . conj(V_k) + sum_l k_l . conj(V_k(a_l)) - int g conj(Q_k) - h_k`.
//!
//! Data lie in the range of the stress-problem forward map exactly when
//! `phi` vanishes.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::config::PhysicalConfig;
use crate::error::{Error, Result};
use crate::grid::norms::{hnorm_tuple, NormTag};
use crate::grid::{Discretization, HField, Panel, VField, VerticalMesh};
use crate::linear::DataTuple;
use crate::symbols::SymbolTable;
use crate::vertical_bvp::{solve_normal_stress, Convention, FrequencyProblem, StressData, VerticalSolution};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative tolerance on the zero-mode identities `h_l(0) = int_0^{a_l} g(0)`.
pub const ZERO_MODE_TOL: f64 = 1e-9;

/// `phi` together with its diagnostics.
#[derive(Debug, Clone)]
pub struct CompatMeasurement {
    /// One horizontal field per interface.
    pub phi: Vec<HField>,
    /// Largest `|phi_k(0)|`, before the zero mode is cleared.
    pub zero_mode: f64,
    /// Homogeneous H^{-1} norm of `phi` without its zero mode.
    pub hdot_minus1: f64,
    /// H^{3/2+s} norm of `phi`.
    pub regular: f64,
}

/// `phi(xi)` from the dual profiles at one frequency.
pub fn measure_at(mesh: &VerticalMesh, duals: &[VerticalSolution], data: &StressData, h: &[C64]) -> Vec<C64> {
    let n = data.f.len();
    duals
        .iter()
        .zip(h)
        .map(|(d, &hk)| {
            let mut s = ZERO;
            for c in 0..n {
                s += mesh.inner_by_layer(&data.f[c], &d.u[c]).into_iter().sum::<C64>();
            }
            for (l, kl) in data.k.iter().enumerate() {
                let top = mesh.layer_top(l);
                for c in 0..n {
                    s += kl[c] * d.u[c][top].conj();
                }
            }
            s -= mesh.inner_by_layer(&data.g, &d.p).into_iter().sum::<C64>();
            s - hk
        })
        .collect()
}

/// Scale against which zero-mode defects are judged.
pub fn data_scale(disc: &Discretization, data: &DataTuple) -> f64 {
    let top = *disc.mesh.depths().last().unwrap();
    let hmax = data.h.iter().map(HField::max_abs).fold(0.0, f64::max);
    let kmax = data.k.iter().flatten().map(HField::max_abs).fold(0.0, f64::max);
    (top * data.g.max_abs()).max(top * data.f.max_abs()).max(hmax).max(kmax)
}

/// `phi` at every lattice frequency without the zero-mode check. Real data
/// are solved on one member of each conjugate pair; Nyquist modes are zero.
pub fn measure_raw(table: &SymbolTable, disc: &Discretization, data: &DataTuple) -> Result<Vec<HField>> {
    let torus = &disc.torus;
    let m = disc.mesh.m();
    let real = data.is_real();
    let nf = disc.nfreq();
    let wanted: Vec<usize> = (0..nf).filter(|&i| !(real && (torus.is_nyquist(i) || torus.partner(i) < i))).collect();
    let values: Vec<(usize, Vec<C64>)> = wanted
        .par_iter()
        .map(|&i| {
            let e = table.entry(i)?;
            let duals = e.duals.as_ref().ok_or_else(|| {
                Error::InvalidConfig("measurement needs a symbol table on the field mesh".into())
            })?;
            let (sd, h) = data.at(i);
            Ok((i, measure_at(&disc.mesh, duals, &sd, &h)))
        })
        .collect::<Result<_>>()?;
    let mut phi = vec![HField::zeros(nf, real); m];
    for (i, v) in values {
        for (k, x) in v.into_iter().enumerate() {
            phi[k].coef[i] = x;
            if real {
                phi[k].coef[torus.partner(i)] = x.conj();
            }
        }
    }
    if real {
        for p in &mut phi {
            for (i, c) in p.coef.iter_mut().enumerate() {
                if torus.is_nyquist(i) {
                    *c = ZERO;
                } else if torus.partner(i) == i {
                    c.im = 0.0;
                }
            }
        }
    }
    Ok(phi)
}

/// Compatibility measurement with the zero-mode check; `s` sets the
/// regularity of the reported H^{3/2+s} norm.
pub fn measure(table: &SymbolTable, disc: &Discretization, data: &DataTuple, s: f64) -> Result<CompatMeasurement> {
    if table.torus() != &disc.torus {
        return Err(Error::Shape("symbol table and data use different lattices".into()));
    }
    let mut phi = measure_raw(table, disc, data)?;
    let zero_mode = phi.iter().map(|p| p.coef[0].norm()).fold(0.0, f64::max);
    let tolerance = ZERO_MODE_TOL * data_scale(disc, data).max(f64::MIN_POSITIVE);
    if zero_mode > tolerance {
        return Err(Error::IncompatibleZeroMode { magnitude: zero_mode, tolerance });
    }
    for p in &mut phi {
        p.coef[0] = ZERO;
    }
    let hdot_minus1 = hnorm_tuple(&disc.torus, &phi, NormTag::HdotMinus1)?;
    let regular = hnorm_tuple(&disc.torus, &phi, NormTag::Hs(1.5 + s))?;
    Ok(CompatMeasurement { phi, zero_mode, hdot_minus1, regular })
}

/// Same layers with every panel at twice the degree, and the matrix
/// interpolating node values onto it.
fn refined(mesh: &VerticalMesh) -> (VerticalMesh, Vec<(usize, usize, Vec<f64>)>) {
    let panels: Vec<Panel> = mesh.panels().iter().map(|p| Panel { degree: 2 * p.degree, ..*p }).collect();
    let fine = VerticalMesh::from_panels(mesh.depths(), panels).expect("refined panels tile the slab");
    let ys = fine.nodes();
    let mut rows = Vec::with_capacity(ys.len());
    for p in 0..fine.panels().len() {
        for j in fine.range(p) {
            rows.push((j, mesh.range(p).start, mesh.interp_row(p, ys[j])));
        }
    }
    (fine, rows)
}

fn lift(v: &VField, rows: &[(usize, usize, Vec<f64>)], nfine: usize) -> VField {
    let mut out = VField::zeros(v.nfreq(), v.ncomp, nfine, v.real);
    for f in 0..v.nfreq() {
        for c in 0..v.ncomp {
            let src = v.profile(f, c).to_vec();
            let dst = out.profile_mut(f, c);
            for (j, start, row) in rows {
                dst[*j] = row.iter().zip(&src[*start..]).map(|(r, x)| x * *r).sum();
            }
        }
    }
    out
}

/// `int f . v` over the slab by physical-grid sums and exact vertical quadrature.
fn grid_pairing(disc: &Discretization, a: &VField, b: &VField) -> f64 {
    let w = disc.mesh.quad_weights();
    let np = disc.torus.npoints();
    let cell = disc.torus.volume() / np as f64;
    let sa = a.to_samples(disc);
    let sb = b.to_samples(disc);
    let mut total = 0.0;
    for (blk, (xa, xb)) in sa.chunks(np).zip(sb.chunks(np)).enumerate() {
        let j = blk % disc.nnodes();
        total += w[j] * xa.iter().zip(xb).map(|(p, q)| p * q).sum::<f64>();
    }
    total * cell
}

fn surface_pairing(disc: &Discretization, a: &HField, b: &HField) -> f64 {
    let sa = disc.torus.coefficients_to_samples(&a.coef);
    let sb = disc.torus.coefficients_to_samples(&b.coef);
    sa.iter().zip(&sb).map(|(p, q)| p * q).sum::<f64>() * disc.torus.volume() / sa.len() as f64
}

/// `<F, v> - int g q - sum_l <psi_l, h_l>` with `(q, v)` the normal-stress
/// solution with loads `psi`, evaluated on the physical grid. Independent of
/// [`measure`]: it solves its own problems and never forms `phi`.
pub fn bilinear_form(config: &PhysicalConfig, disc: &Discretization, data: &DataTuple, psi: &[HField]) -> Result<f64> {
    let n = config.n;
    let m = config.m();
    if psi.len() != m || !data.is_real() || psi.iter().any(|p| !p.real) {
        return Err(Error::Shape("bilinear form pairs real data with m real loads".into()));
    }
    let nn = disc.nnodes();
    let nf = disc.nfreq();
    let sols: Vec<VerticalSolution> = (0..nf)
        .into_par_iter()
        .map(|i| {
            let load: Vec<C64> = psi.iter().map(|p| p.coef[i]).collect();
            if load.iter().all(|c| *c == ZERO) || disc.torus.is_nyquist(i) {
                return Ok(VerticalSolution::zeros(n, nn));
            }
            let fp = FrequencyProblem::new(disc.torus.xi(i), config, &disc.mesh, Convention::NormalStress);
            solve_normal_stress(&fp, &load)
        })
        .collect::<Result<_>>()?;
    let mut q = VField::zeros(nf, 1, nn, true);
    let mut v = VField::zeros(nf, n, nn, true);
    for (i, s) in sols.iter().enumerate() {
        q.profile_mut(i, 0).copy_from_slice(&s.p);
        for c in 0..n {
            v.profile_mut(i, c).copy_from_slice(&s.u[c]);
        }
    }
    let (fine, rows) = refined(&disc.mesh);
    let fd = Discretization::new(disc.torus.clone(), fine);
    let nfine = fd.nnodes();
    let mut total = grid_pairing(&fd, &lift(&data.f, &rows, nfine), &lift(&v, &rows, nfine));
    total -= grid_pairing(&fd, &lift(&data.g, &rows, nfine), &lift(&q, &rows, nfine));
    for l in 0..m {
        let top = disc.mesh.layer_top(l);
        for c in 0..n {
            total += surface_pairing(disc, &data.k[l][c], &v.node_field(c, top));
        }
        total -= surface_pairing(disc, &psi[l], &data.h[l]);
    }
    Ok(total)
}

/// `int sum_k psi_k phi_k dx` on the physical grid.
pub fn surface_tuple_pairing(disc: &Discretization, psi: &[HField], phi: &[HField]) -> f64 {
    psi.iter().zip(phi).map(|(a, b)| surface_pairing(disc, a, b)).sum()
}
