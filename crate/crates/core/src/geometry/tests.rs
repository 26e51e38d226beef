use super::*;
use crate::random::{band_limited, seeded};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn two_layers() -> DepthProfile {
    DepthProfile::new(vec![1.0, 2.0]).unwrap()
}

fn constant(torus: &TorusGrid, v: f64) -> HField {
    let mut h = HField::zeros(torus.nfreq(), true);
    h.coef[0] = C64::new(v, 0.0);
    h
}

fn random_surfaces(torus: &TorusGrid, seed: u64, amp: f64) -> SurfaceTuple {
    let mut rng = seeded(seed);
    let eta = (0..2)
        .map(|_| {
            let h = band_limited(torus, &mut rng, 1.0, false);
            h.scale(amp / h.to_samples(torus).iter().fold(0.0f64, |a, v| a.max(v.abs())))
        })
        .collect();
    SurfaceTuple::new(*torus, eta)
}

#[test]
fn rejects_bad_profiles() {
    assert!(DepthProfile::new(vec![]).is_err());
    assert!(DepthProfile::new(vec![1.0, 1.0]).is_err());
    assert!(DepthProfile::new(vec![-1.0, 2.0]).is_err());
    assert_eq!(two_layers().quarter_gap(), 0.25);
}

#[test]
fn flat_surfaces_give_identity() {
    let p = two_layers();
    let h = [0.0, 0.0];
    for (l, y) in [(0, 0.0), (0, 0.3), (1, 1.0), (1, 1.7), (1, 2.0)] {
        assert_eq!(flatten_height(&p, &h, l, y).unwrap(), y);
        assert_eq!(unflatten_height(&p, &h, l, y).unwrap(), y);
    }
}

#[test]
fn raised_top_stretches_upper_layer() {
    let p = two_layers();
    let h = [0.0, 0.05];
    assert!((flatten_height(&p, &h, 1, 1.5).unwrap() - 1.525).abs() < 1e-15);
    assert!((unflatten_height(&p, &h, 1, 1.525).unwrap() - 1.5).abs() < 1e-15);
    assert_eq!(flatten_height(&p, &h, 0, 0.5).unwrap(), 0.5);
}

#[test]
fn maps_report_errors() {
    let p = two_layers();
    assert!(matches!(flatten_height(&p, &[0.0, 0.0], 2, 1.0), Err(Error::LayerIndex { .. })));
    assert!(matches!(flatten_height(&p, &[0.0, 0.0], 0, 1.5), Err(Error::OutsideLayer { .. })));
    assert!(matches!(unflatten_height(&p, &[0.1, 0.0], 1, 1.0), Err(Error::OutsideLayer { .. })));
    assert!(matches!(unflatten_height(&p, &[0.0, -1.0], 1, 1.0), Err(Error::DegenerateLayer { .. })));
}

#[test]
fn interface_heights_agree_from_both_sides() {
    let t = TorusGrid::new(2, 4.0, 32).unwrap();
    let s = random_surfaces(&t, 1, 0.2);
    let p = two_layers();
    for x in [0.1, 1.3, 2.9] {
        let h = s.heights_at([x, 0.0]);
        let below = flatten_height(&p, &h, 0, 1.0).unwrap();
        let above = flatten_height(&p, &h, 1, 1.0).unwrap();
        assert!((below - above).abs() < 1e-15);
        assert!((below - 1.0 - h[0]).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn unflatten_inverts_flatten(x in 0.0f64..4.0, t in 0.0f64..1.0, upper in any::<bool>()) {
        let torus = TorusGrid::new(2, 4.0, 32).unwrap();
        let s = random_surfaces(&torus, 2, 0.2);
        let p = two_layers();
        let l = usize::from(upper);
        let y = p.lower(l) + t * p.thickness(l);
        let (_, z) = flatten_map(&p, &s, l, [x, 0.0], y).unwrap();
        let (_, back) = unflatten_map(&p, &s, l, [x, 0.0], z).unwrap();
        prop_assert!((back - y).abs() <= 1e-12);
    }
}

#[test]
fn inverse_holds_on_many_random_points() {
    let torus = TorusGrid::new(3, 4.0, 16).unwrap();
    let mut rng = seeded(3);
    let eta = (0..2).map(|_| band_limited(&torus, &mut rng, 0.8, false).scale(0.02)).collect();
    let s = SurfaceTuple::new(torus, eta);
    let p = two_layers();
    assert!(s.within_quarter_gap(&p));
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = [rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)];
        let l = rng.gen_range(0..2);
        let y = p.lower(l) + rng.gen_range(0.0..1.0) * p.thickness(l);
        let (_, z) = flatten_map(&p, &s, l, x, y).unwrap();
        worst = worst.max((unflatten_map(&p, &s, l, x, z).unwrap().1 - y).abs());
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn uniform_stretch_geometry() {
    let t = TorusGrid::new(2, 4.0, 8).unwrap();
    let s = SurfaceTuple::new(t, vec![constant(&t, 0.0), constant(&t, 0.1)]);
    let g = GeometryFields::new(&two_layers(), &s, false).unwrap();
    for p in 0..g.npoints {
        assert!((g.jac[1][p] - 1.1).abs() < 1e-15);
        assert!((g.jac[0][p] - 1.0).abs() < 1e-15);
        let a = g.a_matrix(1, p, 1.4);
        assert!((a[0][0] - 1.0).abs() < 1e-15 && a[0][1].abs() < 1e-15 && a[1][0] == 0.0);
        assert!((a[1][1] - 1.0 / 1.1).abs() < 1e-15);
    }
}

#[test]
fn a_is_inverse_transpose_and_jacobian_is_determinant() {
    let t = TorusGrid::new(3, 4.0, 16).unwrap();
    let mut rng = seeded(4);
    let eta = (0..2).map(|_| band_limited(&t, &mut rng, 0.8, false).scale(0.05)).collect();
    let s = SurfaceTuple::new(t, eta);
    let g = GeometryFields::new(&two_layers(), &s, true).unwrap();
    let mut worst = 0.0f64;
    for p in (0..g.npoints).step_by(7) {
        for (l, y) in [(0, 0.2), (0, 1.0), (1, 1.0), (1, 1.6), (1, 2.0)] {
            let f = g.grad_map(l, p, y);
            let a = g.a_matrix(l, p, y);
            // A F^t = I
            for i in 0..3 {
                for k in 0..3 {
                    let v: f64 = (0..3).map(|j| a[i][j] * f[k][j]).sum();
                    worst = worst.max((v - if i == k { 1.0 } else { 0.0 }).abs());
                }
            }
            let det = f[0][0] * (f[1][1] * f[2][2] - f[1][2] * f[2][1]) - f[0][1] * (f[1][0] * f[2][2] - f[1][2] * f[2][0])
                + f[0][2] * (f[1][0] * f[2][1] - f[1][1] * f[2][0]);
            worst = worst.max((det - g.jac[l][p]).abs());
        }
    }
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn normal_is_minus_gradient_and_one() {
    let t = TorusGrid::new(2, 2.0, 16).unwrap();
    let mut e = HField::zeros(t.nfreq(), true);
    e.coef[1] = C64::new(0.0, -0.05);
    e.coef[15] = C64::new(0.0, 0.05);
    let s = SurfaceTuple::new(t, vec![HField::zeros(t.nfreq(), true), e]);
    let g = GeometryFields::new(&two_layers(), &s, false).unwrap();
    for p in 0..g.npoints {
        let x = t.point(p)[0];
        let nrm = g.normal(1, p);
        assert!((nrm[0] + 0.1 * PI * (PI * x).cos()).abs() < 1e-13);
        assert_eq!(nrm[1], 1.0);
    }
}

#[test]
fn crossing_surfaces_are_inadmissible() {
    let t = TorusGrid::new(2, 4.0, 8).unwrap();
    let s = SurfaceTuple::new(t, vec![constant(&t, 0.6), constant(&t, -0.6)]);
    assert!(matches!(s.check_admissible(&two_layers()), Err(Error::Inadmissible)));
    assert!(GeometryFields::new(&two_layers(), &s, false).is_err());
}

#[test]
fn curvature_of_constant_vanishes() {
    let t = TorusGrid::new(3, 4.0, 16).unwrap();
    assert_eq!(mean_curvature(&t, &constant(&t, 0.3)).max_abs(), 0.0);
}

#[test]
fn curvature_linearizes_to_laplacian() {
    let t = TorusGrid::new(3, 4.0, 16).unwrap();
    let e = band_limited(&t, &mut seeded(5), 1.0, false);
    let lap = e.laplacian(&t);
    let err = |eps: f64| mean_curvature(&t, &e.scale(eps)).scale(1.0 / eps).sub(&lap).max_abs() / lap.max_abs();
    let (coarse, fine) = (err(1e-4), err(1e-5));
    assert!(fine <= 1e-6, "{fine:e}");
    // the defect is cubic in eps, so the quotient error is quadratic
    assert!((coarse / fine - 100.0).abs() < 5.0, "{coarse:e} {fine:e}");
}

#[test]
fn curvature_of_sine_matches_closed_form() {
    let (period, amp) = (2.0 * PI, 0.3);
    let t = TorusGrid::new(2, period, 64).unwrap();
    let samples: Vec<f64> = (0..t.npoints()).map(|j| amp * t.point(j)[0].sin()).collect();
    let e = HField::from_samples(&t, &samples).unwrap();
    let h = mean_curvature(&t, &e).to_samples(&t);
    let worst = (0..t.npoints())
        .map(|j| {
            let x = t.point(j)[0];
            let (d1, d2) = (amp * x.cos(), -amp * x.sin());
            (h[j] - d2 / (1.0 + d1 * d1).powf(1.5)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn curvature_commutes_with_grid_translations() {
    let t = TorusGrid::new(3, 4.0, 16).unwrap();
    let e = band_limited(&t, &mut seeded(6), 1.5, false).scale(0.3);
    let shift = [2.0 * t.period / t.modes as f64, 4.0 * t.period / t.modes as f64];
    let lhs = mean_curvature(&t, &e.translate(&t, shift));
    let rhs = mean_curvature(&t, &e).translate(&t, shift);
    assert!(lhs.sub(&rhs).max_abs() <= 1e-13 * rhs.max_abs().max(1.0));
}
