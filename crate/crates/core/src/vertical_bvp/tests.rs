use super::*;
use crate::grid::Panel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_layer(n: usize, gamma: f64) -> PhysicalConfig {
    PhysicalConfig { n, gamma, ..PhysicalConfig::reference() }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// u_c = y (alpha_c + beta_c y + delta_c sin(om y)), p = pi_l cos(om y) + tau_l in layer l.
struct Manufactured {
    om: f64,
    alpha: Vec<C64>,
    beta: Vec<C64>,
    delta: Vec<C64>,
    pi: Vec<C64>,
    tau: Vec<C64>,
}

impl Manufactured {
    fn new(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut r = |k: usize| (0..k).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        Manufactured { om: 1.0, alpha: r(n), beta: r(n), delta: r(n), pi: r(m), tau: r(m) }
    }

    /// (u, Du, D2u) of component `i`.
    fn u(&self, i: usize, y: f64) -> [C64; 3] {
        let (a, b, d, w) = (self.alpha[i], self.beta[i], self.delta[i], self.om);
        let (s, c) = (w * y).sin_cos();
        [
            a * y + b * y * y + d * y * s,
            a + 2.0 * b * y + d * (s + w * y * c),
            2.0 * b + d * (2.0 * w * c - w * w * y * s),
        ]
    }

    fn p(&self, l: usize, y: f64) -> [C64; 2] {
        let w = self.om;
        [self.pi[l] * (w * y).cos() + self.tau[l], -self.pi[l] * w * (w * y).sin()]
    }

    fn data(&self, fp: &FrequencyProblem) -> StressData {
        let cfg = fp.config;
        let n = cfg.n;
        let mesh = fp.mesh;
        let ys = mesh.nodes();
        let layers = mesh.node_layers();
        let tp = 2.0 * PI;
        let ixi: Vec<C64> = (0..n - 1).map(|j| c(0.0, tp * fp.xi[j])).collect();
        let kap2: f64 = ixi.iter().map(|x| x.norm_sqr()).sum();
        let cadv = fp.convention.advection(cfg.gamma);
        let mut out = StressData::zeros(n, ys.len(), cfg.m());
        for (node, &y) in ys.iter().enumerate() {
            let l = layers[node];
            let (mu, rho) = (cfg.mu[l], cfg.rho[l]);
            let adv = c(0.0, cadv * tp * fp.xi[0] * rho);
            let jets: Vec<[C64; 3]> = (0..n).map(|i| self.u(i, y)).collect();
            let div: C64 = (0..n - 1).map(|j| ixi[j] * jets[j][0]).sum::<C64>() + jets[n - 1][1];
            let ddiv: C64 = (0..n - 1).map(|j| ixi[j] * jets[j][1]).sum::<C64>() + jets[n - 1][2];
            let [p, dp] = self.p(l, y);
            out.g[node] = div;
            for i in 0..n {
                let lap = jets[i][2] - jets[i][0] * kap2;
                let (gp, gd) = if i < n - 1 { (ixi[i] * p, ixi[i] * div) } else { (dp, ddiv) };
                out.f[i][node] = gp - mu * lap - mu * gd + adv * jets[i][0];
            }
        }
        let traction = |l: usize, y: f64| -> Vec<C64> {
            let mu = cfg.mu[l];
            let w = self.u(n - 1, y);
            let mut t: Vec<C64> = (0..n - 1).map(|i| -mu * (self.u(i, y)[1] + ixi[i] * w[0])).collect();
            t.push(self.p(l, y)[0] - 2.0 * mu * w[1]);
            t
        };
        for l in 0..cfg.m() {
            let y = cfg.depths[l];
            let below = traction(l, y);
            let above = if l + 1 < cfg.m() { traction(l + 1, y) } else { vec![C64::new(0.0, 0.0); n] };
            out.k[l] = above.iter().zip(&below).map(|(a, b)| a - b).collect();
        }
        out
    }

    fn error(&self, mesh: &VerticalMesh, sol: &VerticalSolution) -> f64 {
        let ys = mesh.nodes();
        let layers = mesh.node_layers();
        let mut err: f64 = 0.0;
        let mut size: f64 = 0.0;
        for (node, &y) in ys.iter().enumerate() {
            let p = self.p(layers[node], y)[0];
            err = err.max((sol.p[node] - p).norm());
            size = size.max(p.norm());
            for i in 0..sol.u.len() {
                let u = self.u(i, y)[0];
                err = err.max((sol.u[i][node] - u).norm());
                size = size.max(u.norm());
            }
        }
        err / size
    }
}

fn random_data(n: usize, nn: usize, m: usize, rng: &mut ChaCha8Rng) -> StressData {
    let mut r = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    StressData {
        g: (0..nn).map(|_| r()).collect(),
        f: (0..n).map(|_| (0..nn).map(|_| r()).collect()).collect(),
        k: (0..m).map(|_| (0..n).map(|_| r()).collect()).collect(),
    }
}

fn rel(a: &[C64], b: &[C64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let den = b.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    num / den
}

#[test]
fn zero_data_gives_zero_solution() {
    let cfg = two_layer(3, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 20);
    let fp = FrequencyProblem::new([0.3, -0.2], &cfg, &mesh, Convention::Stress);
    let sol = solve_stress_problem(&fp, &StressData::zeros(3, mesh.nnodes(), 2)).unwrap();
    assert_eq!(sol.max_abs(), 0.0);
    let fp = FrequencyProblem { convention: Convention::NormalStress, ..fp };
    assert_eq!(solve_normal_stress(&fp, &[C64::new(0.0, 0.0); 2]).unwrap().max_abs(), 0.0);
}

#[test]
fn zero_frequency_divergence_data_integrates() {
    let cfg = two_layer(2, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 24);
    let fp = FrequencyProblem::new([0.0, 0.0], &cfg, &mesh, Convention::Stress);
    let ys = mesh.nodes();
    let mut d = StressData::zeros(2, ys.len(), 2);
    d.g = ys.iter().map(|y| c(y.cos(), 0.5 * y)).collect();
    let sol = solve_stress_problem(&fp, &d).unwrap();
    for (i, y) in ys.iter().enumerate() {
        assert!((sol.u[1][i] - c(y.sin(), 0.25 * y * y)).norm() < 1e-12);
        assert!(sol.u[0][i].norm() < 1e-12);
    }
}

#[test]
fn manufactured_solutions_are_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, xi) in [(2usize, [0.37, 0.0]), (2, [-1.2, 0.0]), (3, [0.25, -0.4]), (3, [0.0, 0.6]), (3, [0.0, 0.0])] {
        let cfg = two_layer(n, 1.3);
        // second layer split into two panels to exercise internal boundaries
        let panels = vec![
            Panel { lo: 0.0, hi: 1.0, degree: 32, layer: 0 },
            Panel { lo: 1.0, hi: 1.4, degree: 24, layer: 1 },
            Panel { lo: 1.4, hi: 2.0, degree: 28, layer: 1 },
        ];
        let mesh = VerticalMesh::from_panels(&cfg.depths, panels).unwrap();
        for conv in [Convention::Stress, Convention::NormalStress] {
            let fp = FrequencyProblem::new(xi, &cfg, &mesh, conv);
            let ms = Manufactured::new(n, 2, &mut rng);
            let sol = solve_stress_problem(&fp, &ms.data(&fp)).unwrap();
            let e = ms.error(&mesh, &sol);
            assert!(e < 1e-8, "n={n} xi={xi:?} {conv:?}: {e:e}");
        }
    }
}

#[test]
fn apply_operator_matches_analytic_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = two_layer(3, -0.8);
    let mesh = VerticalMesh::layered(&cfg.depths, 30);
    let fp = FrequencyProblem::new([0.3, 0.45], &cfg, &mesh, Convention::Stress);
    let ms = Manufactured::new(3, 2, &mut rng);
    let ys = mesh.nodes();
    let layers = mesh.node_layers();
    let sol = VerticalSolution {
        p: ys.iter().zip(&layers).map(|(&y, &l)| ms.p(l, y)[0]).collect(),
        u: (0..3).map(|i| ys.iter().map(|&y| ms.u(i, y)[0]).collect()).collect(),
    };
    let got = apply_operator(&fp, &sol);
    let want = ms.data(&fp);
    assert!(rel(&got.g, &want.g) < 1e-10);
    for i in 0..3 {
        assert!(rel(&got.f[i], &want.f[i]) < 1e-9);
    }
    for l in 0..2 {
        assert!(rel(&got.k[l], &want.k[l]) < 1e-10);
    }
}

#[test]
fn collocation_residuals_vanish_on_imposed_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = two_layer(2, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 32);
    let fp = FrequencyProblem::new([0.6, 0.0], &cfg, &mesh, Convention::Stress);
    let data = random_data(2, mesh.nnodes(), 2, &mut rng);
    let sol = solve_stress_problem(&fp, &data).unwrap();
    let back = apply_operator(&fp, &sol);
    let scale = 1.0 + sol.max_abs();
    for l in 0..2 {
        let (lo, hi) = (mesh.layer_bottom(l), mesh.layer_top(l));
        for node in lo + 1..hi {
            assert!((back.g[node] - data.g[node]).norm() < 1e-10 * scale);
            for i in 0..2 {
                assert!((back.f[i][node] - data.f[i][node]).norm() < 1e-8 * scale);
            }
        }
        for i in 0..2 {
            assert!((back.k[l][i] - data.k[l][i]).norm() < 1e-10 * scale);
            // continuity and no slip
            if l > 0 {
                let jump = sol.u[i][mesh.layer_bottom(l)] - sol.u[i][mesh.layer_top(l - 1)];
                assert!(jump.norm() < 1e-12 * scale);
            }
            assert!(sol.u[i][0].norm() < 1e-13 * scale);
        }
    }
}

#[test]
fn spectral_convergence_of_manufactured_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = two_layer(2, 1.0);
    let ms = Manufactured { om: 6.0, ..Manufactured::new(2, 2, &mut rng) };
    let err = |d: usize| {
        let mesh = VerticalMesh::layered(&cfg.depths, d);
        let fp = FrequencyProblem::new([0.8, 0.0], &cfg, &mesh, Convention::Stress);
        ms.error(&mesh, &solve_stress_problem(&fp, &ms.data(&fp)).unwrap())
    };
    let (e16, e24) = (err(16), err(24));
    assert!(e16 > 1e-10, "profile too smooth to measure convergence: {e16:e}");
    assert!(e24 / e16 <= 1e-2, "{e16:e} -> {e24:e}");
}

#[test]
fn normal_stress_at_zero_frequency_has_no_vertical_velocity() {
    let cfg = two_layer(3, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 16);
    let fp = FrequencyProblem::new([0.0, 0.0], &cfg, &mesh, Convention::NormalStress);
    let sol = solve_normal_stress(&fp, &[c(1.0, 0.5), c(-2.0, 0.0)]).unwrap();
    assert!(sol.u[2].iter().all(|w| w.norm() < 1e-13));
}

#[test]
fn single_layer_trace_matches_closed_form() {
    // mpmath evaluation of the closed form psi (sinh(2ka) - 2ka) / (2 k mu (cosh(2ka) + 1 + 2 k^2 a^2)),
    // k = 2 pi |xi|, psi = 1.
    let frozen = [
        (1.3, 0.8, 0.05, 0.069549555481264925221),
        (1.3, 0.8, 0.4, 0.22908511663896749538),
        (1.3, 0.8, 2.5, 0.039788735772973703997),
        (1.0, 1.0, 1.0, 0.079526147217247899638),
    ];
    for (a, mu, xi, want) in frozen {
        let cfg = PhysicalConfig {
            n: 2,
            depths: vec![a],
            rho: vec![1.0],
            mu: vec![mu],
            sigma: vec![0.1],
            gravity: 1.0,
            gamma: 0.0,
        };
        let mesh = policy_mesh(&cfg, [xi, 0.0]);
        let fp = FrequencyProblem::new([xi, 0.0], &cfg, &mesh, Convention::NormalStress);
        let got = solve_normal_stress(&fp, &[c(1.0, 0.0)]).unwrap().normal_traces(&mesh)[0];
        assert!((got - c(want, 0.0)).norm() <= 1e-9 * want, "xi={xi}: {got} vs {want}");
        let ex = exact::normal_traces(&cfg, [xi, 0.0], Convention::NormalStress, &[c(1.0, 0.0)]).unwrap()[0];
        assert!((ex - c(want, 0.0)).norm() <= 1e-12 * want, "oracle xi={xi}: {ex} vs {want}");
    }
}

#[test]
fn collocation_matches_exponential_oracle_with_advection() {
    for (n, xi) in [(2usize, [0.3f64, 0.0]), (2, [-4.0, 0.0]), (3, [0.2, 0.5]), (3, [0.0, 0.7]), (3, [12.0, -5.0])] {
        let cfg = PhysicalConfig {
            n,
            depths: vec![0.7, 1.5, 2.0],
            rho: vec![3.0, 2.0, 1.0],
            mu: vec![1.0, 0.3, 2.0],
            sigma: vec![0.1; 3],
            gravity: 1.0,
            gamma: 1.7,
        };
        let mesh = policy_mesh(&cfg, xi);
        for conv in [Convention::Stress, Convention::NormalStress] {
            let fp = FrequencyProblem::new(xi, &cfg, &mesh, conv);
            let psi = [c(1.0, -0.5), c(0.3, 0.2), c(-0.7, 1.0)];
            let got = solve_stress_problem(&fp, &normal_stress_data(n, mesh.nnodes(), &psi))
                .unwrap()
                .normal_traces(&mesh);
            let want = exact::normal_traces(&cfg, xi, conv, &psi).unwrap();
            assert!(rel(&got, &want) < 1e-9, "n={n} xi={xi:?} {conv:?}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn energy_form_real_part_is_viscous_dissipation() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let cfg = two_layer(3, 2.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 20);
    let fp = FrequencyProblem::new([0.4, -0.3], &cfg, &mesh, Convention::Stress);
    let nn = mesh.nnodes();
    let w = VerticalSolution {
        p: vec![c(0.0, 0.0); nn],
        u: (0..3).map(|_| (0..nn).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()).collect(),
    };
    let b = energy_form(&fp, &w, &w);
    let without_advection = energy_form(&FrequencyProblem { config: &cfg.with_gamma(0.0), ..fp }, &w, &w);
    assert!(without_advection.im.abs() < 1e-12 * without_advection.re);
    assert!((b.re - without_advection.re).abs() <= 1e-11 * without_advection.re);
    let zero = VerticalSolution::zeros(3, nn);
    assert_eq!(energy_form(&fp, &zero, &w), c(0.0, 0.0));
}

#[test]
fn weak_form_identity_for_normal_stress_solutions() {
    let cfg = two_layer(3, 1.5);
    for xi in [[0.3f64, 0.1], [-1.1, 0.4], [0.0, 2.0]] {
        let mesh = policy_mesh(&cfg, xi);
        let fp = FrequencyProblem::new(xi, &cfg, &mesh, Convention::NormalStress);
        let psi = [c(0.4, 1.0), c(-1.0, 0.25)];
        let sol = solve_normal_stress(&fp, &psi).unwrap();
        let tr = sol.normal_traces(&mesh);
        let pairing: C64 = psi.iter().zip(&tr).map(|(a, b)| a * b.conj()).sum();
        let b = energy_form(&fp, &sol, &sol);
        assert!((b - pairing).norm() <= 1e-9 * pairing.norm(), "{b} vs {pairing}");
    }
}

#[test]
fn solve_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cfg = two_layer(3, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 18);
    let fp = FrequencyProblem::new([0.7, 0.2], &cfg, &mesh, Convention::Stress);
    let f = fp.factor().unwrap();
    let d1 = random_data(3, mesh.nnodes(), 2, &mut rng);
    let d2 = random_data(3, mesh.nnodes(), 2, &mut rng);
    let (al, be) = (c(0.3, -1.2), c(2.0, 0.5));
    let comb = |x: &[C64], y: &[C64]| -> Vec<C64> { x.iter().zip(y).map(|(a, b)| al * a + be * b).collect() };
    let d = StressData {
        g: comb(&d1.g, &d2.g),
        f: (0..3).map(|i| comb(&d1.f[i], &d2.f[i])).collect(),
        k: (0..2).map(|l| comb(&d1.k[l], &d2.k[l])).collect(),
    };
    let s = f.solve_many(&[d1, d2, d]);
    for i in 0..3 {
        assert!(rel(&s[2].u[i], &comb(&s[0].u[i], &s[1].u[i])) < 1e-11);
    }
    assert!(rel(&s[2].p, &comb(&s[0].p, &s[1].p)) < 1e-11);
}

#[test]
fn conjugate_frequency_gives_conjugate_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for n in [2usize, 3] {
        let cfg = two_layer(n, 1.0);
        let mesh = VerticalMesh::layered(&cfg.depths, 20);
        let xi = [0.45, -0.3];
        let d = random_data(n, mesh.nnodes(), 2, &mut rng);
        let conj = |v: &[C64]| v.iter().map(|x| x.conj()).collect::<Vec<_>>();
        let dc = StressData {
            g: conj(&d.g),
            f: d.f.iter().map(|v| conj(v)).collect(),
            k: d.k.iter().map(|v| conj(v)).collect(),
        };
        let a = solve_stress_problem(&FrequencyProblem::new(xi, &cfg, &mesh, Convention::Stress), &d).unwrap();
        let b = solve_stress_problem(&FrequencyProblem::new([-xi[0], -xi[1]], &cfg, &mesh, Convention::Stress), &dc)
            .unwrap();
        assert!(rel(&conj(&b.p), &a.p) < 1e-12);
        for i in 0..n {
            assert!(rel(&conj(&b.u[i]), &a.u[i]) < 1e-12);
        }
    }
}

#[test]
fn normal_trace_defect_equals_horizontal_flux() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = two_layer(3, 1.0);
    let mesh = VerticalMesh::layered(&cfg.depths, 32);
    for xi in [[0.35, 0.6], [0.0, 0.0], [-1.0, 0.2]] {
        for conv in [Convention::Stress, Convention::NormalStress] {
            let fp = FrequencyProblem::new(xi, &cfg, &mesh, conv);
            let d = Manufactured { om: 2.0, ..Manufactured::new(3, 2, &mut rng) }.data(&fp);
            let sol = solve_stress_problem(&fp, &d).unwrap();
            let h = sol.normal_traces(&mesh);
            for l in 0..2 {
                let lhs = h[l] - mesh.integrate_to_interface(&d.g, l);
                let mut rhs = C64::new(0.0, 0.0);
                for j in 0..2 {
                    rhs -= C64::new(0.0, 2.0 * PI * xi[j]) * mesh.integrate_to_interface(&sol.u[j], l);
                }
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + h[l].norm()), "{lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn high_frequency_inside_trusted_range_is_well_conditioned() {
    let cfg = two_layer(2, 1.0);
    let cut = trusted_cutoff(&cfg);
    assert!(cut > 100.0);
    let mesh = policy_mesh(&cfg, [100.0, 0.0]);
    let fp = FrequencyProblem::new([100.0, 0.0], &cfg, &mesh, Convention::NormalStress);
    let f = fp.factor().unwrap();
    assert!(f.condition() < CONDITION_LIMIT);
    let got = f.solve(&normal_stress_data(2, mesh.nnodes(), &[c(1.0, 0.0), c(0.0, 0.0)])).normal_traces(&mesh);
    let want = exact::normal_traces(&cfg, [100.0, 0.0], Convention::NormalStress, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(rel(&got, &want) < 1e-9, "{got:?} vs {want:?}");
}
