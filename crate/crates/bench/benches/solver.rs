use criterion::{black_box, criterion_group, criterion_main, Criterion};
use stwave::random::seeded;
use stwave::symbols::compute_n;
use stwave::wave::{residual, solve_wave, ForcingSpec, WaveOptions};
use stwave::{FlatState, Mode, PhysicalConfig};
use stwave_bench::reference_solver;

fn symbol(c: &mut Criterion) {
    let cfg = PhysicalConfig::reference();
    let mut g = c.benchmark_group("symbol");
    for xi in [1e-2, 1.0, 50.0] {
        g.bench_function(format!("compute_n/{xi}"), |b| b.iter(|| compute_n(&cfg, black_box([xi, 0.0])).unwrap()));
    }
    g.finish();
}

fn linear(c: &mut Criterion) {
    let s = reference_solver(16.0, 64);
    let x = FlatState::random(s.disc(), &mut seeded(1), 2.0, Mode::SurfaceTension);
    let d = s.forward(&x);
    let mut g = c.benchmark_group("linear");
    g.sample_size(10);
    g.bench_function("forward/L16_N64", |b| b.iter(|| s.forward(black_box(&x))));
    g.bench_function("inverse/L16_N64", |b| b.iter(|| s.inverse(black_box(&d)).unwrap()));
    g.finish();
}

fn wave(c: &mut Criterion) {
    let s = reference_solver(16.0, 32);
    let f = ForcingSpec::gaussian_bump(s.disc(), 2, [8.0, 0.0], 1.0, 1.0, 1e-2).unwrap();
    let x = FlatState::random(s.disc(), &mut seeded(2), 1.0, Mode::SurfaceTension);
    let x = x.scale(0.01 / x.max_abs());
    let mut g = c.benchmark_group("wave");
    g.sample_size(10);
    g.bench_function("residual/L16_N32", |b| b.iter(|| residual(s.config(), s.disc(), &f, black_box(&x)).unwrap()));
    g.bench_function("solve_wave/L16_N32_eps1e-2", |b| b.iter(|| solve_wave(&s, &f, &WaveOptions::default()).unwrap()));
    g.finish();
}

criterion_group!(benches, symbol, linear, wave);
criterion_main!(benches);
