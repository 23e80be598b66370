use criterion::{black_box, criterion_group, criterion_main, Criterion};

use apm_bench::{delta, profile, table};
use apm_core::contour::{e_delta, e_delta_spec, parity_kernels};
use apm_core::fit::{fit_main, geometric_grid};
use apm_core::moments::{moment_shard, MomentConfig};
use apm_core::sums::{h_small, k_q, s_delta_brute, s_delta_float, Exponent};
use apm_core::{Complex64, SampleSeries};

fn sieve(c: &mut Criterion) {
    c.bench_function("sieve 1e6", |b| b.iter(|| table(black_box(1_000_000))));
}

fn sums(c: &mut Criterion) {
    let (p, d) = (profile(), delta(1));
    c.bench_function("s_delta exact X=200", |b| b.iter(|| s_delta_brute(black_box(200), &d, &p).unwrap()));
    c.bench_function("s_delta float X=2000", |b| b.iter(|| s_delta_float(black_box(&[2000.0]), &d, &p).unwrap()));
    let u: Exponent = "1+1i".parse().unwrap();
    c.bench_function("h_small p^6", |b| b.iter(|| h_small(15, u, black_box(729), &d, &p).unwrap()));
    c.bench_function("k_q N=1e5", |b| b.iter(|| k_q(Complex64::new(2.0, 3.0), 3, &d, &p, black_box(100_000)).unwrap()));
}

fn contour(c: &mut Criterion) {
    let (p, d) = (profile(), delta(1));
    let mut g = c.benchmark_group("contour");
    g.sample_size(10);
    g.bench_function("E_delta X=1000", |b| b.iter(|| e_delta(black_box(1000.0), &d, &p, &e_delta_spec()).unwrap()));
    g.bench_function("parity kernels", |b| b.iter(|| parity_kernels(black_box(Complex64::new(-0.75, 1.0))).unwrap()));
    g.finish();
}

fn moments(c: &mut Criterion) {
    let t = table(1_000_000);
    let mut g = c.benchmark_group("moments");
    g.sample_size(10);
    g.bench_function("shard x=1e6 q in [900,1000]", |b| {
        b.iter(|| moment_shard(1_000_000, black_box(900), 1000, &t, &MomentConfig::default()).unwrap())
    });
    g.finish();
}

fn fit(c: &mut Criterion) {
    let (p, d) = (profile(), delta(1));
    let xs = geometric_grid(100.0, 10_000.0, 1.3);
    let pts = xs.iter().map(|&x| (x, 2.0 * x.powi(5) + x.powi(4) * (3.0 * x.ln() + 1.0) + x.powi(3))).collect();
    let s = SampleSeries::new("synthetic", pts).unwrap();
    c.bench_function("fit_main", |b| b.iter(|| fit_main(black_box(&s), false, &d, &p).unwrap()));
}

criterion_group!(benches, sieve, sums, contour, moments, fit);
criterion_main!(benches);
