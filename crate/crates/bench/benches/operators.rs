use std::hint::black_box;

use bregdc::linops::{diff_adjoint, diff_forward, CircularConv};
use bregdc::prox::{proj_simplex, shrink, svt};
use bregdc::{BlurKernel, DMatrix, ImageGrid, SeededRng};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn prox(c: &mut Criterion) {
    let mut rng = SeededRng::new(1);
    let v = rng.gaussian_vec(4096);
    c.bench_function("shrink/4096", |b| b.iter(|| shrink(black_box(&v), 0.3)));
    c.bench_function("proj_simplex/4096", |b| b.iter(|| proj_simplex(black_box(&v))));

    let mut g = c.benchmark_group("svt");
    for n in [64, 128] {
        let a = DMatrix::from_vec(n, n, rng.gaussian_vec(n * n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| b.iter(|| svt(a, 2.0)));
    }
    g.finish();
}

fn linops(c: &mut Criterion) {
    let x = ImageGrid::from_fn(64, 64, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0);
    c.bench_function("diff/64x64", |b| b.iter(|| diff_adjoint(&diff_forward(black_box(&x)))));
    let conv = CircularConv::new(64, 64);
    let k = BlurKernel::gaussian(7, 1.5).unwrap();
    c.bench_function("conv/64x64/7x7", |b| b.iter(|| conv.apply(black_box(&x), &k)));
}

criterion_group!(benches, prox, linops);
criterion_main!(benches);
