use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use polyharm::riesz::potential_grid;
use polyharm::{convolve_radial, newtonian_potential_chain, Kernel, RadialExpr, SmoothPlateau};

fn riesz(c: &mut Criterion) {
    let f = RadialExpr::shifted(1.0, 1.0, 2.0).unwrap();
    let k = Kernel::riesz(2.0);
    let mut g = c.benchmark_group("convolve_radial");
    for r in [0.1, 2.0, 100.0] {
        g.bench_with_input(BenchmarkId::new("riesz N=5", r), &r, |b, &r| {
            b.iter(|| convolve_radial(&k, &f, 1.5, 5, black_box(r)).unwrap())
        });
    }
    let plateau = SmoothPlateau::new(1.0).unwrap();
    let log = Kernel::log(3.0);
    g.bench_function("log-borderline plateau r=2", |b| {
        b.iter(|| convolve_radial(&log, &plateau, 1.0, 5, black_box(2.0)).unwrap())
    });
    g.finish();
}

fn potential(c: &mut Criterion) {
    let plateau = SmoothPlateau::new(1.0).unwrap();
    let grid = potential_grid();
    c.bench_function("newtonian chain N=9 m=2", |b| {
        b.iter(|| newtonian_potential_chain(&plateau, 9, 2, black_box(&grid)).unwrap())
    });
}

criterion_group!(benches, riesz, potential);
criterion_main!(benches);
