use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cholqr::sketch::{compose, make_countsketch, make_gaussian};
use cholqr_bench::fixture;

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    group.sample_size(10);
    for (m, n) in [(1000, 20), (4000, 40)] {
        let x = fixture(m, n, 1e-6);
        let gauss = make_gaussian(n, m, 1).unwrap();
        let s1 = (m / 2).max(n);
        let multi = compose(make_gaussian(n, s1, 2).unwrap(), make_countsketch(s1, m, 3).unwrap()).unwrap();
        let count = make_countsketch(s1, m, 4).unwrap();
        group.bench_with_input(BenchmarkId::new("gaussian", m), &x, |b, x| b.iter(|| gauss.apply(x).unwrap()));
        group.bench_with_input(BenchmarkId::new("countsketch", m), &x, |b, x| b.iter(|| count.apply(x).unwrap()));
        group.bench_with_input(BenchmarkId::new("multi", m), &x, |b, x| b.iter(|| multi.apply(x).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, apply);
criterion_main!(benches);
