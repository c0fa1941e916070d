use criterion::{criterion_group, criterion_main, Criterion};
use lbt_core::frequency::frequency_record;
use lbt_core::par::{map_indexed, map_indexed_seq};
use lbt_core::profiles::cf1;
use lbt_core::radon::{radon_torus, BoundaryFunction, MuChoice};
use lbt_core::tori::TorusSpec;

fn grid(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push((-0.95 + 0.9 * i as f64 / (n - 1) as f64, 0.05 + 0.9 * j as f64 / (n - 1) as f64));
        }
    }
    out
}

fn frequency_scan(c: &mut Criterion) {
    let t = cf1();
    let pts = grid(6);
    let point = |i: usize| frequency_record(&t, pts[i].0, pts[i].1).map(|r| r.jacobian).unwrap_or(f64::NAN);
    let mut g = c.benchmark_group("frequency_scan_6x6");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| map_indexed_seq(pts.len(), point)));
    g.bench_function("parallel", |b| b.iter(|| map_indexed(pts.len(), point)));
    g.finish();
}

fn radon_scan(c: &mut Criterion) {
    let t = cf1();
    let pts = grid(6);
    let f = BoundaryFunction::trig(t.params(), &[(0, 0, 1.0), (1, 1, 0.5)]);
    let point = |i: usize| {
        let spec = TorusSpec::new(&t, pts[i].0, pts[i].1).unwrap();
        radon_torus(&t, &f, MuChoice::NormalIncidence, &spec).unwrap_or(f64::NAN)
    };
    let mut g = c.benchmark_group("radon_scan_6x6");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| map_indexed_seq(pts.len(), point)));
    g.bench_function("parallel", |b| b.iter(|| map_indexed(pts.len(), point)));
    g.finish();
}

criterion_group!(benches, frequency_scan, radon_scan);
criterion_main!(benches);
