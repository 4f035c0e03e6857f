use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qga_bench::instance_suite;
use qga_core::{solve_qga, LowerBound};

fn bounds(c: &mut Criterion) {
    for k in [5, 10] {
        let suite = instance_suite(20, k, 7);
        let mut group = c.benchmark_group(format!("solve_k{k}"));
        group.sample_size(20);
        for bound in LowerBound::ALL {
            group.bench_with_input(BenchmarkId::from_parameter(bound), &suite, |b, suite| {
                b.iter(|| {
                    for g in suite {
                        black_box(solve_qga(black_box(g), bound));
                    }
                })
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bounds);
criterion_main!(benches);
