use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use nccap::{cond_entropy_output, ChannelParameter};
use nccap_bench::rll_chain;

fn output_entropy(c: &mut Criterion) {
    let x = rll_chain(1, None);
    let eps = ChannelParameter::new(1e-2).unwrap();
    let mut group = c.benchmark_group("cond_entropy_output");
    group.sample_size(10);
    for n in [8usize, 12, 16] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| cond_entropy_output(black_box(&x), eps, n).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, output_entropy);
criterion_main!(benches);
