use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use scrambling_bench::spread_state;
use scrambling_core::sampler::{dpp_sample, sample_one, sample_one_reference, sample_rng};

const LOGICAL_LEN: usize = 256;

fn chain_rule(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain_rule");
    group.sample_size(20);
    for n in [8usize, 16, 32, 64] {
        let s = spread_state(LOGICAL_LEN, n, 7);
        group.throughput(Throughput::Elements(1));
        let mut index = 0u64;
        group.bench_with_input(BenchmarkId::new("fast", n), &s, |b, s| {
            b.iter(|| {
                index += 1;
                sample_one(s, &mut sample_rng(1, index)).unwrap()
            })
        });
        if n <= 16 {
            group.bench_with_input(BenchmarkId::new("reference", n), &s, |b, s| {
                b.iter(|| {
                    index += 1;
                    sample_one_reference(s, &mut sample_rng(1, index)).unwrap()
                })
            });
        }
        group.bench_with_input(BenchmarkId::new("dpp", n), &s, |b, s| {
            b.iter(|| {
                index += 1;
                dpp_sample(s, &mut sample_rng(1, index)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, chain_rule);
criterion_main!(benches);
