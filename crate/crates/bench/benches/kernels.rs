use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gakit::selftest::random_label_matrix;
use gakit::{build_index, gak_bruteforce, gak_forward, loss_and_gradient, query_topk, IndexInput};
use gakit::{KernelConfig, RepresentationVector};
use gakit_bench::{random_vectors, sequence_pair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_gak(c: &mut Criterion) {
    let cfg = KernelConfig::default();
    let mut group = c.benchmark_group("gak_forward");
    for len in [4usize, 16, 64, 128] {
        let (x, y) = sequence_pair(len, len, 1);
        group.bench_with_input(BenchmarkId::from_parameter(len), &len, |b, _| {
            b.iter(|| gak_forward(black_box(x.slices()), black_box(y.slices()), &cfg).unwrap())
        });
    }
    group.finish();

    let (x, y) = sequence_pair(5, 5, 2);
    c.bench_function("gak_bruteforce/5x5", |b| {
        b.iter(|| gak_bruteforce(black_box(x.slices()), black_box(y.slices()), &cfg).unwrap())
    });
}

fn bench_loss(c: &mut Criterion) {
    let vectors = random_vectors(64, 16, 3);
    let labels = random_label_matrix(&mut ChaCha8Rng::seed_from_u64(4), 64);
    c.bench_function("loss_and_gradient/64x16", |b| {
        b.iter(|| loss_and_gradient(black_box(&vectors), &labels).unwrap())
    });
}

fn bench_query(c: &mut Criterion) {
    let inputs = random_vectors(10_000, 128, 5)
        .into_iter()
        .enumerate()
        .map(|(i, v)| IndexInput::new(format!("d{i}"), v, ""))
        .collect();
    let index = build_index(inputs, &KernelConfig::default()).unwrap();
    let q = RepresentationVector::new("q", 1, &random_vectors(1, 128, 6)[0]).unwrap();
    c.bench_function("query_topk/10k x 128", |b| {
        b.iter(|| query_topk(&index, black_box(&q), 10).unwrap())
    });
}

criterion_group!(benches, bench_gak, bench_loss, bench_query);
criterion_main!(benches);
