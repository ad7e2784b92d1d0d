use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use oglasses_bench::{noise, samples, synthetic_code};
use oglasses_core::classifiers::entropy::entropy_rate_of;
use oglasses_core::classifiers::models::encode_batch;
use oglasses_core::classifiers::{build_cnn, build_mlp, train, TrainConfig};
use oglasses_core::visualize::{render_structural_entropy, scan};
use oglasses_core::{x86, EntropyRange, Classifier};

fn decode(c: &mut Criterion) {
    let code = synthetic_code(64 * 1024);
    let mut g = c.benchmark_group("decode");
    g.throughput(Throughput::Bytes(code.len() as u64));
    g.bench_function("decode_stream_64k", |b| b.iter(|| x86::decode_stream(black_box(&code))));
    g.finish();
}

fn entropy(c: &mut Criterion) {
    let block = noise(256, 3);
    c.bench_function("entropy_rate_256", |b| b.iter(|| entropy_rate_of(black_box(&block))));
    let file = noise(64 * 1024, 5);
    let mut g = c.benchmark_group("structural_entropy");
    g.throughput(Throughput::Bytes(file.len() as u64));
    g.bench_function("render_64k", |b| b.iter(|| render_structural_entropy(black_box(&file), 256, 128)));
    g.finish();
}

fn forward(c: &mut Criterion) {
    let batch = samples(100);
    let x = encode_batch(batch.iter().map(|s| &s.bytes));
    let cnn = build_cnn(1);
    let mlp = build_mlp(1);
    let mut g = c.benchmark_group("forward_batch_100");
    g.throughput(Throughput::Elements(100));
    g.bench_function("cnn", |b| b.iter(|| cnn.forward(black_box(&x), 100).unwrap()));
    g.bench_function("mlp", |b| b.iter(|| mlp.forward(black_box(&x), 100).unwrap()));
    g.finish();
}

fn train_epoch(c: &mut Criterion) {
    let data = samples(500);
    let cfg = TrainConfig {
        epochs: 1,
        ..TrainConfig::default()
    };
    let mut g = c.benchmark_group("train_epoch_500");
    g.sample_size(10);
    g.bench_function("cnn", |b| {
        b.iter_batched(|| build_cnn(1), |mut net| train(&mut net, &data, None, &cfg).unwrap(), BatchSize::LargeInput)
    });
    g.finish();
}

fn scanning(c: &mut Criterion) {
    let file = synthetic_code(8 * 1024);
    let cnn = Classifier::Cnn(build_cnn(1));
    let ent = Classifier::Entropy(EntropyRange::new(0.408, 0.753).unwrap());
    let mut g = c.benchmark_group("scan_8k");
    g.throughput(Throughput::Bytes(file.len() as u64));
    g.sample_size(10);
    g.bench_function("cnn", |b| b.iter(|| scan(black_box(&file), &cnn, false).unwrap()));
    g.bench_function("entropy", |b| b.iter(|| scan(black_box(&file), &ent, false).unwrap()));
    g.finish();
}

criterion_group!(benches, decode, entropy, forward, train_epoch, scanning);
criterion_main!(benches);
