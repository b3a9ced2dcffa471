use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use bms_core::graphbuild::{accumulate, build_all, compile_for, MetaRule};
use bms_core::ingest::{synth_dataset, DatasetSchema, PlantedRule};
use bms_core::numerics::Tensor;

fn build(c: &mut Criterion) {
    let records = synth_dataset("crime", 1, 2000, &PlantedRule::MonthArea { classes: 10 }).unwrap();
    let schema = DatasetSchema::builtin("crime").unwrap();
    let rule = compile_for(&MetaRule::builtin("crime").unwrap(), &schema).unwrap();
    c.bench_function("build_all crime 2000", |b| b.iter(|| build_all(&records, &schema, &rule).unwrap()));
    let (space, sgs) = build_all(&records, &schema, &rule).unwrap();
    c.bench_function("accumulate crime 2000", |b| b.iter(|| accumulate(&sgs, &space).unwrap()));
}

fn matmul(c: &mut Criterion) {
    let a = Tensor::from_fn(256, 64, |i, j| ((i * 31 + j * 7) % 13) as f64 / 13.0);
    let w = Tensor::from_fn(64, 64, |i, j| ((i + 3 * j) % 5) as f64 - 2.0);
    c.bench_function("matmul 256x64 * 64x64", |b| b.iter(|| a.matmul(&w).unwrap()));
    c.bench_function("matmul_t 256x64 * (64x64)^T", |b| {
        b.iter_batched(|| w.clone(), |w| a.matmul_t(&w).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, build, matmul);
criterion_main!(benches);
