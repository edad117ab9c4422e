use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use retinex_bench::{dark_input, finetune_fixture};
use retinex_core::finetune::{finetune, synthesize_guide};
use retinex_core::metrics::{loe, ssim};
use retinex_core::plane::{diff_conv, diff_conv_transpose};
use retinex_core::solver::decompose;
use retinex_core::{AdjustmentParams, DifferenceKernel, GuideConfig, SolverConfig};

fn difference_ops(c: &mut Criterion) {
    let (low, _) = dark_input(256);
    let plane = low.channel(0);
    let k = DifferenceKernel::horizontal();
    c.bench_function("diff_conv 256", |b| b.iter(|| diff_conv(black_box(plane), k).unwrap()));
    c.bench_function("diff_conv_transpose 256", |b| {
        b.iter(|| diff_conv_transpose(black_box(plane), k).unwrap())
    });
}

fn decomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    group.sample_size(20);
    for n in [64, 128] {
        let (low, _) = dark_input(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &low, |b, img| {
            b.iter(|| decompose(img, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let (low, high) = dark_input(128);
    c.bench_function("ssim 128", |b| b.iter(|| ssim(black_box(&low), black_box(&high)).unwrap()));
    c.bench_function("loe 128", |b| b.iter(|| loe(black_box(&low), black_box(&high)).unwrap()));
}

fn guide_and_finetune(c: &mut Criterion) {
    let (low, state, guide) = finetune_fixture(64);
    c.bench_function("synthesize_guide 64", |b| {
        b.iter(|| synthesize_guide(black_box(&low), &GuideConfig::default()).unwrap())
    });
    let mut group = c.benchmark_group("finetune");
    group.sample_size(10);
    group.bench_function("64 x 30 iterations", |b| {
        b.iter(|| finetune(&state, &low, &guide, AdjustmentParams::default(), 30).unwrap())
    });
    group.finish();
}

criterion_group!(benches, difference_ops, decomposition, metrics, guide_and_finetune);
criterion_main!(benches);
