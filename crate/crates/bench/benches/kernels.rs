use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use edgekit_bench::{circle, test_image};
use edgekit_core::cnn::{build_model, extract_features, image_tensor};
use edgekit_core::detectors::{canny, sobel, CannyParams};
use edgekit_core::eval::{match_boundaries, DEFAULT_MAX_DIST};
use edgekit_core::nn::{conv2d_forward, ConvParams, Tensor};

fn detectors(c: &mut Criterion) {
    let img = test_image(256);
    c.bench_function("sobel_256", |b| b.iter(|| sobel(black_box(&img)).unwrap()));
    let p = CannyParams::default();
    c.bench_function("canny_256", |b| b.iter(|| canny(black_box(&img), &p).unwrap()));
}

fn convolution(c: &mut Criterion) {
    let x = Tensor::new(
        vec![1, 16, 128, 128],
        (0..16 * 128 * 128).map(|i| (i % 13) as f64 / 13.0).collect(),
    )
    .unwrap();
    let w = Tensor::new(
        vec![16, 16, 3, 3],
        (0..16 * 16 * 9).map(|i| ((i % 7) as f64 - 3.0) / 10.0).collect(),
    )
    .unwrap();
    let conv = ConvParams::new(w, Tensor::zeros(&[16]), 1, 1).unwrap();
    c.bench_function("conv3x3_16ch_128", |b| {
        b.iter(|| conv2d_forward(black_box(&x), &conv).unwrap())
    });
}

fn features(c: &mut Criterion) {
    let model = build_model(1);
    let img = test_image(256);
    let mut g = c.benchmark_group("cnn");
    g.sample_size(10);
    g.bench_function("extract_features_256", |b| {
        b.iter(|| extract_features(&model, black_box(&img)).unwrap())
    });
    g.bench_function("forward_tensor_256", |b| {
        let x = image_tensor(&img).unwrap();
        b.iter(|| model.forward(black_box(&x)).unwrap())
    });
    g.finish();
}

fn matching(c: &mut Criterion) {
    let gt = circle(256, 80.0, 0.0);
    let pred = circle(256, 81.0, 1.0);
    c.bench_function("match_circle_256", |b| {
        b.iter(|| match_boundaries(black_box(&pred), &gt, DEFAULT_MAX_DIST).unwrap())
    });
}

criterion_group!(benches, detectors, convolution, features, matching);
criterion_main!(benches);
