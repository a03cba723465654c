use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pebble_bench::{blob_contour, disk_system, pattern};
use pebble_core::contour::to_descriptor;
use pebble_core::heightfield::solve_pebble;
use pebble_core::pipeline::{SIGMA_GRAD, SIGMA_INT_FACTOR};
use pebble_core::rgb_to_lab;
use pebble_core::segmentation::{grid_interval, run_slic};
use pebble_core::tensor::compute_tensor_field;
use pebble_core::SegParams;

fn slic(c: &mut Criterion) {
    let img = pattern(320, 240);
    let params = SegParams {
        pebble_count: 300,
        ..SegParams::default()
    };
    let s = grid_interval(320, 240, 300);
    let lab = rgb_to_lab(&img);
    c.bench_function("tensor_field_320x240", |b| {
        b.iter(|| compute_tensor_field(black_box(&img), SIGMA_GRAD, SIGMA_INT_FACTOR * s))
    });
    let tensors = compute_tensor_field(&img, SIGMA_GRAD, SIGMA_INT_FACTOR * s);
    c.bench_function("slic_320x240_300", |b| {
        b.iter(|| run_slic(black_box(&lab), &tensors, &params).unwrap())
    });
}

fn fourier(c: &mut Criterion) {
    let contour = blob_contour(128);
    c.bench_function("descriptor_128", |b| b.iter(|| to_descriptor(black_box(&contour))));
    let d = to_descriptor(&contour).smooth(7).unwrap();
    c.bench_function("reconstruct_l7_512", |b| b.iter(|| black_box(&d).reconstruct(4.0, 512)));
}

fn solver(c: &mut Criterion) {
    for r in [8.0, 16.0] {
        let (dom, sys) = disk_system(r);
        c.bench_function(&format!("solve_disk_r{r}"), |b| {
            b.iter(|| solve_pebble(black_box(&sys), &dom, 1e-8).unwrap())
        });
    }
}

criterion_group!(benches, slic, fourier, solver);
criterion_main!(benches);
