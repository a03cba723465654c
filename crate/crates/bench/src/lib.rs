//! Synthetic inputs shared by the benchmarks.

use pebble_core::contour::Contour;
use pebble_core::heightfield::{assemble_system, outer_gradient_magnitude, LaplaceSystem, PebbleDomain, SystemWeights};
use pebble_core::{Mask, RasterImage};

/// Smooth colour pattern with a bright disk in the middle.
pub fn pattern(w: usize, h: usize) -> RasterImage {
    RasterImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        let r = 0.5 + 0.45 * (7.0 * u + 3.0 * v).sin();
        let g = 0.5 + 0.45 * (5.0 * v - 12.0 * u * u).cos();
        let b = if (u - 0.5).hypot(v - 0.5) < 0.25 {
            0.85
        } else {
            0.2 + 0.3 * u
        };
        [r, g, b]
    })
}

/// Wobbly closed outline of `k` points.
pub fn blob_contour(k: usize) -> Contour {
    let pts = (0..k)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / k as f64;
            let r = 20.0 + 3.0 * (3.0 * t).sin() + 1.5 * (7.0 * t).cos();
            [30.0 + r * t.cos(), 30.0 + r * t.sin()]
        })
        .collect();
    Contour::new(pts).expect("blob has more than three points")
}

/// Disk pebble of radius `r` with the default system, normals pointing at the centre.
pub fn disk_system(r: f64) -> (PebbleDomain, LaplaceSystem) {
    let n = (2.0 * r).ceil() as usize + 3;
    let c = (n as f64 - 1.0) / 2.0;
    let mask = Mask::from_fn((0, 0), n, n, |x, y| (x as f64 - c).hypot(y as f64 - c) <= r);
    let dom = PebbleDomain::from_mask(mask, 0.85).expect("disk is non-empty");
    let normals: Vec<_> = dom
        .outer_ring
        .iter()
        .map(|&(x, y)| {
            let (nx, ny) = (c - x as f64, c - y as f64);
            let l = nx.hypot(ny).max(1e-12);
            [nx / l, ny / l]
        })
        .collect();
    let g = outer_gradient_magnitude(2.0, 0.85, dom.dmax);
    let sys = assemble_system(&dom, &normals, g, SystemWeights::default()).expect("disk has an annulus");
    (dom, sys)
}
