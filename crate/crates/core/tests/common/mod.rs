#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pebble_core::heightfield::{
    assemble_system, heights_from_solution, outer_gradient_magnitude, solve_pebble, LaplaceSystem, PebbleDomain,
    SystemWeights,
};
use pebble_core::{Mask, RasterImage, ScalarField, Vec2};

/// Dense normal-equations solve of a sparse system, via Cholesky.
pub fn dense_solve(sys: &LaplaceSystem) -> Vec<f64> {
    let a = DMatrix::from_fn(sys.rows(), sys.unknown_count(), |_, _| 0.0);
    let mut a = a;
    for (r, c, v) in sys.triplets() {
        a[(r, c)] += v;
    }
    let b = DVector::from_column_slice(&sys.rhs);
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let chol = ata.cholesky().expect("normal matrix is positive definite");
    chol.solve(&atb).iter().copied().collect()
}

/// Filled disk `(x - c)^2 + (y - c)^2 <= r^2` with `c = (n - 1) / 2`.
pub fn disk(n: usize, r: f64) -> Mask {
    let c = (n as f64 - 1.0) / 2.0;
    Mask::from_fn((0, 0), n, n, |x, y| {
        let (dx, dy) = (x as f64 - c, y as f64 - c);
        dx * dx + dy * dy <= r * r
    })
}

/// Unit vectors from each outer-ring pixel towards `c`.
pub fn radial_normals(dom: &PebbleDomain, c: Vec2) -> Vec<Vec2> {
    dom.outer_ring
        .iter()
        .map(|&(x, y)| {
            let (nx, ny) = (c[0] - x as f64, c[1] - y as f64);
            let n = nx.hypot(ny);
            [nx / n, ny / n]
        })
        .collect()
}

/// Heights of the 41x41 disk pebble at a given beta, from CG and from the dense oracle.
pub fn disk_pebble(beta: f64) -> (ScalarField, ScalarField) {
    let dom = PebbleDomain::from_mask(disk(41, 20.5), 0.85).unwrap();
    let g = outer_gradient_magnitude(beta, 0.85, dom.dmax);
    let sys = assemble_system(&dom, &radial_normals(&dom, [20.0, 20.0]), g, SystemWeights::default()).unwrap();
    let (cg, _) = solve_pebble(&sys, &dom, 1e-8).unwrap();
    let dense = heights_from_solution(&sys, &dom, &dense_solve(&sys));
    (cg, dense)
}

pub fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Left half dark blue, right half light orange, meeting at `x = edge`.
pub fn vertical_edge(w: usize, h: usize, edge: usize) -> RasterImage {
    RasterImage::from_fn(w, h, |x, _| if x < edge { [0.05, 0.08, 0.3] } else { [0.9, 0.6, 0.2] })
}

/// Smooth colourful test pattern with some structure at several scales.
pub fn pattern(w: usize, h: usize, phase: f64) -> RasterImage {
    RasterImage::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        let r = 0.5 + 0.45 * (7.0 * u + 3.0 * v + phase).sin();
        let g = 0.5 + 0.45 * (5.0 * v - 2.0 * u * u * 6.0 + phase).cos();
        let b = if ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt() < 0.25 {
            0.85
        } else {
            0.2 + 0.3 * u
        };
        [r, g, b]
    })
}
