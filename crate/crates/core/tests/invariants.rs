mod common;

use std::collections::HashSet;

use common::pattern;
use pebble_core::contour::{largest_component, to_descriptor, trace_mask, Contour};
use pebble_core::pipeline::{stylize, JobConfig};
use pebble_core::raster::{linear_to_srgb, srgb_to_linear};
use pebble_core::segmentation::NONE;
use pebble_core::{Error, Mask, RasterImage};
use proptest::prelude::*;

fn blob(w: usize, h: usize, bits: &[bool]) -> Mask {
    largest_component(&Mask::from_fn((0, 0), w, h, |x, y| bits[y * w + x]))
}

/// Set pixels that touch the unbounded exterior through a 4-neighbour.
fn outer_boundary(m: &Mask) -> HashSet<(isize, isize)> {
    let (w, h) = (m.width() as isize, m.height() as isize);
    let mut outside = HashSet::new();
    let mut stack = vec![(-1, -1)];
    while let Some((x, y)) = stack.pop() {
        if x < -1 || y < -1 || x > w || y > h || m.get(x, y) || !outside.insert((x, y)) {
            continue;
        }
        stack.extend([(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]);
    }
    m.iter_set()
        .map(|(x, y)| (x as isize, y as isize))
        .filter(|&(x, y)| {
            [(1, 0), (-1, 0), (0, 1), (0, -1)]
                .iter()
                .any(|(dx, dy)| outside.contains(&(x + dx, y + dy)))
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn trace_terminates_on_random_blobs(bits in prop::collection::vec(any::<bool>(), 144)) {
        let m = blob(12, 12, &bits);
        prop_assume!(!m.is_empty());
        match trace_mask(&m) {
            Ok(c) => {
                let pts: Vec<(isize, isize)> = c.points().iter().map(|p| ((p[0] - 0.5) as isize, (p[1] - 0.5) as isize)).collect();
                prop_assert!(pts.len() <= 4 * m.count());
                for (i, &(x, y)) in pts.iter().enumerate() {
                    prop_assert!(m.get(x, y));
                    let (nx, ny) = pts[(i + 1) % pts.len()];
                    prop_assert!((nx - x).abs() <= 1 && (ny - y).abs() <= 1);
                }
                let visited: HashSet<_> = pts.into_iter().collect();
                prop_assert!(outer_boundary(&m).is_subset(&visited));
            }
            Err(Error::DegenerateContour(n)) => prop_assert!(n < 3 && m.count() <= 2),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn smoothing_is_idempotent(radii in prop::collection::vec(5.0f64..15.0, 8..64), l in (1usize..10).prop_map(|k| 2 * k + 1)) {
        let k = radii.len();
        let pts = radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let t = std::f64::consts::TAU * i as f64 / k as f64;
                [20.0 + r * t.cos(), 20.0 + r * t.sin()]
            })
            .collect();
        let c = Contour::new(pts).unwrap();
        let d = to_descriptor(&c);
        prop_assume!(l <= d.k());
        let once = d.smooth(l).unwrap();
        prop_assert_eq!(once.smooth(l).unwrap(), once.clone());
        // round trip through the samples
        let back = to_descriptor(&Contour::new(d.reconstruct(1.0, k).points().to_vec()).unwrap());
        for (a, b) in back.coefficients().iter().zip(d.coefficients()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn srgb_round_trip(v in 0.0f64..=1.0) {
        prop_assert!((srgb_to_linear(linear_to_srgb(v)) - v).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stylize_partitions_and_shades_in_range(
        w in 24usize..56,
        h in 24usize..56,
        count in 1usize..30,
        seed in any::<u64>(),
        phase in 0.0f64..6.0,
    ) {
        let mut cfg = JobConfig::new("in.png", "out.png");
        cfg.pebble_count = count;
        cfg.seed = seed;
        let img = pattern(w, h, phase);
        let out = stylize(&img, &cfg, None, None).unwrap();
        let seg = &out.segmentation;
        let n = seg.clusters.len();
        prop_assert!(n >= 1 && n <= count);
        prop_assert!(seg.labels.labels().iter().all(|&l| (l as usize) < n));
        for id in 0..n as u32 {
            prop_assert_eq!(seg.labels.component_count(id), 1);
        }
        prop_assert_eq!(out.shapes.len(), n);
        let grout = cfg.lighting_params(1.0).grout;
        for (i, px) in out.image.pixels().iter().enumerate() {
            prop_assert!(px.iter().all(|c| (0.0..=1.0).contains(c)));
            if out.heightfield.owner[i] == NONE {
                prop_assert_eq!(*px, grout);
            }
        }
        prop_assert!(out.heightfield.heights.values().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn flat_image_gets_requested_count() {
    let img = RasterImage::filled(40, 30, [0.5, 0.5, 0.5]);
    let mut cfg = JobConfig::new("in.png", "out.png");
    cfg.pebble_count = 12;
    let out = stylize(&img, &cfg, None, None).unwrap();
    assert_eq!(out.segmentation.clusters.len(), 12);
}
