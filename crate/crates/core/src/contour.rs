//! Pebble outlines: boundary tracing, Fourier-descriptor smoothing, spectral
//! normals and scanline filling.
//!
//! Contours live in continuous canvas coordinates where pixel `(x, y)` covers
//! `[x, x + 1) x [y, y + 1)`, so a traced pixel contributes its centre
//! `(x + 0.5, y + 0.5)`. Scaling a descriptor about the origin therefore maps an
//! input-resolution outline onto an upscaled canvas exactly.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::raster::Mask;
use crate::segmentation::LabelMap;
use crate::tensor::Vec2;

/// Closed polyline; point `k` connects to point `(k + 1) % len`.
///
/// Normalised orientation is counter-clockwise as seen on screen, which with
/// y pointing down means a negative shoelace sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    points: Vec<Vec2>,
}

impl Contour {
    /// Builds a contour, dropping consecutive duplicates and normalising orientation.
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        let mut pts: Vec<Vec2> = Vec::with_capacity(points.len());
        for p in points {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
        while pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(Error::DegenerateContour(pts.len()));
        }
        let mut c = Contour { points: pts };
        if c.signed_area() > 0.0 {
            c.points.reverse();
        }
        Ok(c)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Shoelace area; negative for the normalised orientation.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut s = 0.0;
        for k in 0..n {
            let p = self.points[k];
            let q = self.points[(k + 1) % n];
            s += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * s
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|k| {
                let p = self.points[k];
                let q = self.points[(k + 1) % n];
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .sum()
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }

    /// Resamples to `k` points evenly spaced by arclength, starting at point 0.
    pub fn resample(&self, k: usize) -> Contour {
        assert!(k >= 3);
        let n = self.points.len();
        let total = self.perimeter();
        let mut out = Vec::with_capacity(k);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for j in 0..k {
            let target = total * j as f64 / k as f64;
            loop {
                let p = self.points[seg % n];
                let q = self.points[(seg + 1) % n];
                let len = (q[0] - p[0]).hypot(q[1] - p[1]);
                if target <= seg_start + len || seg >= n - 1 {
                    let t = if len > 0.0 {
                        ((target - seg_start) / len).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                    break;
                }
                seg_start += len;
                seg += 1;
            }
        }
        Contour { points: out }
    }
}

const MOORE: [(isize, isize); 8] = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)];

/// Moore-neighbour trace of the outer boundary of the pixels labelled `id`.
/// Holes are ignored. Points are pixel centres.
pub fn trace_boundary(labels: &LabelMap, id: u32) -> Result<Contour> {
    let (w, h) = (labels.width() as isize, labels.height() as isize);
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && labels.get(x as usize, y as usize) == id;
    let start = labels
        .labels()
        .iter()
        .position(|&l| l == id)
        .ok_or(Error::EmptyRegion(id))?;
    let s = ((start as isize) % w, (start as isize) / w);
    trace_from(s, inside)
}

/// Same as [`trace_boundary`] for the set pixels of a mask, in the mask's canvas coordinates.
pub fn trace_mask(mask: &Mask) -> Result<Contour> {
    let start = mask.bits().iter().position(|&b| b).ok_or(Error::EmptyMask)?;
    let w = mask.width() as isize;
    let s = ((start as isize) % w, (start as isize) / w);
    let c = trace_from(s, |x, y| mask.get(x, y))?;
    let (ox, oy) = mask.origin();
    Contour::new(
        c.points
            .into_iter()
            .map(|p| [p[0] + ox as f64, p[1] + oy as f64])
            .collect(),
    )
}

fn trace_from(s: (isize, isize), inside: impl Fn(isize, isize) -> bool) -> Result<Contour> {
    // `s` is the first set pixel in raster order, so its west neighbour is outside.
    let mut boundary = vec![s];
    let mut cur = s;
    let mut back = 0usize;
    // the trace is closed once the first move out of `s` is about to repeat
    let mut first_move = None;
    while let Some(d) = (1..=8)
        .map(|i| (back + i) % 8)
        .find(|&d| inside(cur.0 + MOORE[d].0, cur.1 + MOORE[d].1))
    {
        if cur == s {
            match first_move {
                Some(f) if f == d => break,
                None => first_move = Some(d),
                _ => {}
            }
        }
        let next = (cur.0 + MOORE[d].0, cur.1 + MOORE[d].1);
        // Backtrack: the neighbour examined just before `next`, expressed relative to `next`.
        let prev = (d + 7) % 8;
        let rel = (cur.0 + MOORE[prev].0 - next.0, cur.1 + MOORE[prev].1 - next.1);
        back = MOORE.iter().position(|&m| m == rel).unwrap_or(0);
        cur = next;
        boundary.push(cur);
        if boundary.len() > 1 << 24 {
            return Err(Error::DegenerateContour(boundary.len()));
        }
    }
    if boundary.len() > 1 && boundary.last() == Some(&s) {
        boundary.pop();
    }
    Contour::new(
        boundary
            .into_iter()
            .map(|(x, y)| [x as f64 + 0.5, y as f64 + 0.5])
            .collect(),
    )
}

/// Complex DFT of a closed contour.
///
/// With `z_k = x_k + i y_k`, the coefficients are
/// `a_n = (1/K) sum_k z_k exp(-2 pi i n k / K)` so that
/// `z_k = sum_n a_n exp(2 pi i n k / K)` over the signed frequencies
/// `n in [-floor(K/2), ceil(K/2) - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierDescriptor {
    /// Natural DFT order: index `j` holds frequency [`FourierDescriptor::frequency`]`(j)`.
    coeffs: Vec<Complex64>,
}

impl FourierDescriptor {
    pub fn from_coefficients(coeffs: Vec<Complex64>) -> Self {
        FourierDescriptor { coeffs }
    }

    /// Original sample count `K`.
    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Signed frequency stored at index `j`.
    pub fn frequency(&self, j: usize) -> isize {
        let k = self.coeffs.len();
        if j < k.div_ceil(2) {
            j as isize
        } else {
            j as isize - k as isize
        }
    }

    /// Coefficient of signed frequency `n`, zero when out of range.
    pub fn coefficient(&self, n: isize) -> Complex64 {
        let k = self.coeffs.len() as isize;
        if n < -(k / 2) || n > (k + 1) / 2 - 1 {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[n.rem_euclid(k) as usize]
    }

    fn active(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(j, &a)| (self.frequency(j) as f64, a))
    }

    /// Keeps the DC term and the `(l - 1) / 2` lowest conjugate frequency pairs.
    pub fn smooth(&self, l: usize) -> Result<FourierDescriptor> {
        if l.is_multiple_of(2) {
            return Err(Error::EvenCoefficientCount(l));
        }
        if l < 3 || l > self.k() {
            return Err(Error::InvalidParameter(format!(
                "coefficient count {l} must lie in [3, {}]",
                self.k()
            )));
        }
        let half = ((l - 1) / 2) as isize;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                if self.frequency(j).abs() > half {
                    Complex64::new(0.0, 0.0)
                } else {
                    a
                }
            })
            .collect();
        Ok(FourierDescriptor { coeffs })
    }

    /// Evaluates the series, times `scale`, at `samples` uniform parameter values.
    pub fn reconstruct(&self, scale: f64, samples: usize) -> Contour {
        assert!(samples >= 3, "need at least 3 samples");
        let terms: Vec<(f64, Complex64)> = self.active().collect();
        let points = (0..samples)
            .map(|j| {
                let u = j as f64 / samples as f64;
                let z: Complex64 = terms
                    .iter()
                    .map(|&(n, a)| a * Complex64::from_polar(1.0, TAU * n * u))
                    .sum();
                [scale * z.re, scale * z.im]
            })
            .collect();
        Contour { points }
    }

    /// Inward unit normals at the `samples` reconstruction points, from the
    /// spectral derivative rotated by 90 degrees. The rotation sense is chosen so
    /// that normals point towards `interior` on average.
    pub fn boundary_normals(&self, scale: f64, samples: usize, interior: Vec2) -> Result<Vec<Vec2>> {
        assert!(samples >= 3, "need at least 3 samples");
        let terms: Vec<(f64, Complex64)> = self.active().collect();
        let magnitude: f64 = terms.iter().map(|(n, a)| n.abs() * a.norm()).sum::<f64>() * scale;
        let mut points = Vec::with_capacity(samples);
        let mut rotated = Vec::with_capacity(samples);
        for j in 0..samples {
            let u = j as f64 / samples as f64;
            let mut z = Complex64::new(0.0, 0.0);
            let mut dz = Complex64::new(0.0, 0.0);
            for &(n, a) in &terms {
                let e = a * Complex64::from_polar(1.0, TAU * n * u);
                z += e;
                dz += e * Complex64::new(0.0, TAU * n);
            }
            let (tx, ty) = (scale * dz.re, scale * dz.im);
            let len = tx.hypot(ty);
            if !(len > 1e-12 * magnitude.max(f64::MIN_POSITIVE)) {
                return Err(Error::ZeroTangent(j));
            }
            points.push([scale * z.re, scale * z.im]);
            rotated.push([-ty / len, tx / len]);
        }
        let score: f64 = points
            .iter()
            .zip(&rotated)
            .map(|(p, n)| n[0] * (interior[0] - p[0]) + n[1] * (interior[1] - p[1]))
            .sum();
        if score < 0.0 {
            rotated.iter_mut().for_each(|n| *n = [-n[0], -n[1]]);
        }
        Ok(rotated)
    }
}

/// Forward transform of a contour (radix-2 FFT when `K` is a power of two).
pub fn to_descriptor(c: &Contour) -> FourierDescriptor {
    let z: Vec<Complex64> = c.points.iter().map(|p| Complex64::new(p[0], p[1])).collect();
    let k = z.len();
    let mut coeffs = if k.is_power_of_two() { fft(z) } else { dft(&z) };
    let inv = 1.0 / k as f64;
    coeffs.iter_mut().for_each(|a| *a *= inv);
    FourierDescriptor { coeffs }
}

fn dft(z: &[Complex64]) -> Vec<Complex64> {
    let k = z.len();
    (0..k)
        .map(|n| {
            z.iter()
                .enumerate()
                .map(|(j, &v)| v * Complex64::from_polar(1.0, -TAU * ((n * j) % k) as f64 / k as f64))
                .sum()
        })
        .collect()
}

/// Iterative radix-2 forward FFT (unnormalised, `exp(-i ...)` kernel).
fn fft(mut a: Vec<Complex64>) -> Vec<Complex64> {
    let n = a.len();
    let bits = n.trailing_zeros();
    if n <= 1 {
        return a;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let step = -TAU / len as f64;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let w = Complex64::from_polar(1.0, step * k as f64);
                let u = a[start + k];
                let v = a[start + k + len / 2] * w;
                a[start + k] = u + v;
                a[start + k + len / 2] = u - v;
            }
        }
        len <<= 1;
    }
    a
}

/// Even-odd scanline fill at pixel centres, clipped to a `width x height` canvas.
/// The mask window is the contour's clipped bounding box.
pub fn rasterize_fill(c: &Contour, width: usize, height: usize) -> Result<Mask> {
    let pts = &c.points;
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x_lo = x_lo.min(p[0]);
        x_hi = x_hi.max(p[0]);
        y_lo = y_lo.min(p[1]);
        y_hi = y_hi.max(p[1]);
    }
    let x0 = (x_lo.floor().max(0.0) as usize).min(width);
    let x1 = (x_hi.ceil().max(0.0) as usize).min(width);
    let y0 = (y_lo.floor().max(0.0) as usize).min(height);
    let y1 = (y_hi.ceil().max(0.0) as usize).min(height);
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::EmptyMask);
    }
    let mut mask = Mask::new((x0 as isize, y0 as isize), x1 - x0, y1 - y0);
    let n = pts.len();
    let mut xs = Vec::new();
    for y in y0..y1 {
        let yc = y as f64 + 0.5;
        xs.clear();
        for k in 0..n {
            let p = pts[k];
            let q = pts[(k + 1) % n];
            if (p[1] <= yc) != (q[1] <= yc) {
                xs.push(p[0] + (yc - p[1]) * (q[0] - p[0]) / (q[1] - p[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // pixel centres x + 0.5 in [a, b)
            let start = (pair[0] - 0.5).ceil().max(x0 as f64);
            let end = (pair[1] - 0.5).ceil().min(x1 as f64);
            let mut x = start;
            while x < end {
                mask.set(x as usize - x0, y - y0, true);
                x += 1.0;
            }
        }
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}

/// Number of arclength samples a traced outline is resampled to before the transform.
pub const DESCRIPTOR_SAMPLES: usize = 128;

/// A pebble's smoothed outline and filled footprint on the output canvas.
#[derive(Clone, Debug)]
pub struct PebbleShape {
    pub id: u32,
    /// Outline in canvas coordinates.
    pub outer: Contour,
    /// 4-connected footprint, windowed at its bounding box.
    pub mask: Mask,
    /// Inward unit normals at the points of `outer`.
    pub normals: Vec<Vec2>,
    /// False when the region was too small to smooth and its raw pixels were used.
    pub smoothed: bool,
}

/// Traces region `id`, keeps `l` Fourier coefficients and rasterises the
/// smoothed outline on a canvas `scale` times the label map. Regions whose
/// smoothed outline degenerates fall back to their own (upscaled) pixels.
pub fn pebble_shape(
    labels: &LabelMap,
    id: u32,
    l: usize,
    scale: f64,
    width: usize,
    height: usize,
) -> Result<PebbleShape> {
    match smoothed_shape(labels, id, l, scale, width, height) {
        Ok(shape) => Ok(shape),
        Err(Error::EvenCoefficientCount(l)) => Err(Error::EvenCoefficientCount(l)),
        Err(_) => raw_shape(labels, id, scale, width, height),
    }
}

fn smoothed_shape(
    labels: &LabelMap,
    id: u32,
    l: usize,
    scale: f64,
    width: usize,
    height: usize,
) -> Result<PebbleShape> {
    let traced = trace_boundary(labels, id)?;
    let desc = to_descriptor(&traced.resample(DESCRIPTOR_SAMPLES)).smooth(l)?;
    let samples = DESCRIPTOR_SAMPLES.max((2.0 * traced.perimeter() * scale).ceil() as usize);
    let outer = desc.reconstruct(scale, samples);
    let centre = desc.coefficient(0) * scale;
    let normals = desc.boundary_normals(scale, samples, [centre.re, centre.im])?;
    let mask = largest_component(&rasterize_fill(&outer, width, height)?);
    Ok(PebbleShape {
        id,
        outer,
        mask,
        normals,
        smoothed: true,
    })
}

fn raw_shape(labels: &LabelMap, id: u32, scale: f64, width: usize, height: usize) -> Result<PebbleShape> {
    let (lw, lh) = (labels.width(), labels.height());
    let (mut x0, mut x1, mut y0, mut y1) = (usize::MAX, 0, usize::MAX, 0);
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for y in 0..lh {
        for x in 0..lw {
            if labels.get(x, y) == id {
                x0 = x0.min(x);
                x1 = x1.max(x);
                y0 = y0.min(y);
                y1 = y1.max(y);
                sx += x as f64 + 0.5;
                sy += y as f64 + 0.5;
                n += 1.0;
            }
        }
    }
    if n == 0.0 {
        return Err(Error::EmptyRegion(id));
    }
    let cx0 = ((x0 as f64 * scale).floor() as usize).min(width - 1);
    let cy0 = ((y0 as f64 * scale).floor() as usize).min(height - 1);
    let cx1 = (((x1 + 1) as f64 * scale).ceil() as usize).clamp(cx0 + 1, width);
    let cy1 = (((y1 + 1) as f64 * scale).ceil() as usize).clamp(cy0 + 1, height);
    let mut mask = Mask::from_fn((cx0 as isize, cy0 as isize), cx1 - cx0, cy1 - cy0, |x, y| {
        let px = (((cx0 + x) as f64 + 0.5) / scale) as usize;
        let py = (((cy0 + y) as f64 + 0.5) / scale) as usize;
        px < lw && py < lh && labels.get(px, py) == id
    });
    let centre = [sx / n * scale, sy / n * scale];
    if mask.is_empty() {
        // a region smaller than one canvas pixel still gets one
        let (cx, cy) = (
            (centre[0] as usize).min(width - 1),
            (centre[1] as usize).min(height - 1),
        );
        mask = Mask::from_fn((cx as isize, cy as isize), 1, 1, |_, _| true);
    }
    let mask = largest_component(&mask);
    let outer = match trace_mask(&mask) {
        Ok(c) => c,
        Err(_) => {
            let (ox, oy) = mask.origin();
            let (fx, fy) = (ox as f64, oy as f64);
            Contour {
                points: vec![[fx, fy], [fx, fy + 1.0], [fx + 1.0, fy + 1.0], [fx + 1.0, fy]],
            }
        }
    };
    let normals = outer
        .points
        .iter()
        .map(|p| {
            let (dx, dy) = (centre[0] - p[0], centre[1] - p[1]);
            let len = dx.hypot(dy);
            if len > 0.0 {
                [dx / len, dy / len]
            } else {
                [0.0, 1.0]
            }
        })
        .collect();
    Ok(PebbleShape {
        id,
        outer,
        mask,
        normals,
        smoothed: false,
    })
}

/// Keeps the largest 4-connected component of a mask (first in raster order on ties).
pub fn largest_component(mask: &Mask) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut comp = vec![u32::MAX; w * h];
    let mut best = (0usize, u32::MAX);
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.bits()[start] || comp[start] != u32::MAX {
            continue;
        }
        comp[start] = next;
        stack.push(start);
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if mask.bits()[j] && comp[j] == u32::MAX {
                    comp[j] = next;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        if size > best.0 {
            best = (size, next);
        }
        next += 1;
    }
    if next <= 1 {
        return mask.clone();
    }
    Mask::from_fn(mask.origin(), w, h, |x, y| comp[y * w + x] == best.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(k: usize, r: f64, c: Vec2) -> Contour {
        Contour::new(
            (0..k)
                .map(|j| {
                    let t = TAU * j as f64 / k as f64;
                    [c[0] + r * t.cos(), c[1] - r * t.sin()]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn orientation_is_normalised() {
        let ccw_math = Contour::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(ccw_math.signed_area() < 0.0);
        assert!((ccw_math.signed_area() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_three_by_three() {
        let map = LabelMap::from_fn(5, 5, |x, y| u32::from((1..=3).contains(&x) && (1..=3).contains(&y)));
        let c = trace_boundary(&map, 1).unwrap();
        assert_eq!(c.len(), 8);
        let mut pts: Vec<(i64, i64)> = c
            .points()
            .iter()
            .map(|p| ((p[0] - 0.5) as i64, (p[1] - 0.5) as i64))
            .collect();
        pts.sort();
        let mut expect = vec![(1, 1), (2, 1), (3, 1), (1, 2), (3, 2), (1, 3), (2, 3), (3, 3)];
        expect.sort();
        assert_eq!(pts, expect);
    }

    #[test]
    fn trace_single_pixel_is_degenerate() {
        let map = LabelMap::from_fn(3, 3, |x, y| u32::from((x, y) == (1, 1)));
        assert!(matches!(trace_boundary(&map, 1), Err(Error::DegenerateContour(_))));
        assert!(matches!(trace_boundary(&map, 7), Err(Error::EmptyRegion(7))));
    }

    #[test]
    fn trace_ignores_holes() {
        let map = LabelMap::from_fn(7, 7, |x, y| {
            let ring = (1..=5).contains(&x) && (1..=5).contains(&y);
            u32::from(ring && (x, y) != (3, 3))
        });
        let c = trace_boundary(&map, 1).unwrap();
        assert_eq!(c.len(), 16);
        assert!(c
            .points()
            .iter()
            .all(|p| p[0] < 2.0 || p[0] > 5.0 || p[1] < 2.0 || p[1] > 5.0));
    }

    #[test]
    fn circle_is_first_harmonic() {
        let c = circle(64, 7.0, [20.0, 30.0]);
        let d = to_descriptor(&c);
        assert!((d.coefficient(0) - Complex64::new(20.0, 30.0)).norm() < 1e-9);
        let first = d.coefficient(1).norm().max(d.coefficient(-1).norm());
        assert!((first - 7.0).abs() < 1e-9);
        for n in 2..32 {
            assert!(d.coefficient(n).norm() < 1e-9 * 7.0);
            assert!(d.coefficient(-n).norm() < 1e-9 * 7.0);
        }
    }

    #[test]
    fn frequency_layout() {
        let d = FourierDescriptor::from_coefficients(vec![Complex64::new(0.0, 0.0); 7]);
        let f: Vec<isize> = (0..7).map(|j| d.frequency(j)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -3, -2, -1]);
        let d = FourierDescriptor::from_coefficients(vec![Complex64::new(0.0, 0.0); 8]);
        let f: Vec<isize> = (0..8).map(|j| d.frequency(j)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn smooth_rejects_even_and_out_of_range() {
        let d = to_descriptor(&circle(16, 3.0, [0.0, 0.0]));
        assert!(matches!(d.smooth(8), Err(Error::EvenCoefficientCount(8))));
        assert!(d.smooth(1).is_err());
        assert!(d.smooth(17).is_err());
        assert!(d.smooth(15).is_ok());
    }

    #[test]
    fn normals_of_circle_point_to_centre() {
        let c = circle(128, 10.0, [50.0, 40.0]);
        let d = to_descriptor(&c).smooth(7).unwrap();
        let ns = d.boundary_normals(1.0, 200, [50.0, 40.0]).unwrap();
        let pts = d.reconstruct(1.0, 200);
        for (p, n) in pts.points().iter().zip(&ns) {
            let to_c = [50.0 - p[0], 40.0 - p[1]];
            let l = to_c[0].hypot(to_c[1]);
            let cos = (n[0] * to_c[0] + n[1] * to_c[1]) / l;
            assert!(cos > (1e-6f64).cos(), "angle too large: {cos}");
        }
    }

    #[test]
    fn zero_tangent_reported() {
        let d = FourierDescriptor::from_coefficients(vec![
            Complex64::new(3.0, 4.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        assert!(matches!(
            d.boundary_normals(1.0, 8, [3.0, 4.0]),
            Err(Error::ZeroTangent(0))
        ));
    }

    #[test]
    fn fill_square_and_empty() {
        let sq = Contour::new(vec![[2.0, 3.0], [12.0, 3.0], [12.0, 13.0], [2.0, 13.0]]).unwrap();
        let m = rasterize_fill(&sq, 30, 30).unwrap();
        assert_eq!(m.count(), 100);
        assert_eq!(m.origin(), (2, 3));
        let sliver = Contour::new(vec![[2.1, 3.1], [2.4, 3.1], [2.4, 3.4]]).unwrap();
        assert!(matches!(rasterize_fill(&sliver, 30, 30), Err(Error::EmptyMask)));
        let outside = Contour::new(vec![[40.0, 40.0], [50.0, 40.0], [50.0, 50.0]]).unwrap();
        assert!(matches!(rasterize_fill(&outside, 30, 30), Err(Error::EmptyMask)));
    }

    #[test]
    fn fill_clips_to_canvas() {
        let sq = Contour::new(vec![[-5.0, -5.0], [5.0, -5.0], [5.0, 5.0], [-5.0, 5.0]]).unwrap();
        let m = rasterize_fill(&sq, 30, 30).unwrap();
        assert_eq!(m.count(), 25);
        assert_eq!(m.origin(), (0, 0));
    }

    #[test]
    fn figure_eight_fills_without_panic() {
        let pts = (0..64)
            .map(|j| {
                let t = TAU * j as f64 / 64.0;
                [20.0 + 10.0 * t.sin(), 20.0 + 8.0 * (t.sin() * t.cos())]
            })
            .collect();
        let c = Contour { points: pts };
        let m = rasterize_fill(&c, 40, 40).unwrap();
        assert!(m.count() > 0);
    }

    #[test]
    fn resample_keeps_shape() {
        let sq = Contour::new(vec![[0.0, 0.0], [0.0, 4.0], [4.0, 4.0], [4.0, 0.0]]).unwrap();
        let r = sq.resample(16);
        assert_eq!(r.len(), 16);
        assert!((r.perimeter() - 16.0).abs() < 1e-9);
        for k in 0..16 {
            let p = r.points()[k];
            let q = r.points()[(k + 1) % 16];
            assert!(((q[0] - p[0]).hypot(q[1] - p[1]) - 1.0).abs() < 1e-9);
        }
    }
    #[test]
    fn shape_of_square_region() {
        let labels = LabelMap::from_fn(40, 40, |x, y| {
            if (10..30).contains(&x) && (10..30).contains(&y) {
                1
            } else {
                0
            }
        });
        let s = pebble_shape(&labels, 1, 7, 1.0, 40, 40).unwrap();
        assert!(s.smoothed);
        let area = s.mask.count() as f64;
        assert!((area - 400.0).abs() < 40.0, "{area}");
        let big = pebble_shape(&labels, 1, 7, 5.0, 200, 200).unwrap();
        let ratio = big.mask.count() as f64 / area;
        assert!((ratio - 25.0).abs() < 1.5, "{ratio}");
        assert_eq!(s.normals.len(), s.outer.len());
        assert!(matches!(
            pebble_shape(&labels, 1, 8, 1.0, 40, 40),
            Err(Error::EvenCoefficientCount(8))
        ));
    }

    #[test]
    fn tiny_region_falls_back_to_pixels() {
        let labels = LabelMap::from_fn(10, 10, |x, y| if (x, y) == (4, 4) { 1 } else { 0 });
        let s = pebble_shape(&labels, 1, 7, 3.0, 30, 30).unwrap();
        assert!(!s.smoothed);
        assert_eq!(s.mask.count(), 9);
        assert_eq!(s.mask.origin(), (12, 12));
        let tiny = pebble_shape(&labels, 1, 7, 0.1, 1, 1).unwrap();
        assert_eq!(tiny.mask.count(), 1);
    }

    #[test]
    fn largest_component_kept() {
        let m = Mask::from_fn((3, 3), 6, 2, |x, _| x != 2);
        let l = largest_component(&m);
        assert_eq!(l.count(), 6);
        assert!(l.get(3, 0) && !l.get(0, 0));
    }
}
