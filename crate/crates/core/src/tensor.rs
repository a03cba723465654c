//! Structure tensor field, its eigen-structure, orientation coherence and the
//! per-location basis used by the oriented segmentation metric.

use rayon::prelude::*;

use crate::raster::RasterImage;

pub type Vec2 = [f64; 2];

/// Symmetric 2x2 matrix `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StructureTensor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl StructureTensor {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        StructureTensor { a, b, c }
    }

    /// Positive semidefinite within `1e-9 * (a + c + 1)`.
    pub fn is_psd(&self) -> bool {
        let eps = 1e-9 * (self.a + self.c + 1.0);
        self.a >= -eps && self.c >= -eps && self.b * self.b <= self.a * self.c + eps
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorEigen {
    pub lambda1: f64,
    pub lambda2: f64,
    pub e1: Vec2,
    pub e2: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBasis {
    pub b1: Vec2,
    pub b2: Vec2,
    /// `true` when the basis came from the tensor eigenvectors rather than the default.
    pub from_tensor: bool,
}

impl OrientedBasis {
    /// The fixed basis `b1 = d`, `b2 = perp(d)`.
    pub fn from_default(dir: Vec2) -> Self {
        OrientedBasis {
            b1: dir,
            b2: perp(dir),
            from_tensor: false,
        }
    }

    pub fn axes() -> Self {
        OrientedBasis {
            b1: [1.0, 0.0],
            b2: [0.0, 1.0],
            from_tensor: false,
        }
    }
}

#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    [-v[1], v[0]]
}

/// Per-pixel structure tensors of an image.
#[derive(Clone, Debug)]
pub struct TensorField {
    width: usize,
    height: usize,
    data: Vec<StructureTensor>,
}

impl TensorField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn tensors(&self) -> &[StructureTensor] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> StructureTensor {
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation at a continuous position given in pixel-index
    /// coordinates (pixel `(x, y)` sits at `(x, y)`), clamped to the field.
    pub fn sample(&self, pos: Vec2) -> StructureTensor {
        let x = pos[0].clamp(0.0, (self.width - 1) as f64);
        let y = pos[1].clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let lerp = |p: StructureTensor, q: StructureTensor, t: f64| StructureTensor {
            a: p.a + (q.a - p.a) * t,
            b: p.b + (q.b - p.b) * t,
            c: p.c + (q.c - p.c) * t,
        };
        let top = lerp(self.get(x0, y0), self.get(x1, y0), fx);
        let bottom = lerp(self.get(x0, y1), self.get(x1, y1), fx);
        lerp(top, bottom, fy)
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Derivative-of-Gaussian weights, normalised so a unit-slope ramp has derivative 1.
fn gaussian_derivative_kernel(sigma: f64) -> Vec<f64> {
    let g = gaussian_kernel(sigma);
    let radius = (g.len() / 2) as isize;
    let mut k: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(i, &w)| (i as isize - radius) as f64 * w)
        .collect();
    let norm: f64 = k
        .iter()
        .enumerate()
        .map(|(i, &w)| (i as isize - radius) as f64 * w)
        .sum();
    k.iter_mut().for_each(|v| *v /= norm);
    k
}

/// Correlates each row with `kernel` using clamp-to-edge borders.
fn filter_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let line = &src[y * width..(y + 1) * width];
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &w) in kernel.iter().enumerate() {
                let xi = (x as isize + k as isize - r).clamp(0, width as isize - 1) as usize;
                acc += w * line[xi];
            }
            *o = acc;
        }
    });
    out
}

/// Correlates each column with `kernel` using clamp-to-edge borders.
fn filter_cols(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (k, &w) in kernel.iter().enumerate() {
            let yi = (y as isize + k as isize - r).clamp(0, height as isize - 1) as usize;
            let line = &src[yi * width..(yi + 1) * width];
            for (o, &v) in row.iter_mut().zip(line) {
                *o += w * v;
            }
        }
    });
    out
}

/// Gaussian-integrated colour structure tensor: the sum over RGB channels of
/// `grad I_ch grad I_ch^T`, with gradients from derivative-of-Gaussian filters
/// at `sigma_grad`, smoothed by a Gaussian at `sigma_int`.
pub fn compute_tensor_field(img: &RasterImage, sigma_grad: f64, sigma_int: f64) -> TensorField {
    assert!(sigma_grad > 0.0 && sigma_int > 0.0, "tensor scales must be positive");
    let (w, h) = (img.width(), img.height());
    let g = gaussian_kernel(sigma_grad);
    let dg = gaussian_derivative_kernel(sigma_grad);

    let mut a = vec![0.0; w * h];
    let mut b = vec![0.0; w * h];
    let mut c = vec![0.0; w * h];
    for ch in 0..3 {
        let plane: Vec<f64> = img.pixels().iter().map(|p| p[ch]).collect();
        let gx = filter_cols(&filter_rows(&plane, w, h, &dg), w, h, &g);
        let gy = filter_rows(&filter_cols(&plane, w, h, &dg), w, h, &g);
        for i in 0..w * h {
            a[i] += gx[i] * gx[i];
            b[i] += gx[i] * gy[i];
            c[i] += gy[i] * gy[i];
        }
    }

    let gi = gaussian_kernel(sigma_int);
    let smooth = |v: &[f64]| filter_cols(&filter_rows(v, w, h, &gi), w, h, &gi);
    let (a, b, c) = (smooth(&a), smooth(&b), smooth(&c));
    let data = (0..w * h)
        .map(|i| StructureTensor::new(a[i].max(0.0), b[i], c[i].max(0.0)))
        .collect();
    TensorField {
        width: w,
        height: h,
        data,
    }
}

fn normalize_sign(mut v: Vec2) -> Vec2 {
    // round-off residue on an axis-aligned vector
    for c in &mut v {
        if c.abs() < 1e-12 {
            *c = 0.0;
        }
    }
    if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Closed-form eigen-decomposition of a symmetric 2x2 tensor.
///
/// `e1` is sign-normalised so `e1.y >= 0` (ties: `e1.x >= 0`); `e2 = perp(e1)`.
pub fn eigen_decompose(t: StructureTensor) -> TensorEigen {
    let half_trace = 0.5 * (t.a + t.c);
    let half_diff = 0.5 * (t.a - t.c);
    let disc = half_diff.hypot(t.b);
    let lambda1 = half_trace + disc;
    let lambda2 = (half_trace - disc).max(0.0);

    let scale = t.a.abs() + t.c.abs() + t.b.abs();
    let e1 = if disc <= 1e-14 * scale || disc == 0.0 {
        [1.0, 0.0]
    } else {
        // Two algebraically equivalent eigenvector candidates; take the better conditioned.
        let u = [t.b, lambda1 - t.a];
        let v = [lambda1 - t.c, t.b];
        let (nu, nv) = (u[0].hypot(u[1]), v[0].hypot(v[1]));
        if nu >= nv {
            [u[0] / nu, u[1] / nu]
        } else {
            [v[0] / nv, v[1] / nv]
        }
    };
    let e1 = normalize_sign(e1);
    TensorEigen {
        lambda1,
        lambda2,
        e1,
        e2: perp(e1),
    }
}

/// Orientation coherence `sqrt((l1 - l2) / (l1 + l2 + k))`, in `[0, 1)`.
pub fn coherence(lambda1: f64, lambda2: f64, k: f64) -> f64 {
    ((lambda1 - lambda2).max(0.0) / (lambda1 + lambda2 + k)).sqrt()
}

/// Eigenvector basis when `c > t_coh`, otherwise the default direction and its perpendicular.
pub fn select_basis(eig: &TensorEigen, c: f64, t_coh: f64, default_dir: Vec2) -> OrientedBasis {
    if c > t_coh {
        OrientedBasis {
            b1: eig.e1,
            b2: eig.e2,
            from_tensor: true,
        }
    } else {
        OrientedBasis::from_default(default_dir)
    }
}
