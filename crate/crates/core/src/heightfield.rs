//! Per-pebble relief: distance transform, inner plateau, and a heightfield
//! from a weighted least-squares Laplace problem on the annulus between the
//! outer outline (height 0) and the inner plateau (height 1).
//!
//! Three row families make up the over-determined system:
//!
//! * a 5-point Laplacian = 0 at every annulus pixel off the outer ring,
//! * Dirichlet anchors: outer ring = 0, inner ring = 1,
//! * gradient rows: along the inward normal at the outer ring the slope equals
//!   `beta / (t_dist * d_max)`, and at the inner ring the surface is flat.
//!
//! The normal equations are solved by Jacobi-preconditioned conjugate gradient.

use crate::error::{Error, Result};
use crate::raster::{Mask, ScalarField};
use crate::segmentation::NONE;
use crate::tensor::Vec2;

const NEIGHBOURS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

/// Exact Euclidean distance from each set pixel to the nearest unset pixel.
/// Pixels outside the mask window count as unset, so a lone pixel has distance 1.
/// Returns the field over the mask window and its maximum.
pub fn distance_transform(mask: &Mask) -> Result<(ScalarField, f64)> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    let inf = ((pw * pw + ph * ph) as f64) * 4.0;
    let mut f = vec![0.0; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as isize, y as isize) {
                f[(y + 1) * pw + x + 1] = inf;
            }
        }
    }
    // Separable squared-distance transform: columns, then rows.
    let mut buf = vec![0.0; pw.max(ph)];
    let mut out = vec![0.0; pw.max(ph)];
    for x in 0..pw {
        for y in 0..ph {
            buf[y] = f[y * pw + x];
        }
        edt_1d(&buf[..ph], &mut out[..ph]);
        for y in 0..ph {
            f[y * pw + x] = out[y];
        }
    }
    for y in 0..ph {
        buf[..pw].copy_from_slice(&f[y * pw..(y + 1) * pw]);
        edt_1d(&buf[..pw], &mut out[..pw]);
        f[y * pw..(y + 1) * pw].copy_from_slice(&out[..pw]);
    }
    let mut dmax: f64 = 0.0;
    let field = ScalarField::from_fn(w, h, |x, y| {
        if mask.get(x as isize, y as isize) {
            let d = f[(y + 1) * pw + x + 1].sqrt();
            dmax = dmax.max(d);
            d
        } else {
            0.0
        }
    });
    Ok((field, dmax))
}

/// Lower envelope of parabolas (Felzenszwalb and Huttenlocher).
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[1] = f64::INFINITY;
                break;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    let mut k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let diff = q as f64 - p as f64;
        *dq = diff * diff + f[p];
    }
}

/// Pixels with `dist / dmax >= t_dist`. When that leaves fewer than four pixels,
/// falls back to the distance maximum plus its in-mask 4-neighbours; the flag
/// reports whether the fallback was used.
pub fn inner_contour(mask: &Mask, dist: &ScalarField, dmax: f64, t_dist: f64) -> (Mask, bool) {
    let (w, h) = (mask.width(), mask.height());
    let thresholded = Mask::from_fn(mask.origin(), w, h, |x, y| {
        mask.get(x as isize, y as isize) && dist.get(x, y) / dmax >= t_dist
    });
    if thresholded.count() >= 4 {
        return (thresholded, false);
    }
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (x, y) in mask.iter_set() {
        if dist.get(x, y) > best.0 {
            best = (dist.get(x, y), x, y);
        }
    }
    let mut inner = Mask::new(mask.origin(), w, h);
    inner.set(best.1, best.2, true);
    for (dx, dy) in NEIGHBOURS {
        let (x, y) = (best.1 as isize + dx, best.2 as isize + dy);
        if mask.get(x, y) {
            inner.set(x as usize, y as usize, true);
        }
    }
    (inner, true)
}

/// `beta / (t_dist * d_max)`: slope of the pebble at its outer outline.
pub fn outer_gradient_magnitude(beta: f64, t_dist: f64, dmax: f64) -> f64 {
    beta / (t_dist * dmax)
}

/// Annular solve domain of one pebble, in the pebble's mask window.
#[derive(Clone, Debug)]
pub struct PebbleDomain {
    pub mask: Mask,
    pub dist: ScalarField,
    pub dmax: f64,
    /// Plateau held at height 1.
    pub inner: Mask,
    pub inner_fallback: bool,
    /// Annulus pixels anchored to 0 and carrying the outer slope constraint.
    pub outer_ring: Vec<(usize, usize)>,
    /// Plateau pixels touching the annulus.
    pub inner_ring: Vec<(usize, usize)>,
}

impl PebbleDomain {
    pub fn from_mask(mask: Mask, t_dist: f64) -> Result<Self> {
        if !(t_dist > 0.0 && t_dist < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "t_dist must lie in (0, 1), got {t_dist}"
            )));
        }
        let (dist, dmax) = distance_transform(&mask)?;
        let (inner, inner_fallback) = inner_contour(&mask, &dist, dmax, t_dist);
        let outer_ring = mask
            .iter_set()
            .filter(|&(x, y)| !inner.get(x as isize, y as isize))
            .filter(|&(x, y)| {
                NEIGHBOURS
                    .iter()
                    .any(|(dx, dy)| !mask.get(x as isize + dx, y as isize + dy))
            })
            .collect();
        Ok(Self::assemble_parts(
            mask,
            dist,
            dmax,
            inner,
            inner_fallback,
            outer_ring,
        ))
    }

    /// Domain with an explicit plateau and outer ring.
    pub fn from_parts(mask: Mask, inner: Mask, outer_ring: Vec<(usize, usize)>) -> Result<Self> {
        let (dist, dmax) = distance_transform(&mask)?;
        Ok(Self::assemble_parts(mask, dist, dmax, inner, false, outer_ring))
    }

    fn assemble_parts(
        mask: Mask,
        dist: ScalarField,
        dmax: f64,
        inner: Mask,
        inner_fallback: bool,
        outer_ring: Vec<(usize, usize)>,
    ) -> Self {
        let inner_ring = inner
            .iter_set()
            .filter(|&(x, y)| {
                NEIGHBOURS.iter().any(|(dx, dy)| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    mask.get(nx, ny) && !inner.get(nx, ny)
                })
            })
            .collect();
        PebbleDomain {
            mask,
            dist,
            dmax,
            inner,
            inner_fallback,
            outer_ring,
            inner_ring,
        }
    }

    #[inline]
    pub fn in_omega(&self, x: isize, y: isize) -> bool {
        self.mask.get(x, y) && !self.inner.get(x, y)
    }

    pub fn omega_count(&self) -> usize {
        self.mask.count() - self.inner.count()
    }

    /// Canvas position of a window pixel's centre.
    pub fn pixel_center(&self, x: usize, y: usize) -> Vec2 {
        let (ox, oy) = self.mask.origin();
        [(ox + x as isize) as f64 + 0.5, (oy + y as isize) as f64 + 0.5]
    }

    /// Inward normal for every outer-ring pixel, copied from the nearest contour sample.
    pub fn nearest_normals(&self, samples: &[Vec2], normals: &[Vec2]) -> Vec<Vec2> {
        assert_eq!(samples.len(), normals.len());
        self.outer_ring
            .iter()
            .map(|&(x, y)| {
                let c = self.pixel_center(x, y);
                let mut best = (f64::INFINITY, [0.0, 0.0]);
                for (s, n) in samples.iter().zip(normals) {
                    let d = (s[0] - c[0]).powi(2) + (s[1] - c[1]).powi(2);
                    if d < best.0 {
                        best = (d, *n);
                    }
                }
                best.1
            })
            .collect()
    }

    /// Height profile `min(1, dist / (t_dist * dmax))` over the mask window.
    pub fn cone_profile(&self, t_dist: f64) -> ScalarField {
        let top = t_dist * self.dmax;
        ScalarField::from_fn(self.mask.width(), self.mask.height(), |x, y| {
            if self.mask.get(x as isize, y as isize) {
                (self.dist.get(x, y) / top).min(1.0)
            } else {
                0.0
            }
        })
    }
}

/// Row weights of the least-squares system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemWeights {
    pub laplace: f64,
    pub dirichlet: f64,
    /// Outer-ring slope rows.
    pub gradient: f64,
    /// Inner-ring zero-slope rows.
    pub flat: f64,
}

impl Default for SystemWeights {
    fn default() -> Self {
        SystemWeights {
            laplace: 1.0,
            dirichlet: 10.0,
            gradient: 10.0,
            flat: 0.5,
        }
    }
}

impl SystemWeights {
    /// Laplacian and Dirichlet rows only.
    pub fn dirichlet_only(dirichlet: f64) -> Self {
        SystemWeights {
            laplace: 1.0,
            dirichlet,
            gradient: 0.0,
            flat: 0.0,
        }
    }
}

/// Sparse weighted least-squares system `A u ~ b` in CSR form.
#[derive(Clone, Debug)]
pub struct LaplaceSystem {
    /// Window pixel of each unknown.
    pub unknowns: Vec<(usize, usize)>,
    /// Unknown index per window pixel, [`NONE`] where the height is fixed.
    index: Vec<u32>,
    width: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LaplaceSystem {
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.unknowns.len()
    }

    pub fn unknown_at(&self, x: usize, y: usize) -> Option<usize> {
        let i = self.index[y * self.width + x];
        (i != NONE).then_some(i as usize)
    }

    /// `(row, column, value)` for every stored entry.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(self.vals.len());
        for r in 0..self.rows() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push((r, self.cols[k] as usize, self.vals[k]));
            }
        }
        t
    }

    fn mul(&self, u: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[k] * u[self.cols[k] as usize];
            }
            *o = s;
        }
    }

    fn mul_transpose(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &vr) in v.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k] as usize] += self.vals[k] * vr;
            }
        }
    }
}

struct Builder<'a> {
    dom: &'a PebbleDomain,
    index: Vec<u32>,
    width: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<(u32, f64)>,
}

impl Builder<'_> {
    /// Known height at a window position, `None` for an unknown.
    fn known(&self, x: isize, y: isize) -> Option<f64> {
        if !self.dom.mask.get(x, y) {
            return Some(0.0);
        }
        let i = self.index[y as usize * self.width + x as usize];
        if i != NONE {
            None
        } else {
            // plateau interior
            Some(1.0)
        }
    }

    /// Appends `weight * (sum coef * u) = weight * rhs`, folding known heights into the right side.
    fn row(&mut self, terms: &[((isize, isize), f64)], rhs: f64, weight: f64) {
        if weight == 0.0 {
            return;
        }
        let mut b = rhs;
        self.scratch.clear();
        for &((x, y), c) in terms {
            match self.known(x, y) {
                Some(v) => b -= c * v,
                None => {
                    let i = self.index[y as usize * self.width + x as usize];
                    match self.scratch.iter_mut().find(|(j, _)| *j == i) {
                        Some(e) => e.1 += c,
                        None => self.scratch.push((i, c)),
                    }
                }
            }
        }
        self.scratch.retain(|&(_, c)| c != 0.0);
        if self.scratch.is_empty() {
            return;
        }
        self.scratch.sort_by_key(|&(i, _)| i);
        for &(i, c) in &self.scratch {
            self.cols.push(i);
            self.vals.push(weight * c);
        }
        self.rhs.push(weight * b);
        self.row_ptr.push(self.cols.len());
    }
}

/// Builds the least-squares system. `normals` holds one inward unit normal per
/// outer-ring pixel, in `dom.outer_ring` order.
pub fn assemble_system(
    dom: &PebbleDomain,
    normals: &[Vec2],
    grad_mag: f64,
    weights: SystemWeights,
) -> Result<LaplaceSystem> {
    if dom.omega_count() == 0 {
        return Err(Error::InvalidParameter("pebble has an empty annulus".into()));
    }
    assert_eq!(normals.len(), dom.outer_ring.len(), "one normal per outer-ring pixel");
    let (w, h) = (dom.mask.width(), dom.mask.height());
    let mut index = vec![NONE; w * h];
    let mut unknowns = Vec::new();
    let mut is_inner_ring = vec![false; w * h];
    for &(x, y) in &dom.inner_ring {
        is_inner_ring[y * w + x] = true;
    }
    for (x, y) in dom.mask.iter_set() {
        if dom.in_omega(x as isize, y as isize) || is_inner_ring[y * w + x] {
            index[y * w + x] = unknowns.len() as u32;
            unknowns.push((x, y));
        }
    }
    let mut is_outer = vec![false; w * h];
    for &(x, y) in &dom.outer_ring {
        is_outer[y * w + x] = true;
    }

    let mut b = Builder {
        dom,
        index,
        width: w,
        row_ptr: vec![0],
        cols: Vec::new(),
        vals: Vec::new(),
        rhs: Vec::new(),
        scratch: Vec::new(),
    };

    let mut terms = Vec::with_capacity(5);
    for &(x, y) in &unknowns {
        if !dom.in_omega(x as isize, y as isize) || is_outer[y * w + x] {
            continue;
        }
        let (xi, yi) = (x as isize, y as isize);
        terms.clear();
        let mut centre = 0.0;
        for (dx, dy) in NEIGHBOURS {
            if dom.mask.get(xi + dx, yi + dy) {
                terms.push(((xi + dx, yi + dy), -1.0));
                centre += 1.0;
            }
        }
        terms.push(((xi, yi), centre));
        b.row(&terms, 0.0, weights.laplace);
    }

    for &(x, y) in &dom.outer_ring {
        b.row(&[((x as isize, y as isize), 1.0)], 0.0, weights.dirichlet);
    }
    for &(x, y) in &dom.inner_ring {
        b.row(&[((x as isize, y as isize), 1.0)], 1.0, weights.dirichlet);
    }

    for (&(x, y), n) in dom.outer_ring.iter().zip(normals) {
        let (xi, yi) = (x as isize, y as isize);
        let sx = if n[0] >= 0.0 { 1 } else { -1 };
        let sy = if n[1] >= 0.0 { 1 } else { -1 };
        let (ax, ay) = (n[0].abs(), n[1].abs());
        b.row(
            &[((xi + sx, yi), 1.0), ((xi, yi), -1.0)],
            grad_mag * ax,
            weights.gradient * ax,
        );
        b.row(
            &[((xi, yi + sy), 1.0), ((xi, yi), -1.0)],
            grad_mag * ay,
            weights.gradient * ay,
        );
    }
    for &(x, y) in &dom.inner_ring {
        let (xi, yi) = (x as isize, y as isize);
        for (dx, dy) in NEIGHBOURS {
            if dom.in_omega(xi + dx, yi + dy) {
                b.row(&[((xi + dx, yi + dy), 1.0), ((xi, yi), -1.0)], 0.0, weights.flat);
            }
        }
    }

    Ok(LaplaceSystem {
        unknowns,
        index: b.index,
        width: w,
        row_ptr: b.row_ptr,
        cols: b.cols,
        vals: b.vals,
        rhs: b.rhs,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub unknowns: usize,
    pub iterations: usize,
    /// `|A^T (b - A u)| / |A^T b|` at exit.
    pub residual: f64,
    pub converged: bool,
}

/// Solves the normal equations `A^T A u = A^T b` by Jacobi-preconditioned
/// conjugate gradient, stopping at relative residual `tol` or `max_iter`.
pub fn solve_least_squares(sys: &LaplaceSystem, tol: f64, max_iter: usize) -> (Vec<f64>, SolveStats) {
    let n = sys.unknown_count();
    let m = sys.rows();
    let mut diag = vec![0.0; n];
    for k in 0..sys.vals.len() {
        diag[sys.cols[k] as usize] += sys.vals[k] * sys.vals[k];
    }
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut u = vec![0.0; n];
    let mut r = vec![0.0; n];
    sys.mul_transpose(&sys.rhs, &mut r);
    let norm_b = norm(&r);
    let mut stats = SolveStats {
        unknowns: n,
        ..Default::default()
    };
    if norm_b == 0.0 {
        stats.converged = true;
        return (u, stats);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; m];
    let mut atap = vec![0.0; n];
    stats.residual = 1.0;
    while stats.iterations < max_iter {
        sys.mul(&p, &mut ap);
        sys.mul_transpose(&ap, &mut atap);
        let denom = dot(&p, &atap);
        if denom <= 0.0 {
            break;
        }
        let alpha = rz / denom;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * atap[i];
        }
        stats.iterations += 1;
        stats.residual = norm(&r) / norm_b;
        if stats.residual <= tol {
            stats.converged = true;
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (u, stats)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves one pebble and returns heights over its mask window: the solution on
/// the annulus, exactly 1 on the plateau, 0 outside the mask.
pub fn solve_pebble(sys: &LaplaceSystem, dom: &PebbleDomain, tol: f64) -> Result<(ScalarField, SolveStats)> {
    let max_iter = 10 * sys.unknown_count().max(1);
    let (u, stats) = solve_least_squares(sys, tol, max_iter);
    if !stats.converged {
        return Err(Error::NotConverged {
            iterations: stats.iterations,
            residual: stats.residual,
        });
    }
    Ok((heights_from_solution(sys, dom, &u), stats))
}

/// Spreads an unknown vector back onto the mask window.
pub fn heights_from_solution(sys: &LaplaceSystem, dom: &PebbleDomain, u: &[f64]) -> ScalarField {
    let mut hf = ScalarField::zeros(dom.mask.width(), dom.mask.height());
    for (&(x, y), &v) in sys.unknowns.iter().zip(u) {
        hf.set(x, y, v);
    }
    for (x, y) in dom.inner.iter_set() {
        hf.set(x, y, 1.0);
    }
    hf
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeightParams {
    pub t_dist: f64,
    pub beta: f64,
    pub weights: SystemWeights,
    pub tolerance: f64,
}

impl Default for HeightParams {
    fn default() -> Self {
        HeightParams {
            t_dist: 0.85,
            beta: 2.0,
            weights: SystemWeights::default(),
            tolerance: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchKind {
    Solved,
    /// Plateau fallback or empty annulus: clamped distance cone.
    Degenerate,
    /// Solver failed to converge: clamped distance cone.
    Fallback,
}

/// One pebble's heights over its mask window on the canvas.
#[derive(Clone, Debug)]
pub struct PebblePatch {
    pub id: u32,
    pub mask: Mask,
    pub heights: ScalarField,
    pub kind: PatchKind,
    pub stats: SolveStats,
}

/// Builds the relief of one pebble. `samples`/`normals` are the smoothed outline
/// points and their inward normals in canvas coordinates.
pub fn build_pebble(
    id: u32,
    mask: Mask,
    samples: &[Vec2],
    normals: &[Vec2],
    params: &HeightParams,
) -> Result<PebblePatch> {
    let dom = PebbleDomain::from_mask(mask, params.t_dist)?;
    if dom.inner_fallback || dom.omega_count() == 0 {
        let heights = dom.cone_profile(params.t_dist);
        return Ok(PebblePatch {
            id,
            mask: dom.mask,
            heights,
            kind: PatchKind::Degenerate,
            stats: SolveStats::default(),
        });
    }
    let ring_normals = dom.nearest_normals(samples, normals);
    let g = outer_gradient_magnitude(params.beta, params.t_dist, dom.dmax);
    let sys = assemble_system(&dom, &ring_normals, g, params.weights)?;
    match solve_pebble(&sys, &dom, params.tolerance) {
        Ok((heights, stats)) => Ok(PebblePatch {
            id,
            mask: dom.mask,
            heights,
            kind: PatchKind::Solved,
            stats,
        }),
        Err(Error::NotConverged { iterations, residual }) => Ok(PebblePatch {
            id,
            heights: dom.cone_profile(params.t_dist),
            mask: dom.mask,
            kind: PatchKind::Fallback,
            stats: SolveStats {
                unknowns: sys.unknown_count(),
                iterations,
                residual,
                converged: false,
            },
        }),
        Err(e) => Err(e),
    }
}

/// Canvas heightfield with per-pixel pebble ownership.
#[derive(Clone, Debug)]
pub struct HeightField {
    pub heights: ScalarField,
    /// Owning pebble id per pixel, [`NONE`] for grout.
    pub owner: Vec<u32>,
}

impl HeightField {
    pub fn width(&self) -> usize {
        self.heights.width()
    }

    pub fn height(&self) -> usize {
        self.heights.height()
    }

    #[inline]
    pub fn owner_at(&self, x: usize, y: usize) -> u32 {
        self.owner[y * self.heights.width() + x]
    }
}

/// Takes, per pixel, the highest patch covering it; ties keep the lower id.
pub fn composite_heights(patches: &[PebblePatch], width: usize, height: usize) -> HeightField {
    let mut heights = ScalarField::zeros(width, height);
    let mut owner = vec![NONE; width * height];
    let mut order: Vec<&PebblePatch> = patches.iter().collect();
    order.sort_by_key(|p| p.id);
    for p in order {
        let (ox, oy) = p.mask.origin();
        for (x, y) in p.mask.iter_set() {
            let (cx, cy) = (ox + x as isize, oy + y as isize);
            if cx < 0 || cy < 0 || cx >= width as isize || cy >= height as isize {
                continue;
            }
            let i = cy as usize * width + cx as usize;
            let v = p.heights.get(x, y);
            if owner[i] == NONE || v > heights.values()[i] {
                heights.values_mut()[i] = v;
                owner[i] = p.id;
            }
        }
    }
    HeightField { heights, owner }
}
