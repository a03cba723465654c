//! Oriented, randomised SLIC oversegmentation: one region per pebble.
//!
//! Each cluster measures spatial offsets in its own orthonormal basis, taken from
//! the structure tensor at its centre when the local orientation is coherent and
//! from a default direction otherwise. The two basis components are weighted by
//! random per-cluster factors, which gives elongated pebbles that run along image
//! edges with varied size and aspect ratio.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{LabImage, ScalarField};
use crate::rng::{substream, CLUSTER_DOMAIN};
use crate::tensor::{coherence, eigen_decompose, select_basis, OrientedBasis, TensorField, Vec2};

/// Label value for pixels not (yet) claimed by any cluster.
pub const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct SegParams {
    pub pebble_count: usize,
    /// Aspect compression across edges.
    pub phi_a1: f64,
    pub t_coh: f64,
    pub default_dir: Vec2,
    /// SLIC compactness `m`, in Lab units.
    pub compactness: f64,
    pub iterations: usize,
    pub seed: u64,
    pub importance: Option<ScalarField>,
    pub importance_factor: f64,
    /// Coherence regulariser `K`.
    pub coherence_k: f64,
    /// Let every cluster search the whole image instead of its local window.
    pub full_window: bool,
    /// Draw per-cluster shape factors; when off every cluster uses `r1 = r2 = 0`,
    /// i.e. `alpha1 = phi_a1` and `alpha2 = 1`.
    pub random_shapes: bool,
}

impl Default for SegParams {
    fn default() -> Self {
        SegParams {
            pebble_count: 2000,
            phi_a1: 3.0,
            t_coh: 0.5,
            default_dir: [0.0, 1.0],
            compactness: 10.0,
            iterations: 10,
            seed: 0,
            importance: None,
            importance_factor: 4.0,
            coherence_k: 1e-4,
            full_window: false,
            random_shapes: true,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.pebble_count < 1 {
            return bad("pebble count must be at least 1".into());
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1".into());
        }
        if !(self.compactness > 0.0) {
            return bad(format!("compactness must be positive, got {}", self.compactness));
        }
        if !(self.phi_a1 >= 1.0) {
            return bad(format!("phi_a1 must be at least 1, got {}", self.phi_a1));
        }
        if !(self.t_coh > 0.0 && self.t_coh < 1.0) {
            return bad(format!("coherence threshold must be in (0, 1), got {}", self.t_coh));
        }
        if !(self.importance_factor > 1.0) {
            return bad(format!(
                "importance factor must exceed 1, got {}",
                self.importance_factor
            ));
        }
        if !(self.coherence_k > 0.0) {
            return bad("coherence constant K must be positive".into());
        }
        let n = self.default_dir[0].hypot(self.default_dir[1]);
        if (n - 1.0).abs() > 1e-9 {
            return bad("default direction must be a unit vector".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub id: u32,
    /// Pixel-index coordinates.
    pub center: Vec2,
    pub mean_lab: [f64; 3],
    pub basis: OrientedBasis,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r1: f64,
    pub r2: f64,
    /// Random size term `r2^2 + 1`.
    pub phi_s: f64,
    /// Seed-density multiplier: 1, or the importance factor for clusters seeded inside the mask.
    pub density: f64,
}

/// Random shape factors for one cluster: `(phi_a2, phi_s, alpha1, alpha2)`.
pub fn shape_factors(phi_a1: f64, r1: f64, r2: f64) -> (f64, f64, f64, f64) {
    let phi_a2 = (phi_a1 - 1.0) * r1 * r1 + 1.0;
    let phi_s = r2 * r2 + 1.0;
    (phi_a2, phi_s, phi_a1 * phi_s, phi_a2 * phi_s)
}

impl Cluster {
    /// Local seed interval for this cluster.
    pub fn interval(&self, grid_interval: f64) -> f64 {
        grid_interval / self.density.sqrt()
    }
}

/// Anisotropic spatial distance `sqrt(alpha1 (v.b1)^2 + alpha2 (v.b2)^2)`.
pub fn spatial_distance(v: Vec2, basis: &OrientedBasis, alpha1: f64, alpha2: f64) -> f64 {
    let p1 = v[0] * basis.b1[0] + v[1] * basis.b1[1];
    let p2 = v[0] * basis.b2[0] + v[1] * basis.b2[1];
    (alpha1 * p1 * p1 + alpha2 * p2 * p2).sqrt()
}

/// SLIC joint distance `sqrt(d_lab^2 + (d_s / S)^2 m^2)`.
pub fn combined_distance(d_lab: f64, d_s: f64, m: f64, s: f64) -> f64 {
    let t = d_s / s * m;
    (d_lab * d_lab + t * t).sqrt()
}

/// Distance from `cluster` to a pixel with colour `lab` at pixel-index position `pos`.
pub fn cluster_distance(cluster: &Cluster, pos: Vec2, lab: [f64; 3], m: f64, s: f64) -> f64 {
    let v = [pos[0] - cluster.center[0], pos[1] - cluster.center[1]];
    combined_distance(
        lab_distance(lab, cluster.mean_lab),
        spatial_distance(v, &cluster.basis, cluster.alpha1, cluster.alpha2),
        m,
        s,
    )
}

#[inline]
fn lab_distance(p: [f64; 3], q: [f64; 3]) -> f64 {
    let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Grid interval `S = sqrt(width * height / pebble_count)`.
pub fn grid_interval(width: usize, height: usize, pebble_count: usize) -> f64 {
    ((width * height) as f64 / pebble_count as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(LabelMap { width, height, labels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        LabelMap { width, height, labels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Distinct labels present, ascending, excluding [`NONE`].
    pub fn distinct(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.labels.iter().copied().filter(|&l| l != NONE).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Pixel counts indexed by label, for labels below `n`.
    pub fn areas(&self, n: usize) -> Vec<usize> {
        let mut a = vec![0; n];
        for &l in &self.labels {
            if (l as usize) < n {
                a[l as usize] += 1;
            }
        }
        a
    }

    /// Number of 4-connected components of one label.
    pub fn component_count(&self, label: u32) -> usize {
        let comps = components(self);
        comps.label.iter().filter(|&&l| l == label).count()
    }
}

struct Components {
    /// Component index per pixel.
    of_pixel: Vec<u32>,
    label: Vec<u32>,
    pixels: Vec<Vec<usize>>,
}

fn components(map: &LabelMap) -> Components {
    let (w, h) = (map.width, map.height);
    let mut of_pixel = vec![u32::MAX; w * h];
    let mut label = Vec::new();
    let mut pixels = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if of_pixel[start] != u32::MAX {
            continue;
        }
        let id = label.len() as u32;
        let l = map.labels[start];
        let mut members = Vec::new();
        of_pixel[start] = id;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            members.push(p);
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if of_pixel[q] == u32::MAX && map.labels[q] == l {
                    of_pixel[q] = id;
                    queue.push_back(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        label.push(l);
        pixels.push(members);
    }
    Components {
        of_pixel,
        label,
        pixels,
    }
}

fn gradient_magnitude(lab: &LabImage, x: usize, y: usize) -> f64 {
    let (w, h) = (lab.width(), lab.height());
    let xl = x.saturating_sub(1);
    let xr = (x + 1).min(w - 1);
    let yu = y.saturating_sub(1);
    let yd = (y + 1).min(h - 1);
    let dx = lab_distance(lab.get(xr, y), lab.get(xl, y));
    let dy = lab_distance(lab.get(x, yd), lab.get(x, yu));
    dx * dx + dy * dy
}

fn grid_points(width: usize, height: usize, count: usize) -> Vec<Vec2> {
    // exactly `count` seeds: rows of near-equal length, alternate rows staggered
    let interval = grid_interval(width, height, count);
    let ny = ((height as f64 / interval).round() as usize).clamp(1, count);
    let sy = height as f64 / ny as f64;
    let mut pts = Vec::with_capacity(count);
    for j in 0..ny {
        let nx = (j + 1) * count / ny - j * count / ny;
        let sx = width as f64 / nx as f64;
        let shift = if j % 2 == 0 { -0.25 * sx } else { 0.25 * sx };
        for i in 0..nx {
            let x = ((i as f64 + 0.5) * sx + shift - 0.5).clamp(0.0, (width - 1) as f64);
            let y = ((j as f64 + 0.5) * sy - 0.5).clamp(0.0, (height - 1) as f64);
            pts.push([x, y]);
        }
    }
    pts
}

fn refresh_basis(cluster: &mut Cluster, tensors: &TensorField, params: &SegParams) {
    let eig = eigen_decompose(tensors.sample(cluster.center));
    let c = coherence(eig.lambda1, eig.lambda2, params.coherence_k);
    cluster.basis = select_basis(&eig, c, params.t_coh, params.default_dir);
}

/// Seeds clusters on a row-staggered grid of interval `S` (denser inside the
/// importance mask), draws each cluster's random shape factors from its own
/// stream, and moves every seed to the lowest-gradient pixel of its 3x3 neighbourhood.
pub fn init_clusters(lab: &LabImage, tensors: &TensorField, params: &SegParams) -> Result<Vec<Cluster>> {
    params.validate()?;
    let (w, h) = (lab.width(), lab.height());
    if params.pebble_count > w * h {
        return Err(Error::TooManyPebbles {
            requested: params.pebble_count,
            pixels: w * h,
        });
    }
    let mut seeds: Vec<(Vec2, f64)> = Vec::new();
    match &params.importance {
        None => seeds.extend(grid_points(w, h, params.pebble_count).into_iter().map(|p| (p, 1.0))),
        Some(imp) => {
            if imp.width() != w || imp.height() != h {
                return Err(Error::InvalidParameter(format!(
                    "importance map is {}x{}, image is {w}x{h}",
                    imp.width(),
                    imp.height()
                )));
            }
            let inside = |p: Vec2| imp.get(p[0].round() as usize, p[1].round() as usize) >= 0.5;
            seeds.extend(
                grid_points(w, h, params.pebble_count)
                    .into_iter()
                    .filter(|&p| !inside(p))
                    .map(|p| (p, 1.0)),
            );
            let fine = ((params.pebble_count as f64 * params.importance_factor).round() as usize).min(w * h);
            seeds.extend(
                grid_points(w, h, fine)
                    .into_iter()
                    .filter(|&p| inside(p))
                    .map(|p| (p, params.importance_factor)),
            );
        }
    }

    let clusters = seeds
        .into_iter()
        .enumerate()
        .map(|(i, (p, density))| {
            let (cx, cy) = (p[0].round() as usize, p[1].round() as usize);
            let mut best = (gradient_magnitude(lab, cx, cy), cx, cy);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let x = cx as isize + dx;
                    let y = cy as isize + dy;
                    if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                        continue;
                    }
                    let g = gradient_magnitude(lab, x as usize, y as usize);
                    if g < best.0 {
                        best = (g, x as usize, y as usize);
                    }
                }
            }
            let mut rng = substream(params.seed, CLUSTER_DOMAIN, i as u64);
            let (r1, r2): (f64, f64) = if params.random_shapes {
                (rng.random(), rng.random())
            } else {
                (0.0, 0.0)
            };
            let (_, phi_s, alpha1, alpha2) = shape_factors(params.phi_a1, r1, r2);
            let mut c = Cluster {
                id: i as u32,
                center: [best.1 as f64, best.2 as f64],
                mean_lab: lab.get(best.1, best.2),
                basis: OrientedBasis::from_default(params.default_dir),
                alpha1: alpha1 * density,
                alpha2: alpha2 * density,
                r1,
                r2,
                phi_s,
                density,
            };
            refresh_basis(&mut c, tensors, params);
            c
        })
        .collect();
    Ok(clusters)
}

/// Per-cluster constants for the assignment inner loop.
struct Probe {
    center: Vec2,
    lab: [f64; 3],
    b1: Vec2,
    b2: Vec2,
    k1: f64,
    k2: f64,
    x0: usize,
    x1: usize,
}

/// Assigns each pixel to the cluster minimising the joint distance among the
/// clusters whose search window covers it. Ties go to the lower cluster index.
fn assign(lab: &LabImage, clusters: &[Cluster], s: f64, params: &SegParams) -> Vec<u32> {
    let (w, h) = (lab.width(), lab.height());
    let m2 = params.compactness * params.compactness / (s * s);
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); h];
    let mut probes = Vec::with_capacity(clusters.len());
    for (i, c) in clusters.iter().enumerate() {
        let (x0, x1, y0, y1) = if params.full_window {
            (0, w - 1, 0, h - 1)
        } else {
            let r = c.interval(s) * c.phi_s;
            let lo = |v: f64| (v - r).floor().max(0.0) as usize;
            let hi = |v: f64, n: usize| ((v + r).ceil() as usize).min(n - 1);
            (lo(c.center[0]), hi(c.center[0], w), lo(c.center[1]), hi(c.center[1], h))
        };
        for row in rows.iter_mut().take(y1 + 1).skip(y0) {
            row.push(i as u32);
        }
        probes.push(Probe {
            center: c.center,
            lab: c.mean_lab,
            b1: c.basis.b1,
            b2: c.basis.b2,
            k1: c.alpha1 * m2,
            k2: c.alpha2 * m2,
            x0,
            x1,
        });
    }

    let mut labels = vec![NONE; w * h];
    labels.par_chunks_mut(w).enumerate().for_each(|(y, out)| {
        let mut best = vec![f64::INFINITY; w];
        let fy = y as f64;
        for &ci in &rows[y] {
            let p = &probes[ci as usize];
            let vy = fy - p.center[1];
            for x in p.x0..=p.x1 {
                let vx = x as f64 - p.center[0];
                let q = lab.get(x, y);
                let dl = [q[0] - p.lab[0], q[1] - p.lab[1], q[2] - p.lab[2]];
                let d1 = vx * p.b1[0] + vy * p.b1[1];
                let d2 = vx * p.b2[0] + vy * p.b2[1];
                let d = dl[0] * dl[0] + dl[1] * dl[1] + dl[2] * dl[2] + p.k1 * d1 * d1 + p.k2 * d2 * d2;
                if d < best[x] {
                    best[x] = d;
                    out[x] = ci;
                }
            }
        }
    });
    labels
}

/// Moves each cluster to the mean position and colour of its pixels and
/// refreshes its basis. Returns the pixel count per cluster.
fn update(
    lab: &LabImage,
    labels: &[u32],
    clusters: &mut [Cluster],
    tensors: &TensorField,
    params: &SegParams,
) -> Vec<usize> {
    let w = lab.width();
    let mut sums = vec![[0.0f64; 5]; clusters.len()];
    let mut counts = vec![0usize; clusters.len()];
    for (i, &l) in labels.iter().enumerate() {
        if l == NONE {
            continue;
        }
        let q = lab.pixels()[i];
        let s = &mut sums[l as usize];
        s[0] += (i % w) as f64;
        s[1] += (i / w) as f64;
        s[2] += q[0];
        s[3] += q[1];
        s[4] += q[2];
        counts[l as usize] += 1;
    }
    for ((c, s), &n) in clusters.iter_mut().zip(&sums).zip(&counts) {
        if n == 0 {
            continue;
        }
        let n = n as f64;
        c.center = [s[0] / n, s[1] / n];
        c.mean_lab = [s[2] / n, s[3] / n, s[4] / n];
        refresh_basis(c, tensors, params);
    }
    counts
}

/// Output of [`run_slic`].
#[derive(Clone, Debug)]
pub struct Segmentation {
    pub labels: LabelMap,
    /// Surviving clusters; `clusters[i].id == i` and labels index into this list.
    pub clusters: Vec<Cluster>,
    /// Seed indices of clusters that ended with no pixels.
    pub dropped: Vec<u32>,
    /// Grid interval `S`.
    pub interval: f64,
}

/// Label map straight from the last assignment pass, before connectivity enforcement.
#[derive(Clone, Debug)]
pub struct RawAssignment {
    pub labels: LabelMap,
    pub clusters: Vec<Cluster>,
    pub dropped: Vec<u32>,
}

/// Runs the assignment/update iterations followed by a final assignment with the
/// converged clusters. Every pixel's label is the argmin of the joint distance
/// over the clusters whose windows cover it.
pub fn iterate_slic(lab: &LabImage, tensors: &TensorField, params: &SegParams) -> Result<RawAssignment> {
    let mut clusters = init_clusters(lab, tensors, params)?;
    let s = grid_interval(lab.width(), lab.height(), params.pebble_count);
    let mut dropped = Vec::new();
    let mut drop_empty = |clusters: &mut Vec<Cluster>, counts: &[usize]| {
        let mut k = 0;
        clusters.retain(|c| {
            let keep = counts[k] > 0;
            if !keep {
                dropped.push(c.id);
            }
            k += 1;
            keep
        });
    };
    for _ in 0..params.iterations {
        let labels = assign(lab, &clusters, s, params);
        let counts = update(lab, &labels, &mut clusters, tensors, params);
        drop_empty(&mut clusters, &counts);
    }
    let mut labels = assign(lab, &clusters, s, params);
    let mut counts = vec![0usize; clusters.len()];
    for &l in &labels {
        if l != NONE {
            counts[l as usize] += 1;
        }
    }
    if counts.contains(&0) {
        let remap: Vec<u32> = {
            let mut next = 0u32;
            counts
                .iter()
                .map(|&n| {
                    if n > 0 {
                        next += 1;
                        next - 1
                    } else {
                        NONE
                    }
                })
                .collect()
        };
        drop_empty(&mut clusters, &counts);
        for l in labels.iter_mut().filter(|l| **l != NONE) {
            *l = remap[*l as usize];
        }
    }
    dropped.sort_unstable();
    Ok(RawAssignment {
        labels: LabelMap::new(lab.width(), lab.height(), labels)?,
        clusters,
        dropped,
    })
}

/// Full oriented SLIC: iterate, assign, then enforce connectivity and renumber
/// clusters so ids are `0..n`.
pub fn run_slic(lab: &LabImage, tensors: &TensorField, params: &SegParams) -> Result<Segmentation> {
    let raw = iterate_slic(lab, tensors, params)?;
    let s = grid_interval(lab.width(), lab.height(), params.pebble_count);
    let (labels, clusters) = enforce_connectivity(&raw.labels, &raw.clusters, lab);
    Ok(Segmentation {
        labels,
        clusters,
        dropped: raw.dropped,
        interval: s,
    })
}

/// Makes every label's pixel set 4-connected.
///
/// Each label keeps its largest component; every other fragment, and any
/// unlabelled pixel, is merged into the adjacent region whose mean colour is
/// nearest. Labels index into `clusters`; the returned clusters are renumbered
/// `0..n`, so there are never more regions than input clusters.
pub fn enforce_connectivity(labels: &LabelMap, clusters: &[Cluster], lab: &LabImage) -> (LabelMap, Vec<Cluster>) {
    let w = labels.width;
    let comps = components(labels);
    let n_comp = comps.label.len();

    let mut largest: Vec<Option<usize>> = vec![None; clusters.len()];
    for (ci, &l) in comps.label.iter().enumerate() {
        if l == NONE {
            continue;
        }
        let slot = &mut largest[l as usize];
        if slot.is_none_or(|b| comps.pixels[ci].len() > comps.pixels[b].len()) {
            *slot = Some(ci);
        }
    }

    let comp_mean = |ci: usize| {
        let mut s = [0.0; 3];
        for &p in &comps.pixels[ci] {
            let q = lab.pixels()[p];
            s[0] += q[0];
            s[1] += q[1];
            s[2] += q[2];
        }
        let n = comps.pixels[ci].len() as f64;
        [s[0] / n, s[1] / n, s[2] / n]
    };
    let mut out_clusters: Vec<Cluster> = Vec::new();
    let mut region_of_comp: Vec<u32> = vec![NONE; n_comp];
    for (l, c) in clusters.iter().enumerate() {
        if let Some(ci) = largest[l] {
            region_of_comp[ci] = out_clusters.len() as u32;
            out_clusters.push(c.clone());
        }
    }
    let mut orphans = Vec::new();
    for ci in 0..n_comp {
        let l = comps.label[ci];
        if l == NONE {
            orphans.push(ci);
            continue;
        }
        if largest[l as usize] != Some(ci) {
            orphans.push(ci);
        }
    }

    let mut out: Vec<u32> = comps.of_pixel.iter().map(|&ci| region_of_comp[ci as usize]).collect();
    let h = labels.height;
    while !orphans.is_empty() {
        let mut pending = Vec::new();
        for &ci in &orphans {
            let mean = comp_mean(ci);
            let mut best: Option<(f64, u32)> = None;
            for &p in &comps.pixels[ci] {
                let (x, y) = (p % w, p / w);
                let mut consider = |q: usize| {
                    let r = out[q];
                    if r == NONE {
                        return;
                    }
                    let d = lab_distance(mean, out_clusters[r as usize].mean_lab);
                    if best.is_none_or(|(bd, br)| d < bd || (d == bd && r < br)) {
                        best = Some((d, r));
                    }
                };
                if x > 0 {
                    consider(p - 1);
                }
                if x + 1 < w {
                    consider(p + 1);
                }
                if y > 0 {
                    consider(p - w);
                }
                if y + 1 < h {
                    consider(p + w);
                }
            }
            match best {
                Some((_, r)) => {
                    for &p in &comps.pixels[ci] {
                        out[p] = r;
                    }
                }
                None => pending.push(ci),
            }
        }
        if pending.len() == orphans.len() {
            // No labelled region at all: the whole map is one orphan blob.
            break;
        }
        orphans = pending;
    }

    for (i, c) in out_clusters.iter_mut().enumerate() {
        c.id = i as u32;
    }
    (
        LabelMap {
            width: w,
            height: h,
            labels: out,
        },
        out_clusters,
    )
}
