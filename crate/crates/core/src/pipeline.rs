//! End-to-end stylization: load, tensor field, oriented SLIC, smoothed outlines,
//! per-pebble heightfields, composite, shading and output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::contour::{pebble_shape, PebbleShape};
use crate::error::{Error, Result};
use crate::heightfield::{build_pebble, composite_heights, HeightField, HeightParams, PatchKind, PebblePatch};
use crate::raster::{export_heightfield, load_image, rgb_to_lab, write_image, RasterImage, Rgb, ScalarField};
use crate::render::{compute_normals, pebble_base_colors, shade, LightingParams, TextureSource, Vec3};
use crate::segmentation::{run_slic, SegParams, Segmentation, NONE};
use crate::tensor::compute_tensor_field;

/// Gaussian derivative scale of the structure tensor, in pixels.
pub const SIGMA_GRAD: f64 = 1.0;
/// Integration scale of the structure tensor as a fraction of the grid interval.
pub const SIGMA_INT_FACTOR: f64 = 0.4;
/// Albedo of every pebble in layout mode.
pub const LAYOUT_ALBEDO: Rgb = [0.8, 0.8, 0.8];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    /// Average colour, multiplied by the texture when one is given.
    #[default]
    Full,
    /// Average colour, texture ignored.
    Untextured,
    /// Uniform light grey pebbles with lighting.
    LayoutOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "untextured" => Ok(Mode::Untextured),
            "layout-only" => Ok(Mode::LayoutOnly),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode '{s}' (expected full, untextured or layout-only)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dump {
    /// Random-colour label map and the cluster table.
    Labels,
    /// Smoothed outlines drawn on the output canvas.
    Contours,
    /// 16-bit composite heightfield.
    Heightfield,
    /// Per-pebble solver statistics.
    Stats,
}

impl std::str::FromStr for Dump {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labels" => Ok(Dump::Labels),
            "contours" => Ok(Dump::Contours),
            "heightfield" => Ok(Dump::Heightfield),
            "stats" => Ok(Dump::Stats),
            _ => Err(Error::InvalidParameter(format!(
                "unknown dump '{s}' (expected labels, contours, heightfield or stats)"
            ))),
        }
    }
}

/// Lighting values that replace the defaults when set.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LightingOverrides {
    pub light_dir: Option<Vec3>,
    pub ambient: Option<f64>,
    pub diffuse: Option<f64>,
    pub specular: Option<f64>,
    pub shininess: Option<f64>,
    pub grout: Option<f64>,
    pub height_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JobConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub pebble_count: usize,
    pub seed: u64,
    /// Output size relative to the input.
    pub scale: f64,
    /// Fourier coefficients kept per outline (odd).
    pub l: usize,
    pub phi_a1: f64,
    pub t_coh: f64,
    pub t_dist: f64,
    pub beta: f64,
    pub compactness: f64,
    pub texture: Option<PathBuf>,
    pub importance: Option<PathBuf>,
    pub importance_factor: f64,
    pub lighting: LightingOverrides,
    pub mode: Mode,
    pub dumps: BTreeSet<Dump>,
    /// Worker cap; `None` uses every available core.
    pub threads: Option<usize>,
    pub export_heightfield: Option<PathBuf>,
}

impl JobConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        JobConfig {
            input: input.into(),
            output: output.into(),
            pebble_count: 2000,
            seed: 0,
            scale: 1.0,
            l: 7,
            phi_a1: 3.0,
            t_coh: 0.5,
            t_dist: 0.85,
            beta: 2.0,
            compactness: 10.0,
            texture: None,
            importance: None,
            importance_factor: 4.0,
            lighting: LightingOverrides::default(),
            mode: Mode::Full,
            dumps: BTreeSet::new(),
            threads: None,
            export_heightfield: None,
        }
    }

    /// Range checks that do not need the input image.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.pebble_count < 1 {
            return bad("--pebbles must be at least 1".into());
        }
        if !(self.scale >= 0.1 && self.scale.is_finite()) {
            return bad(format!("--scale must be at least 0.1, got {}", self.scale));
        }
        if self.l.is_multiple_of(2) || self.l < 3 {
            return bad(format!("--L must be an odd integer of at least 3, got {}", self.l));
        }
        if self.l > crate::contour::DESCRIPTOR_SAMPLES {
            return bad(format!(
                "--L must not exceed {}, got {}",
                crate::contour::DESCRIPTOR_SAMPLES,
                self.l
            ));
        }
        if !(self.t_dist > 0.0 && self.t_dist < 1.0) {
            return bad(format!("--t-dist must lie in (0, 1), got {}", self.t_dist));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("--beta must be positive, got {}", self.beta));
        }
        if self.threads == Some(0) {
            return bad("--threads must be at least 1".into());
        }
        if let Some(hs) = self.lighting.height_scale {
            if !(hs > 0.0) {
                return bad(format!("--height-scale must be positive, got {hs}"));
            }
        }
        if let Some(g) = self.lighting.grout {
            if !(0.0..=1.0).contains(&g) {
                return bad(format!("--grout must lie in [0, 1], got {g}"));
            }
        }
        if let Some(d) = self.lighting.light_dir {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if !(n > 0.0 && n.is_finite()) {
                return bad("--light-dir must be a non-zero vector".into());
            }
        }
        self.seg_params(None).validate()?;
        self.lighting_params(1.0).validate()
    }

    pub fn seg_params(&self, importance: Option<ScalarField>) -> SegParams {
        SegParams {
            pebble_count: self.pebble_count,
            phi_a1: self.phi_a1,
            t_coh: self.t_coh,
            compactness: self.compactness,
            seed: self.seed,
            importance,
            importance_factor: self.importance_factor,
            ..SegParams::default()
        }
    }

    pub fn height_params(&self) -> HeightParams {
        HeightParams {
            t_dist: self.t_dist,
            beta: self.beta,
            ..HeightParams::default()
        }
    }

    /// Lighting for an output grid interval `s_out`, with overrides applied.
    pub fn lighting_params(&self, s_out: f64) -> LightingParams {
        let mut p = LightingParams::for_interval(s_out);
        let o = &self.lighting;
        if let Some(d) = o.light_dir {
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            p.light_dir = [d[0] / n, d[1] / n, d[2] / n];
        }
        p.ambient = o.ambient.unwrap_or(p.ambient);
        p.diffuse = o.diffuse.unwrap_or(p.diffuse);
        p.specular = o.specular.unwrap_or(p.specular);
        p.shininess = o.shininess.unwrap_or(p.shininess);
        p.height_scale = o.height_scale.unwrap_or(p.height_scale);
        if let Some(g) = o.grout {
            p.grout = [g; 3];
        }
        p
    }

    /// Output canvas size for an input of `w x h`.
    pub fn canvas_size(&self, w: usize, h: usize) -> (usize, usize) {
        let f = |n: usize| ((n as f64 * self.scale).round() as usize).max(1);
        (f(w), f(h))
    }

    /// `<output dir>/<output stem>.<suffix>`.
    pub fn dump_path(&self, suffix: &str) -> PathBuf {
        let stem = self
            .output
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "output".into());
        self.output.with_file_name(format!("{stem}.{suffix}"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageTime {
    pub name: &'static str,
    pub ms: f64,
}

/// Aggregate solver statistics over all pebbles.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolverSummary {
    pub solved: usize,
    pub unknowns: usize,
    pub iterations: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageReport {
    pub stages: Vec<StageTime>,
    pub input_size: (usize, usize),
    pub output_size: (usize, usize),
    pub pebbles: usize,
    /// Seeds that ended with no pixels.
    pub dropped: usize,
    /// Pebbles rendered as distance cones because their annulus was degenerate.
    pub degenerate: usize,
    /// Pebbles whose solve did not converge, rendered as distance cones.
    pub fallback: Vec<u32>,
    /// Pebbles too small to smooth, rendered from their raw pixels.
    pub unsmoothed: usize,
    pub solver: SolverSummary,
}

impl StageReport {
    pub fn stage_ms(&self, name: &str) -> Option<f64> {
        self.stages.iter().find(|s| s.name == name).map(|s| s.ms)
    }

    pub fn total_ms(&self) -> f64 {
        self.stages.iter().map(|s| s.ms).sum()
    }

    fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| e.in_stage(name))?;
        self.stages.push(StageTime {
            name,
            ms: t.elapsed().as_secs_f64() * 1e3,
        });
        Ok(out)
    }
}

/// Per-pebble solve record.
#[derive(Clone, Debug)]
pub struct PebbleRecord {
    pub patch: PebblePatch,
    pub ms: f64,
}

/// Everything produced by [`stylize`].
#[derive(Clone, Debug)]
pub struct Stylized {
    pub image: RasterImage,
    pub segmentation: Segmentation,
    pub shapes: Vec<PebbleShape>,
    pub pebbles: Vec<PebbleRecord>,
    pub heightfield: HeightField,
    pub report: StageReport,
}

/// Runs every stage after loading on an in-memory image. `importance` must
/// match the image size; the texture, if any, is used in [`Mode::Full`].
pub fn stylize(
    img: &RasterImage,
    cfg: &JobConfig,
    importance: Option<ScalarField>,
    texture: Option<&RasterImage>,
) -> Result<Stylized> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {n} worker threads: {e}")))?;
            pool.install(|| stylize_inner(img, cfg, importance, texture, StageReport::default()))
        }
        None => stylize_inner(img, cfg, importance, texture, StageReport::default()),
    }
}

fn stylize_inner(
    img: &RasterImage,
    cfg: &JobConfig,
    importance: Option<ScalarField>,
    texture: Option<&RasterImage>,
    mut report: StageReport,
) -> Result<Stylized> {
    let (w, h) = (img.width(), img.height());
    let (cw, ch) = cfg.canvas_size(w, h);
    report.input_size = (w, h);
    report.output_size = (cw, ch);
    let params = cfg.seg_params(importance);
    let s = crate::segmentation::grid_interval(w, h, cfg.pebble_count);

    let (lab, tensors) = report.time("tensor", || {
        if cfg.pebble_count > w * h {
            return Err(Error::TooManyPebbles {
                requested: cfg.pebble_count,
                pixels: w * h,
            });
        }
        Ok((
            rgb_to_lab(img),
            compute_tensor_field(img, SIGMA_GRAD, SIGMA_INT_FACTOR * s),
        ))
    })?;
    let segmentation = report.time("segmentation", || run_slic(&lab, &tensors, &params))?;
    report.pebbles = segmentation.clusters.len();
    report.dropped = segmentation.dropped.len();

    let shapes: Vec<PebbleShape> = report.time("contours", || {
        (0..segmentation.clusters.len() as u32)
            .into_par_iter()
            .map(|id| pebble_shape(&segmentation.labels, id, cfg.l, cfg.scale, cw, ch))
            .collect()
    })?;
    report.unsmoothed = shapes.iter().filter(|s| !s.smoothed).count();

    let hp = cfg.height_params();
    let pebbles: Vec<PebbleRecord> = report.time("solve", || {
        shapes
            .par_iter()
            .map(|shape| {
                let t = Instant::now();
                let patch = build_pebble(shape.id, shape.mask.clone(), shape.outer.points(), &shape.normals, &hp)?;
                Ok(PebbleRecord {
                    patch,
                    ms: t.elapsed().as_secs_f64() * 1e3,
                })
            })
            .collect()
    })?;
    for rec in &pebbles {
        let p = &rec.patch;
        match p.kind {
            PatchKind::Solved => {
                report.solver.solved += 1;
                report.solver.unknowns += p.stats.unknowns;
                report.solver.iterations += p.stats.iterations;
                report.solver.max_residual = report.solver.max_residual.max(p.stats.residual);
            }
            PatchKind::Degenerate => report.degenerate += 1,
            PatchKind::Fallback => report.fallback.push(p.id),
        }
    }

    let heightfield = report.time("composite", || {
        let patches: Vec<PebblePatch> = pebbles.iter().map(|r| r.patch.clone()).collect();
        Ok(composite_heights(&patches, cw, ch))
    })?;

    let lighting = cfg.lighting_params(s * cfg.scale);
    let image = report.time("render", || {
        lighting.validate()?;
        let normals = compute_normals(&heightfield.heights, lighting.height_scale);
        let colors = pebble_base_colors(img, &heightfield, shapes.len());
        let tex = match (cfg.mode, texture) {
            (Mode::Full, Some(t)) => Some(TextureSource::new(t, cfg.seed)?),
            _ => None,
        };
        let offsets: Vec<(usize, usize)> = match &tex {
            Some(t) => (0..shapes.len() as u32).map(|id| t.offset(id)).collect(),
            None => Vec::new(),
        };
        shade(
            &heightfield,
            &normals,
            |id, x, y| {
                let base = match cfg.mode {
                    Mode::LayoutOnly => return LAYOUT_ALBEDO,
                    _ => colors[id as usize].unwrap_or(lighting.grout),
                };
                match &tex {
                    Some(t) => {
                        let f = t.factor_at(offsets[id as usize], x, y);
                        base.map(|c| c * f)
                    }
                    None => base,
                }
            },
            &lighting,
        )
    })?;

    Ok(Stylized {
        image,
        segmentation,
        shapes,
        pebbles,
        heightfield,
        report,
    })
}

/// Grey level of an importance image, resampled to `w x h` by nearest neighbour.
pub fn importance_field(img: &RasterImage, w: usize, h: usize) -> ScalarField {
    let lum = img.to_luminance();
    ScalarField::from_fn(w, h, |x, y| {
        let sx = (((x as f64 + 0.5) * lum.width() as f64 / w as f64) as usize).min(lum.width() - 1);
        let sy = (((y as f64 + 0.5) * lum.height() as f64 / h as f64) as usize).min(lum.height() - 1);
        lum.get(sx, sy)
    })
}

/// Loads the inputs, runs [`stylize`], writes the output, dumps and optional
/// heightfield export. On failure, every file written so far is removed.
pub fn run_pipeline(cfg: &JobConfig) -> Result<StageReport> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = run_and_write(cfg, &mut written);
    if result.is_err() {
        for p in &written {
            let _ = fs::remove_file(p);
        }
    }
    result
}

fn run_and_write(cfg: &JobConfig, written: &mut Vec<PathBuf>) -> Result<StageReport> {
    cfg.validate()?;
    let mut report = StageReport::default();
    let (img, importance, texture) = report.time("load", || {
        let img = load_image(&cfg.input)?;
        let importance = match &cfg.importance {
            Some(p) => Some(importance_field(&load_image(p)?, img.width(), img.height())),
            None => None,
        };
        let texture = match (&cfg.texture, cfg.mode) {
            (Some(p), Mode::Full) => Some(load_image(p)?),
            _ => None,
        };
        Ok((img, importance, texture))
    })?;

    let mut out = stylize(&img, cfg, importance, texture.as_ref())?;
    let mut stages = report.stages;
    stages.append(&mut out.report.stages);
    out.report.stages = stages;
    let mut report = out.report.clone();

    report.time("write", || {
        // heightfield files carry a range sidecar
        let mut put = |path: PathBuf, sidecar: bool, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
            written.push(path.clone());
            if sidecar {
                written.push(crate::raster::heightfield_sidecar_path(&path));
            }
            f(&path)
        };
        put(cfg.output.clone(), false, &|p| write_image(&out.image, p))?;
        if let Some(p) = &cfg.export_heightfield {
            put(p.clone(), true, &|p| export_heightfield(&out.heightfield.heights, p))?;
        }
        for dump in &cfg.dumps {
            match dump {
                Dump::Labels => {
                    put(cfg.dump_path("labels.png"), false, &|p| {
                        write_image(&label_image(&out.segmentation), p)
                    })?;
                    put(cfg.dump_path("clusters.csv"), false, &|p| {
                        write_text(p, &cluster_csv(&out.segmentation))
                    })?;
                }
                Dump::Contours => {
                    put(cfg.dump_path("contours.png"), false, &|p| {
                        write_image(&contour_image(&out), p)
                    })?;
                }
                Dump::Heightfield => {
                    put(cfg.dump_path("height.png"), true, &|p| {
                        export_heightfield(&out.heightfield.heights, p)
                    })?;
                }
                Dump::Stats => {
                    put(cfg.dump_path("solver.csv"), false, &|p| {
                        write_text(p, &solver_csv(&out.pebbles))
                    })?;
                }
            }
        }
        Ok(())
    })?;
    Ok(report)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Deterministic pseudo-random colour of a label.
fn label_color(id: u32) -> Rgb {
    let mut z = (id as u64).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let c = |shift: u32| 0.1 + 0.9 * ((z >> shift) & 0xff) as f64 / 255.0;
    [c(0), c(8), c(16)]
}

pub fn label_image(seg: &Segmentation) -> RasterImage {
    let l = &seg.labels;
    RasterImage::from_fn(l.width(), l.height(), |x, y| match l.get(x, y) {
        NONE => [0.0; 3],
        id => label_color(id),
    })
}

pub fn cluster_csv(seg: &Segmentation) -> String {
    let mut s = String::from("id,center_x,center_y,alpha1,alpha2,r1,r2,from_tensor\n");
    for c in &seg.clusters {
        let _ = writeln!(
            s,
            "{},{:.4},{:.4},{:.6},{:.6},{:.6},{:.6},{}",
            c.id, c.center[0], c.center[1], c.alpha1, c.alpha2, c.r1, c.r2, c.basis.from_tensor
        );
    }
    s
}

pub fn solver_csv(pebbles: &[PebbleRecord]) -> String {
    let mut s = String::from("id,unknowns,iterations,residual,milliseconds\n");
    for r in pebbles {
        let st = &r.patch.stats;
        let _ = writeln!(
            s,
            "{},{},{},{:e},{:.3}",
            r.patch.id, st.unknowns, st.iterations, st.residual, r.ms
        );
    }
    s
}

/// Smoothed outlines in white over the pebble footprints in grey.
fn contour_image(out: &Stylized) -> RasterImage {
    let (w, h) = (out.heightfield.width(), out.heightfield.height());
    let mut img = RasterImage::from_fn(w, h, |x, y| {
        if out.heightfield.owner_at(x, y) == NONE {
            [0.0; 3]
        } else {
            [0.25; 3]
        }
    });
    for shape in &out.shapes {
        let pts = shape.outer.points();
        for (k, p) in pts.iter().enumerate() {
            let q = pts[(k + 1) % pts.len()];
            let steps = ((q[0] - p[0]).abs().max((q[1] - p[1]).abs()).ceil() as usize).max(1);
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let (x, y) = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]));
                if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                    img.set(x as usize, y as usize, [1.0; 3]);
                }
            }
        }
    }
    img
}
