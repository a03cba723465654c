//! Shading of the composite heightfield: normals, per-pebble colour, texture
//! multiply and Phong lighting over a grout background.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heightfield::HeightField;
use crate::raster::{RasterImage, Rgb, ScalarField};
use crate::rng::{substream, TEXTURE_DOMAIN};
use crate::segmentation::NONE;

pub type Vec3 = [f64; 3];

fn normalize3(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn dot3(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightingParams {
    /// Direction towards the light, unit length.
    pub light_dir: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    pub specular: f64,
    pub shininess: f64,
    /// Pixel elevation of a plateau height of 1.
    pub height_scale: f64,
    pub grout: Rgb,
}

impl LightingParams {
    /// Default lighting for pebbles of grid interval `s` output pixels.
    pub fn for_interval(s: f64) -> Self {
        LightingParams {
            light_dir: normalize3([-0.4, -0.4, 1.0]),
            ambient: 0.25,
            diffuse: 0.65,
            specular: 0.25,
            shininess: 16.0,
            height_scale: 0.6 * s,
            grout: [0.15; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let len = dot3(self.light_dir, self.light_dir).sqrt();
        if !((len - 1.0).abs() < 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "light direction must be unit length, got |l| = {len}"
            )));
        }
        for (name, v) in [
            ("ambient", self.ambient),
            ("diffuse", self.diffuse),
            ("specular", self.specular),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.shininess > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "shininess must be positive, got {}",
                self.shininess
            )));
        }
        if !(self.height_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "height scale must be positive, got {}",
                self.height_scale
            )));
        }
        if self.grout.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidParameter(
                "grout colour channels must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// `normalize(-hs * dh/dx, -hs * dh/dy, 1)` by central differences with clamped borders.
pub fn compute_normals(h: &ScalarField, height_scale: f64) -> Vec<Vec3> {
    let (w, hgt) = (h.width(), h.height());
    let mut out = vec![[0.0, 0.0, 1.0]; w * hgt];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let yi = y as isize;
        for (x, n) in row.iter_mut().enumerate() {
            let xi = x as isize;
            let dx = 0.5 * (h.get_clamped(xi + 1, yi) - h.get_clamped(xi - 1, yi));
            let dy = 0.5 * (h.get_clamped(xi, yi + 1) - h.get_clamped(xi, yi - 1));
            *n = normalize3([-height_scale * dx, -height_scale * dy, 1.0]);
        }
    });
    out
}

/// Source pixel shown at canvas pixel `(x, y)` (nearest neighbour).
#[inline]
fn source_pixel(src: &RasterImage, cw: usize, ch: usize, x: usize, y: usize) -> Rgb {
    let sx = (((x as f64 + 0.5) * src.width() as f64 / cw as f64) as usize).min(src.width() - 1);
    let sy = (((y as f64 + 0.5) * src.height() as f64 / ch as f64) as usize).min(src.height() - 1);
    src.get(sx, sy)
}

/// Mean linear colour of `src` under the pixels owned by `id`, sampling the source
/// by nearest neighbour when the canvas is larger. `None` if `id` owns nothing.
pub fn pebble_base_color(src: &RasterImage, hf: &HeightField, id: u32) -> Option<Rgb> {
    let (cw, ch) = (hf.width(), hf.height());
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for y in 0..ch {
        for x in 0..cw {
            if hf.owner_at(x, y) == id {
                let c = source_pixel(src, cw, ch, x, y);
                for k in 0..3 {
                    sum[k] += c[k];
                }
                n += 1;
            }
        }
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

/// Base colours of pebbles `0..count` in a single pass; pebbles owning no pixel get `None`.
pub fn pebble_base_colors(src: &RasterImage, hf: &HeightField, count: usize) -> Vec<Option<Rgb>> {
    let (cw, ch) = (hf.width(), hf.height());
    let mut sums = vec![([0.0f64; 3], 0usize); count];
    for y in 0..ch {
        for x in 0..cw {
            let id = hf.owner_at(x, y);
            if id == NONE || id as usize >= count {
                continue;
            }
            let c = source_pixel(src, cw, ch, x, y);
            let e = &mut sums[id as usize];
            for (acc, v) in e.0.iter_mut().zip(c) {
                *acc += v;
            }
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(s, n)| (n > 0).then(|| s.map(|v| v / n as f64)))
        .collect()
}

/// Texture luminance normalised to mean 1, sampled with a per-pebble random offset.
#[derive(Clone, Debug)]
pub struct TextureSource {
    lum: ScalarField,
    seed: u64,
}

impl TextureSource {
    pub fn new(img: &RasterImage, seed: u64) -> Result<Self> {
        let lum = img.to_luminance();
        let mean = lum.values().iter().sum::<f64>() / lum.values().len() as f64;
        if !(mean > 0.0) {
            return Err(Error::InvalidParameter("texture has zero luminance".into()));
        }
        let values = lum.values().iter().map(|v| v / mean).collect();
        Ok(TextureSource {
            lum: ScalarField::new(lum.width(), lum.height(), values)?,
            seed,
        })
    }

    pub fn width(&self) -> usize {
        self.lum.width()
    }

    pub fn height(&self) -> usize {
        self.lum.height()
    }

    /// Offset of pebble `id` into the texture; the same for a given seed and id.
    pub fn offset(&self, id: u32) -> (usize, usize) {
        let mut rng = substream(self.seed, TEXTURE_DOMAIN, id as u64);
        (rng.random_range(0..self.width()), rng.random_range(0..self.height()))
    }

    /// Normalised luminance under canvas pixel `(x, y)` of pebble `id`, with wrap-around.
    pub fn factor_at(&self, offset: (usize, usize), x: usize, y: usize) -> f64 {
        self.lum
            .get((x + offset.0) % self.width(), (y + offset.1) % self.height())
    }
}

/// Multiply blend of a base colour with the texture luminance.
pub fn apply_texture(base: Rgb, tex: &TextureSource, id: u32, x: usize, y: usize) -> Rgb {
    let f = tex.factor_at(tex.offset(id), x, y);
    base.map(|c| c * f)
}

/// Phong colour of a surface point with unit normal `n`.
#[inline]
pub fn phong(albedo: Rgb, n: Vec3, params: &LightingParams) -> Rgb {
    let l = params.light_dir;
    let nl = dot3(n, l);
    // reflection of l about n; viewer along +z, so r.v = r.z
    let rz = 2.0 * nl * n[2] - l[2];
    let spec = params.specular * rz.max(0.0).powf(params.shininess);
    let lit = params.ambient + params.diffuse * nl.max(0.0);
    albedo.map(|a| (a * lit + spec).clamp(0.0, 1.0))
}

/// Shades the canvas. `albedo(id, x, y)` supplies the (textured) colour of owned pixels;
/// unowned pixels take the grout colour exactly.
pub fn shade<F>(hf: &HeightField, normals: &[Vec3], albedo: F, params: &LightingParams) -> Result<RasterImage>
where
    F: Fn(u32, usize, usize) -> Rgb + Sync,
{
    let (w, h) = (hf.width(), hf.height());
    let mut data = vec![[0.0; 3]; w * h];
    data.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, px) in row.iter_mut().enumerate() {
            let id = hf.owner_at(x, y);
            *px = if id == NONE {
                params.grout
            } else {
                phong(albedo(id, x, y), normals[y * w + x], params)
            };
        }
    });
    RasterImage::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(w: usize, h: usize, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        ScalarField::from_fn(w, h, |x, y| f(x as f64, y as f64))
    }

    fn owned(heights: ScalarField, owner: impl Fn(usize, usize) -> u32) -> HeightField {
        let (w, h) = (heights.width(), heights.height());
        let owner = (0..w * h).map(|i| owner(i % w, i / w)).collect();
        HeightField { heights, owner }
    }

    #[test]
    fn flat_field_points_up() {
        let n = compute_normals(&field(5, 4, |_, _| 0.7), 3.0);
        assert!(n.iter().all(|&v| v == [0.0, 0.0, 1.0]));
    }

    #[test]
    fn plane_normal() {
        let hs = 4.0;
        let n = compute_normals(&field(8, 8, |x, _| x / hs), hs);
        let s = 0.5f64.sqrt();
        for y in 0..8 {
            for x in 1..7 {
                let v = n[y * 8 + x];
                assert!((v[0] + s).abs() < 1e-12 && v[1].abs() < 1e-12 && (v[2] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hemisphere_normals() {
        let r = 30.0;
        let c = 40.0;
        let hf = field(81, 81, |x, y| {
            (r * r - (x - c).powi(2) - (y - c).powi(2)).max(0.0).sqrt()
        });
        let n = compute_normals(&hf, 1.0);
        for y in 0..81 {
            for x in 0..81 {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                if dx.hypot(dy) > 0.8 * r {
                    continue;
                }
                let z = (r * r - dx * dx - dy * dy).sqrt();
                let exact = normalize3([dx, dy, z]);
                let cos = dot3(exact, n[y * 81 + x]).min(1.0);
                assert!(cos.acos().to_degrees() < 2.0);
            }
        }
    }

    #[test]
    fn base_colours() {
        let src = RasterImage::from_fn(4, 2, |x, _| if x < 2 { [0.0; 3] } else { [1.0; 3] });
        let hf = owned(ScalarField::zeros(4, 2), |_, _| 0);
        assert_eq!(pebble_base_color(&src, &hf, 0), Some([0.5; 3]));
        assert_eq!(pebble_base_color(&src, &hf, 1), None);

        let red = RasterImage::filled(3, 3, [1.0, 0.0, 0.0]);
        let hf = owned(ScalarField::zeros(9, 9), |x, _| if x < 4 { 2 } else { NONE });
        let all = pebble_base_colors(&red, &hf, 3);
        assert_eq!(all, vec![None, None, Some([1.0, 0.0, 0.0])]);
    }

    #[test]
    fn upscaled_canvas_samples_nearest() {
        let src = RasterImage::from_fn(2, 1, |x, _| [x as f64, 0.0, 0.0]);
        let hf = owned(ScalarField::zeros(10, 5), |x, _| if x < 5 { 0 } else { 1 });
        let c = pebble_base_colors(&src, &hf, 2);
        assert_eq!(c[0], Some([0.0, 0.0, 0.0]));
        assert_eq!(c[1], Some([1.0, 0.0, 0.0]));
    }

    #[test]
    fn texture_multiply() {
        let flat = TextureSource::new(&RasterImage::filled(8, 8, [0.3; 3]), 1).unwrap();
        let base = [0.2, 0.4, 0.6];
        let out = apply_texture(base, &flat, 5, 3, 3);
        for k in 0..3 {
            assert!((out[k] - base[k]).abs() < 1e-12);
        }

        // checker of luminance 0.25 / 0.75: normalised to 0.5 / 1.5
        let img = RasterImage::from_fn(2, 2, |x, y| [if (x + y) % 2 == 0 { 0.25 } else { 0.75 }; 3]);
        let tex = TextureSource::new(&img, 9).unwrap();
        let off = tex.offset(0);
        let dark = (0..2)
            .flat_map(|y| (0..2).map(move |x| (x, y)))
            .find(|&(x, y)| tex.factor_at(off, x, y) < 1.0)
            .unwrap();
        let out = apply_texture([0.8, 0.4, 0.2], &tex, 0, dark.0, dark.1);
        for (o, b) in out.iter().zip([0.8, 0.4, 0.2]) {
            assert!((o - 0.5 * b).abs() < 1e-12);
        }
        assert!(TextureSource::new(&RasterImage::filled(2, 2, [0.0; 3]), 0).is_err());
    }

    #[test]
    fn texture_offsets_are_seeded() {
        let tex = TextureSource::new(&RasterImage::filled(256, 256, [0.5; 3]), 42).unwrap();
        let again = TextureSource::new(&RasterImage::filled(256, 256, [0.5; 3]), 42).unwrap();
        assert_eq!(tex.offset(3), again.offset(3));
        assert_ne!(tex.offset(3), tex.offset(4));
        let other = TextureSource::new(&RasterImage::filled(256, 256, [0.5; 3]), 43).unwrap();
        assert_ne!(tex.offset(3), other.offset(3));
    }

    #[test]
    fn phong_limits() {
        let albedo = [0.3, 0.6, 0.9];
        let p = LightingParams {
            ambient: 1.0,
            diffuse: 0.0,
            specular: 0.0,
            ..LightingParams::for_interval(10.0)
        };
        assert_eq!(phong(albedo, normalize3([0.3, -0.2, 1.0]), &p), albedo);
        let p = LightingParams {
            light_dir: [0.0, 0.0, 1.0],
            ambient: 0.0,
            diffuse: 1.0,
            specular: 0.0,
            ..p
        };
        assert_eq!(phong(albedo, [0.0, 0.0, 1.0], &p), albedo);
    }

    #[test]
    fn hemisphere_highlight_faces_light() {
        let (r, c) = (20.0, 25.0);
        let heights = field(51, 51, |x, y| {
            (r * r - (x - c).powi(2) - (y - c).powi(2)).max(0.0).sqrt() / r
        });
        let hf = owned(heights, |_, _| 0);
        let n = compute_normals(&hf.heights, r);
        let p = LightingParams {
            light_dir: normalize3([1.0, 1.0, 1.0]),
            ..LightingParams::for_interval(10.0)
        };
        let img = shade(&hf, &n, |_, _, _| [0.5; 3], &p).unwrap();
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for y in 0..51 {
            for x in 0..51 {
                let (dx, dy) = (x as f64 - c, y as f64 - c);
                if dx.hypot(dy) >= 0.9 * r {
                    continue;
                }
                let v = img.get(x, y)[0];
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        assert!(best.1 as f64 > c && best.2 as f64 > c, "{best:?}");
    }

    #[test]
    fn grout_and_clamp() {
        let heights = field(6, 6, |x, y| ((x * 7.0 + y * 3.0) % 5.0) / 5.0);
        let hf = owned(heights, |x, _| if x % 2 == 0 { NONE } else { 1 });
        let n = compute_normals(&hf.heights, 50.0);
        let p = LightingParams {
            ambient: 1.0,
            diffuse: 1.0,
            specular: 1.0,
            ..LightingParams::for_interval(10.0)
        };
        let img = shade(&hf, &n, |_, _, _| [1.0; 3], &p).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let px = img.get(x, y);
                if x % 2 == 0 {
                    assert_eq!(px, p.grout);
                } else {
                    assert!(px.iter().all(|c| (0.0..=1.0).contains(c)));
                }
            }
        }
    }

    #[test]
    fn lighting_validation() {
        assert!(LightingParams::for_interval(10.0).validate().is_ok());
        let bad = LightingParams {
            light_dir: [1.0, 1.0, 0.0],
            ..LightingParams::for_interval(10.0)
        };
        assert!(bad.validate().is_err());
        let bad = LightingParams {
            ambient: 1.5,
            ..LightingParams::for_interval(10.0)
        };
        assert!(bad.validate().is_err());
    }
}
