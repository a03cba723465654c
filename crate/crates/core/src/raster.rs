//! Raster containers, colour conversion and image file I/O.
//!
//! Pixels are stored as linear-light RGB in `[0, 1]`. sRGB encoding happens only
//! when reading or writing files.

use std::fs::File;
use std::io::{BufWriter, ErrorKind, Write};
use std::path::{Path, PathBuf};

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageError, ImageReader};

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// Decodes one sRGB-encoded channel value in `[0, 1]` to linear light.
pub fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Encodes one linear-light channel value to sRGB.
pub fn linear_to_srgb(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Relative luminance (CIE Y) of a linear RGB triple.
pub fn luminance(c: Rgb) -> f64 {
    0.212_672_9 * c[0] + 0.715_152_2 * c[1] + 0.072_175_0 * c[2]
}

#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidParameter(
                "channel values must be finite and within [0, 1]".into(),
            ));
        }
        Ok(RasterImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        assert!(width > 0 && height > 0);
        RasterImage {
            width,
            height,
            data: vec![color; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel. Values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y);
                data.push([c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)]);
            }
        }
        RasterImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped to the image.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> Rgb {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.data[y * self.width + x] = [c[0].clamp(0.0, 1.0), c[1].clamp(0.0, 1.0), c[2].clamp(0.0, 1.0)];
    }

    pub fn to_luminance(&self) -> ScalarField {
        ScalarField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&c| luminance(c)).collect(),
        }
    }

    /// 8-bit sRGB bytes, row-major RGB.
    pub fn to_srgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .flat_map(|c| c.map(|v| (linear_to_srgb(v) * 255.0).round() as u8))
            .collect()
    }
}

/// CIE D65 reference white, taken as the row sums of the sRGB to XYZ matrix so
/// that linear white maps to `L = 100, a = b = 0`.
const WHITE: [f64; 3] = [
    0.412_456_4 + 0.357_576_1 + 0.180_437_5,
    0.212_672_9 + 0.715_152_2 + 0.072_175_0,
    0.019_333_9 + 0.119_192_0 + 0.950_304_1,
];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

const LAB_EPS: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPS {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let t = f * f * f;
    if t > LAB_EPS {
        t
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

fn mat_mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Linear RGB to CIELAB under D65.
pub fn linear_rgb_to_lab(c: Rgb) -> [f64; 3] {
    let xyz = mat_mul(&RGB_TO_XYZ, c);
    let fx = lab_f(xyz[0] / WHITE[0]);
    let fy = lab_f(xyz[1] / WHITE[1]);
    let fz = lab_f(xyz[2] / WHITE[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// CIELAB (D65) back to linear RGB. Out-of-gamut results are not clamped.
pub fn lab_to_linear_rgb(lab: [f64; 3]) -> Rgb {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE[0],
        lab_f_inv(fy) * WHITE[1],
        lab_f_inv(fz) * WHITE[2],
    ];
    mat_mul(&XYZ_TO_RGB, xyz)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl LabImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }
}

pub fn rgb_to_lab(img: &RasterImage) -> LabImage {
    LabImage {
        width: img.width,
        height: img.height,
        data: img.data.iter().map(|&c| linear_rgb_to_lab(c)).collect(),
    }
}

/// A grid of finite reals: luminance, distances, importance, heights.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(width: usize, height: usize) -> Self {
        ScalarField {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} values, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("scalar field contains NaN or Inf".into()));
        }
        Ok(ScalarField { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        ScalarField { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// `(min, max)` of all values; `(0, 0)` for an empty field.
    pub fn range(&self) -> (f64, f64) {
        if self.data.is_empty() {
            return (0.0, 0.0);
        }
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// A binary raster covering a rectangular window of a larger canvas.
///
/// `origin` is the canvas coordinate of the window's top-left pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    origin: (isize, isize),
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(origin: (isize, isize), width: usize, height: usize) -> Self {
        Mask {
            origin,
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(
        origin: (isize, isize),
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut m = Mask::new(origin, width, height);
        for y in 0..height {
            for x in 0..width {
                m.bits[y * width + x] = f(x, y);
            }
        }
        m
    }

    pub fn origin(&self) -> (isize, isize) {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Local lookup; anything outside the window reads as unset.
    #[inline]
    pub fn get(&self, x: isize, y: isize) -> bool {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            return false;
        }
        self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Local coordinates of every set pixel in raster order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }
}

fn classify_image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::Unsupported(_) => Error::UnsupportedFormat(path.to_path_buf()),
        ImageError::IoError(e) if e.kind() == ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
        ImageError::IoError(e) if e.kind() == ErrorKind::UnexpectedEof => Error::CorruptImage {
            path: path.to_path_buf(),
            reason: e.to_string(),
        },
        ImageError::IoError(e) => Error::io(path, e),
        other => Error::CorruptImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Loads a PNG or binary PPM file, decoding sRGB to linear light.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    if reader.format().is_none() {
        return Err(Error::UnsupportedFormat(path.to_path_buf()));
    }
    let decoded = reader.decode().map_err(|e| classify_image_error(path, e))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::CorruptImage {
            path: path.to_path_buf(),
            reason: "zero-sized image".into(),
        });
    }
    let lut: Vec<f64> = (0..256).map(|v| srgb_to_linear(v as f64 / 255.0)).collect();
    let data = rgb
        .pixels()
        .map(|p| [lut[p[0] as usize], lut[p[1] as usize], lut[p[2] as usize]])
        .collect();
    RasterImage::new(w as usize, h as usize, data)
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn encode_png(path: &Path, bytes: &[u8], w: usize, h: usize, color: ExtendedColorType) -> Result<()> {
    let mut out = create_file(path)?;
    PngEncoder::new(&mut out)
        .write_image(bytes, w as u32, h as u32, color)
        .map_err(|e| match e {
            ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit sRGB PNG.
pub fn write_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    encode_png(
        path.as_ref(),
        &img.to_srgb8(),
        img.width,
        img.height,
        ExtendedColorType::Rgb8,
    )
}

/// Path of the text file holding the `min max` range of an exported heightfield.
pub fn heightfield_sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".range");
    PathBuf::from(s)
}

/// Writes a 16-bit grayscale PNG with heights mapped linearly from `[min, max]`
/// to `[0, 65535]`, plus a sidecar `<path>.range` holding `min max`.
pub fn export_heightfield(h: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (lo, hi) = h.range();
    let span = hi - lo;
    let mut bytes = Vec::with_capacity(h.data.len() * 2);
    for &v in &h.data {
        let q = if span > 0.0 {
            ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16
        } else {
            0
        };
        bytes.extend_from_slice(&q.to_ne_bytes());
    }
    encode_png(path, &bytes, h.width, h.height, ExtendedColorType::L16)?;
    let sidecar = heightfield_sidecar_path(path);
    let mut f = create_file(&sidecar)?;
    writeln!(f, "{lo} {hi}").map_err(|e| Error::io(&sidecar, e))?;
    f.flush().map_err(|e| Error::io(&sidecar, e))
}

/// Reads back a heightfield written by [`export_heightfield`].
pub fn import_heightfield(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let sidecar = heightfield_sidecar_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::NotFound(sidecar.clone()),
        _ => Error::io(&sidecar, e),
    })?;
    let mut parts = text.split_whitespace().map(str::parse::<f64>);
    let (lo, hi) = match (parts.next(), parts.next()) {
        (Some(Ok(lo)), Some(Ok(hi))) => (lo, hi),
        _ => {
            return Err(Error::CorruptImage {
                path: sidecar,
                reason: "expected two floats".into(),
            })
        }
    };
    let img = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| classify_image_error(path, e))?
        .to_luma16();
    let (w, hgt) = img.dimensions();
    let data = img.pixels().map(|p| lo + (p[0] as f64 / 65535.0) * (hi - lo)).collect();
    ScalarField::new(w as usize, hgt as usize, data)
}
