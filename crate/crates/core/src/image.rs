//! Grayscale rasters and the low-level operations every detector shares.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Declared intensity range of a [`GrayImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeTag {
    /// Intensities in `0.0..=255.0`.
    Raw8,
    /// Intensities in `0.0..=1.0`.
    Unit,
}

impl RangeTag {
    pub fn max_value(self) -> f64 {
        match self {
            RangeTag::Raw8 => 255.0,
            RangeTag::Unit => 1.0,
        }
    }
}

/// Row-major grayscale raster.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    height: usize,
    width: usize,
    pixels: Vec<f64>,
    range: RangeTag,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>, range: RangeTag) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::shape(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        let max = range.max_value();
        if let Some(bad) = pixels.iter().find(|p| !(0.0..=max).contains(*p)) {
            return Err(Error::arg(format!("pixel value {bad} outside the {range:?} range")));
        }
        Ok(GrayImage {
            height,
            width,
            pixels,
            range,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        range: RangeTag,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Self::new(height, width, pixels, range)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn range(&self) -> RangeTag {
        self.range
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn to_real_map(&self) -> RealMap {
        RealMap {
            height: self.height,
            width: self.width,
            data: self.pixels.clone(),
        }
    }

    /// 8-bit rendering; unit images are scaled by 255.
    pub fn to_luma8(&self) -> Vec<u8> {
        let scale = 255.0 / self.range.max_value();
        self.pixels
            .iter()
            .map(|&p| (p * scale).round().clamp(0.0, 255.0) as u8)
            .collect()
    }
}

/// Unconstrained real-valued 2-D map, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl RealMap {
    pub fn zeros(height: usize, width: usize) -> Self {
        RealMap {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::shape(format!(
                "{} values for a {height}x{width} map",
                data.len()
            )));
        }
        Ok(RealMap { height, width, data })
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Sample with replicated borders.
    #[inline]
    pub fn get_clamped(&self, y: isize, x: isize) -> f64 {
        let yy = y.clamp(0, self.height as isize - 1) as usize;
        let xx = x.clamp(0, self.width as isize - 1) as usize;
        self.data[yy * self.width + xx]
    }

    #[inline]
    fn sample(&self, y: isize, x: isize, border: Border) -> f64 {
        match border {
            Border::Replicate => self.get_clamped(y, x),
            Border::Zero => {
                if y < 0 || x < 0 || y >= self.height as isize || x >= self.width as isize {
                    0.0
                } else {
                    self.data[y as usize * self.width + x as usize]
                }
            }
        }
    }

    pub fn transpose(&self) -> RealMap {
        let mut data = vec![0.0; self.data.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                data[x * self.height + y] = self.data[y * self.width + x];
            }
        }
        RealMap {
            height: self.width,
            width: self.height,
            data,
        }
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Border handling for [`convolve2d`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Border {
    #[default]
    Replicate,
    Zero,
}

/// Small dense correlation kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Kernel {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::shape(format!(
                "kernel of {} values cannot be {height}x{width}",
                data.len()
            )));
        }
        Ok(Kernel { height, width, data })
    }

    pub fn from_rows<const W: usize>(rows: &[[f64; W]]) -> Self {
        Kernel {
            height: rows.len(),
            width: W,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn transpose(&self) -> Kernel {
        let mut data = vec![0.0; self.data.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                data[x * self.height + y] = self.data[y * self.width + x];
            }
        }
        Kernel {
            height: self.width,
            width: self.height,
            data,
        }
    }
}

/// Decode a PNG or JPEG into an 8-bit-range grayscale image.
///
/// Colour input is reduced to luma with [`LUMA_WEIGHTS`] and rounded to the
/// nearest integer; single-channel 8-bit input is taken verbatim.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

fn decode_image(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    use ::image::DynamicImage;

    let format = ::image::guess_format(bytes).map_err(|e| e.to_string())?;
    if !matches!(format, ::image::ImageFormat::Png | ::image::ImageFormat::Jpeg) {
        return Err(format!("unsupported format {format:?}"));
    }
    let decoded = ::image::load_from_memory_with_format(bytes, format).map_err(|e| e.to_string())?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| f64::from(p.0[0])).collect(),
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            decoded.to_luma8().into_raw().into_iter().map(f64::from).collect()
        }
        other => other.to_rgb8().pixels().map(|p| f64::from(luma_u8(p.0))).collect(),
    };
    GrayImage::new(h, w, pixels, RangeTag::Raw8).map_err(|e| e.to_string())
}

/// BT.601 luma of an 8-bit RGB triple, rounded to nearest.
pub fn luma_u8(rgb: [u8; 3]) -> u8 {
    let y =
        LUMA_WEIGHTS[0] * f64::from(rgb[0]) + LUMA_WEIGHTS[1] * f64::from(rgb[1]) + LUMA_WEIGHTS[2] * f64::from(rgb[2]);
    y.round().clamp(0.0, 255.0) as u8
}

/// Write an 8-bit single-channel PNG.
pub fn save_luma8_png(path: impl AsRef<Path>, height: usize, width: usize, data: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let buf = ::image::GrayImage::from_raw(width as u32, height as u32, data.to_vec())
        .ok_or_else(|| Error::shape(format!("{} bytes for a {height}x{width} png", data.len())))?;
    buf.save_with_format(path, ::image::ImageFormat::Png)
        .map_err(|e| match e {
            ::image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Format {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })
}

/// Source coordinate of output index `i` under half-pixel-centred sampling.
#[inline]
fn source_coord(i: usize, in_len: usize, out_len: usize) -> f64 {
    let s = (i as f64 + 0.5) * (in_len as f64 / out_len as f64) - 0.5;
    s.clamp(0.0, (in_len - 1) as f64)
}

/// Bilinear resize with half-pixel-centred sample positions.
pub fn resize_bilinear(img: &GrayImage, out_h: usize, out_w: usize) -> Result<GrayImage> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::arg(format!("resize target {out_h}x{out_w} is empty")));
    }
    if img.height == 0 || img.width == 0 {
        return Err(Error::arg("cannot resize an empty image"));
    }
    if out_h == img.height && out_w == img.width {
        return Ok(img.clone());
    }
    let (h, w) = (img.height, img.width);
    let cols: Vec<(usize, usize, f64)> = (0..out_w)
        .map(|x| {
            let sx = source_coord(x, w, out_w);
            let x0 = sx.floor() as usize;
            (x0, (x0 + 1).min(w - 1), sx - x0 as f64)
        })
        .collect();
    let mut pixels = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let sy = source_coord(y, h, out_h);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for &(x0, x1, fx) in &cols {
            let (a, b) = (img.get(y0, x0), img.get(y0, x1));
            let (c, d) = (img.get(y1, x0), img.get(y1, x1));
            let top = a + (b - a) * fx;
            let bottom = c + (d - c) * fx;
            let v = top + (bottom - top) * fy;
            let lo = a.min(b).min(c).min(d);
            let hi = a.max(b).max(c).max(d);
            pixels.push(v.clamp(lo, hi));
        }
    }
    GrayImage::new(out_h, out_w, pixels, img.range)
}

/// Nearest-neighbour source index for a half-pixel-centred resize.
#[inline]
pub(crate) fn nearest_index(i: usize, in_len: usize, out_len: usize) -> usize {
    let s = ((i as f64 + 0.5) * (in_len as f64 / out_len as f64)).floor() as usize;
    s.min(in_len - 1)
}

/// Map raw 0..=255 intensities to 0..=1.
pub fn normalize_unit(img: &GrayImage) -> Result<GrayImage> {
    if img.range != RangeTag::Raw8 {
        return Err(Error::arg("image is already unit-normalized"));
    }
    let pixels = img.pixels.iter().map(|p| p / 255.0).collect();
    GrayImage::new(img.height, img.width, pixels, RangeTag::Unit)
}

/// Same-size 2-D cross-correlation (the kernel is not flipped).
///
/// Positive and negative taps are accumulated separately, so a balanced
/// kernel on a constant patch gives exactly 0.
pub fn convolve2d(input: &RealMap, kernel: &Kernel, border: Border) -> Result<RealMap> {
    if kernel.height % 2 != 1 || kernel.width % 2 != 1 {
        return Err(Error::arg(format!(
            "kernel {}x{} must have odd dimensions",
            kernel.height, kernel.width
        )));
    }
    let (ch, cw) = ((kernel.height / 2) as isize, (kernel.width / 2) as isize);
    let (h, w) = (input.height, input.width);
    let mut out = RealMap::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let (mut pos, mut neg) = (0.0, 0.0);
            for ky in 0..kernel.height {
                let sy = y as isize + ky as isize - ch;
                for kx in 0..kernel.width {
                    let k = kernel.data[ky * kernel.width + kx];
                    let sx = x as isize + kx as isize - cw;
                    if k > 0.0 {
                        pos += k * input.sample(sy, sx, border);
                    } else if k < 0.0 {
                        neg -= k * input.sample(sy, sx, border);
                    }
                }
            }
            out.data[y * w + x] = pos - neg;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(h: usize, w: usize, v: &[f64]) -> GrayImage {
        GrayImage::new(h, w, v.to_vec(), RangeTag::Raw8).unwrap()
    }

    #[test]
    fn luma_of_primaries() {
        assert_eq!(luma_u8([255, 255, 255]), 255);
        // 0.299 * 255 = 76.245
        assert_eq!(luma_u8([255, 0, 0]), 76);
        assert_eq!(luma_u8([0, 0, 0]), 0);
    }

    #[test]
    fn rejects_out_of_range_pixels() {
        assert!(GrayImage::new(1, 1, vec![1.5], RangeTag::Unit).is_err());
        assert!(GrayImage::new(1, 2, vec![1.0], RangeTag::Unit).is_err());
    }

    #[test]
    fn load_grayscale_png_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.png");
        let bytes: Vec<u8> = (0..12).map(|i| (i * 21) as u8).collect();
        save_luma8_png(&path, 3, 4, &bytes).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.range(), RangeTag::Raw8);
        assert_eq!(img.to_luma8(), bytes);
    }

    #[test]
    fn load_rgb_png_uses_bt601() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let buf = ::image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 255, 255, 255]).unwrap();
        buf.save(&path).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.pixels(), &[76.0, 255.0]);
    }

    #[test]
    fn load_errors_are_classified() {
        let dir = tempfile::tempdir().unwrap();
        let missing = load_image(dir.path().join("nope.png")).unwrap_err();
        assert!(matches!(missing, Error::Io { .. }));
        let junk = dir.path().join("junk.png");
        std::fs::write(&junk, b"not an image at all").unwrap();
        assert!(matches!(load_image(&junk).unwrap_err(), Error::Format { .. }));
    }

    #[test]
    fn resize_identity_and_constant() {
        let img = GrayImage::from_fn(7, 5, RangeTag::Raw8, |y, x| ((y * 31 + x * 17) % 256) as f64).unwrap();
        assert_eq!(resize_bilinear(&img, 7, 5).unwrap(), img);
        let c = GrayImage::from_fn(9, 4, RangeTag::Raw8, |_, _| 37.25).unwrap();
        let r = resize_bilinear(&c, 13, 21).unwrap();
        assert!(r.pixels().iter().all(|&p| p == 37.25));
        assert!(resize_bilinear(&c, 0, 3).is_err());
    }

    #[test]
    fn resize_2x2_to_4x4_matches_hand_oracle() {
        let img = raw(2, 2, &[0.0, 100.0, 100.0, 0.0]);
        let out = resize_bilinear(&img, 4, 4).unwrap();
        // Independent oracle: half-pixel centres map output i to (i + 0.5) / 2 - 0.5,
        // i.e. -0.25, 0.25, 0.75, 1.25, clamped into [0, 1].
        let pos = [0.0, 0.25, 0.75, 1.0];
        let f = |y: f64, x: f64| {
            let v = [[0.0, 100.0], [100.0, 0.0]];
            v[0][0] * (1.0 - y) * (1.0 - x) + v[0][1] * (1.0 - y) * x + v[1][0] * y * (1.0 - x) + v[1][1] * y * x
        };
        for (i, &py) in pos.iter().enumerate() {
            for (j, &px) in pos.iter().enumerate() {
                assert!((out.get(i, j) - f(py, px)).abs() < 1e-12, "({i},{j})");
            }
        }
        assert_eq!(out.get(0, 0), 0.0);
        assert_eq!(out.get(1, 1), 37.5);
    }

    #[test]
    fn normalize_bounds_and_double_normalization() {
        let img = raw(1, 3, &[0.0, 51.0, 255.0]);
        let n = normalize_unit(&img).unwrap();
        assert_eq!(n.pixels(), &[0.0, 0.2, 1.0]);
        assert_eq!(n.range(), RangeTag::Unit);
        assert!(matches!(normalize_unit(&n), Err(Error::Argument(_))));
    }

    #[test]
    fn convolve_identity_and_zero_sum() {
        let m = RealMap::from_vec(3, 4, (0..12).map(|v| v as f64 * 0.5).collect()).unwrap();
        let id = Kernel::from_rows(&[[1.0]]);
        assert_eq!(convolve2d(&m, &id, Border::Zero).unwrap(), m);
        let c = RealMap::from_vec(5, 5, vec![0.7; 25]).unwrap();
        let lap = Kernel::from_rows(&[[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]]);
        let out = convolve2d(&c, &lap, Border::Replicate).unwrap();
        assert!(out.data.iter().all(|&v| v.abs() < 1e-15));
        let even = Kernel::new(2, 2, vec![1.0; 4]).unwrap();
        assert!(matches!(convolve2d(&c, &even, Border::Zero), Err(Error::Argument(_))));
    }

    #[test]
    fn convolve_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = RealMap::from_vec(5, 5, (0..25).map(|_| rng.random::<f64>()).collect()).unwrap();
        let k = Kernel::new(3, 3, (0..9).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
        for border in [Border::Zero, Border::Replicate] {
            let out = convolve2d(&m, &k, border).unwrap();
            for y in 0..5i32 {
                for x in 0..5i32 {
                    let mut acc = 0.0;
                    for i in -1..=1i32 {
                        for j in -1..=1i32 {
                            let (sy, sx) = (y + i, x + j);
                            let v = match border {
                                Border::Zero if !(0..5).contains(&sy) || !(0..5).contains(&sx) => 0.0,
                                _ => m.get(sy.clamp(0, 4) as usize, sx.clamp(0, 4) as usize),
                            };
                            acc += k.data[((i + 1) * 3 + j + 1) as usize] * v;
                        }
                    }
                    assert!((out.get(y as usize, x as usize) - acc).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn resize_stays_within_input_range(
            h in 1usize..8, w in 1usize..8, oh in 1usize..12, ow in 1usize..12, seed in 0u64..1000
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let img = GrayImage::from_fn(h, w, RangeTag::Raw8, |_, _| rng.random_range(0.0..=255.0)).unwrap();
            let lo = img.pixels().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = img.pixels().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let out = resize_bilinear(&img, oh, ow).unwrap();
            prop_assert!(out.pixels().iter().all(|&p| p >= lo && p <= hi));
        }

        #[test]
        fn normalize_round_trips(values in proptest::collection::vec(0.0f64..=255.0, 1..64)) {
            let img = GrayImage::new(1, values.len(), values.clone(), RangeTag::Raw8).unwrap();
            let n = normalize_unit(&img).unwrap();
            for (a, b) in n.pixels().iter().zip(&values) {
                prop_assert!((a * 255.0 - b).abs() < 1e-9);
            }
        }

        #[test]
        fn convolution_is_linear(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rand_map = || RealMap::from_vec(8, 8, (0..64).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
            let (x, y) = (rand_map(), rand_map());
            let k = Kernel::new(3, 5, (0..15).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
            let mix = RealMap::from_vec(8, 8, x.data.iter().zip(&y.data).map(|(p, q)| a * p + b * q).collect()).unwrap();
            let lhs = convolve2d(&mix, &k, Border::Replicate).unwrap();
            let cx = convolve2d(&x, &k, Border::Replicate).unwrap();
            let cy = convolve2d(&y, &k, Border::Replicate).unwrap();
            for i in 0..64 {
                prop_assert!((lhs.data[i] - (a * cx.data[i] + b * cy.data[i])).abs() < 1e-9);
            }
        }
    }
}
