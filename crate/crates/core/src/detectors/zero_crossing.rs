use crate::edgemap::EdgeMap;
use crate::error::{Error, Result};
use crate::image::{convolve2d, Border, GrayImage, Kernel, RealMap};

use super::require_unit;

// Responses smaller than this are treated as exact zeros so that rounding
// noise on flat regions never registers as a sign change.
const SIGN_EPS: f64 = 1e-9;

/// Normalized 2-D Gaussian with radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let r = (3.0 * sigma).ceil() as isize;
    let n = (2 * r + 1) as usize;
    let mut data = Vec::with_capacity(n * n);
    for y in -r..=r {
        for x in -r..=r {
            let d2 = (y * y + x * x) as f64;
            data.push((-d2 / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = data.iter().sum();
    data.iter_mut().for_each(|v| *v /= sum);
    Kernel::new(n, n, data)
}

/// Laplacian-of-Gaussian kernel with radius `ceil(3 sigma)`, shifted to sum
/// to zero.
pub fn log_kernel(sigma: f64) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    let r = (3.0 * sigma).ceil() as isize;
    let n = (2 * r + 1) as usize;
    let s2 = sigma * sigma;
    let mut data = Vec::with_capacity(n * n);
    for y in -r..=r {
        for x in -r..=r {
            let q = (y * y + x * x) as f64 / (2.0 * s2);
            data.push(-(1.0 - q) * (-q).exp() / (std::f64::consts::PI * s2 * s2));
        }
    }
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    data.iter_mut().for_each(|v| *v -= mean);
    Kernel::new(n, n, data)
}

/// The 4-neighbour discrete Laplacian.
pub fn laplacian_kernel() -> Kernel {
    Kernel::from_rows(&[[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
}

/// Zero-crossing strength of a second-derivative response.
///
/// Along each of the four directions `d` the samples `r(p - d)`, `r(p)` and
/// `r(p + d)` are inspected; every pair among them with strictly opposite
/// signs contributes its absolute difference, and the pixel takes the
/// largest contribution (0 when no sign change touches it). Including the
/// centre sample catches crossings that fall between two adjacent pixels.
pub fn zero_crossing_strength(response: &RealMap) -> RealMap {
    const DIRS: [(isize, isize); 4] = [(0, 1), (1, 0), (1, 1), (1, -1)];
    let (h, w) = (response.height, response.width);
    let mut out = RealMap::zeros(h, w);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut best: f64 = 0.0;
            for (dy, dx) in DIRS {
                let a = response.get_clamped(y - dy, x - dx);
                let c = response.get_clamped(y, x);
                let b = response.get_clamped(y + dy, x + dx);
                for (u, v) in [(a, b), (a, c), (c, b)] {
                    if (u > SIGN_EPS && v < -SIGN_EPS) || (u < -SIGN_EPS && v > SIGN_EPS) {
                        best = best.max((u - v).abs());
                    }
                }
            }
            out.data[y as usize * w + x as usize] = best;
        }
    }
    out
}

fn zero_crossing_map(img: &GrayImage, kernel: &Kernel) -> Result<EdgeMap> {
    let response = convolve2d(&img.to_real_map(), kernel, Border::Replicate)?;
    let strength = zero_crossing_strength(&response);
    let max = strength.max();
    Ok(EdgeMap::from_scaled(strength, if max > 0.0 { max } else { 0.0 }))
}

/// Marr-Hildreth detector: zero crossings of the LoG response, normalized by
/// the strongest crossing in the image.
pub fn log_detector(img: &GrayImage, sigma: f64) -> Result<EdgeMap> {
    require_unit(img)?;
    zero_crossing_map(img, &log_kernel(sigma)?)
}

/// Zero crossings of an arbitrary second-derivative filter (default: the
/// discrete Laplacian).
pub fn zerocross(img: &GrayImage, kernel: Option<&Kernel>) -> Result<EdgeMap> {
    require_unit(img)?;
    match kernel {
        Some(k) => zero_crossing_map(img, k),
        None => zero_crossing_map(img, &laplacian_kernel()),
    }
}
