use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::edgemap::EdgeMap;
use crate::error::{Error, Result};
use crate::image::{convolve2d, Border, GrayImage, Kernel, RealMap};

use super::gradient::{gradient_pair, SOBEL_X};
use super::require_unit;
use super::zero_crossing::gaussian_kernel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub sigma: f64,
    /// Low threshold as a fraction of the high threshold.
    pub low_frac: f64,
    /// High threshold as a quantile of the non-zero suppressed magnitudes.
    pub high_quantile: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 1.4,
            low_frac: 0.4,
            high_quantile: 0.8,
        }
    }
}

/// Neighbour offset along the quantized gradient direction.
fn direction_offset(gx: f64, gy: f64) -> (isize, isize) {
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        (0, 1)
    } else if deg < 67.5 {
        (1, 1)
    } else if deg < 112.5 {
        (1, 0)
    } else {
        (1, -1)
    }
}

/// Non-maximum suppression along the quantized gradient direction. A pixel
/// survives when it is `>=` its backward neighbour and `>` its forward
/// neighbour, so plateaus two pixels wide keep exactly one pixel.
pub(crate) fn non_maximum_suppression(mag: &RealMap, gx: &RealMap, gy: &RealMap) -> RealMap {
    let (h, w) = (mag.height as isize, mag.width as isize);
    let at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h || x >= w {
            0.0
        } else {
            mag.data[(y * w + x) as usize]
        }
    };
    let mut out = RealMap::zeros(mag.height, mag.width);
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = mag.data[i];
            if m <= 0.0 {
                continue;
            }
            let (dy, dx) = direction_offset(gx.data[i], gy.data[i]);
            if m >= at(y - dy, x - dx) && m > at(y + dy, x + dx) {
                out.data[i] = m;
            }
        }
    }
    out
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Canny: Gaussian smoothing, Sobel gradients, non-maximum suppression and
/// hysteresis linking (8-connected). The output is binary.
pub fn canny(img: &GrayImage, params: &CannyParams) -> Result<EdgeMap> {
    require_unit(img)?;
    if !(params.low_frac > 0.0 && params.low_frac < 1.0) {
        return Err(Error::arg(format!("low_frac {} not in (0, 1)", params.low_frac)));
    }
    if !(params.high_quantile > 0.0 && params.high_quantile < 1.0) {
        return Err(Error::arg(format!(
            "high_quantile {} not in (0, 1)",
            params.high_quantile
        )));
    }
    let smooth = convolve2d(&img.to_real_map(), &gaussian_kernel(params.sigma)?, Border::Replicate)?;
    let (gx, gy) = gradient_pair(&smooth, &Kernel::from_rows(&SOBEL_X))?;
    let mag = RealMap {
        height: gx.height,
        width: gx.width,
        data: gx.data.iter().zip(&gy.data).map(|(a, b)| a.hypot(*b)).collect(),
    };
    let nms = non_maximum_suppression(&mag, &gx, &gy);

    let mut positive: Vec<f64> = nms.data.iter().copied().filter(|&m| m > 0.0).collect();
    let (h, w) = (img.height(), img.width());
    if positive.is_empty() {
        return Ok(EdgeMap::zeros(h, w));
    }
    positive.sort_by(f64::total_cmp);
    let high = quantile(&positive, params.high_quantile);
    let low = params.low_frac * high;

    let mut edge = vec![false; h * w];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for (i, &m) in nms.data.iter().enumerate() {
        if m > 0.0 && m >= high {
            edge[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (y, x) = ((i / w) as isize, (i % w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edge[j] && nms.data[j] > 0.0 && nms.data[j] >= low {
                    edge[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    EdgeMap::new(h, w, edge.into_iter().map(|e| if e { 1.0 } else { 0.0 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RangeTag;

    fn unit(h: usize, w: usize, f: impl FnMut(usize, usize) -> f64) -> GrayImage {
        GrayImage::from_fn(h, w, RangeTag::Unit, f).unwrap()
    }

    #[test]
    fn constant_gives_zero() {
        let e = canny(&unit(16, 16, |_, _| 0.5), &CannyParams::default()).unwrap();
        assert!(e.confidence().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn rejects_bad_fractions() {
        let img = unit(4, 4, |_, _| 0.5);
        for (lo, hq) in [(0.0, 0.8), (1.0, 0.8), (0.4, 0.0), (0.4, 1.0)] {
            let p = CannyParams {
                low_frac: lo,
                high_quantile: hq,
                ..CannyParams::default()
            };
            assert!(matches!(canny(&img, &p), Err(Error::Argument(_))));
        }
    }

    #[test]
    fn vertical_step_is_one_pixel_wide() {
        let img = unit(32, 32, |_, x| if x < 16 { 0.0 } else { 1.0 });
        let e = canny(&img, &CannyParams::default()).unwrap();
        for y in 0..32 {
            let cols: Vec<usize> = (0..32).filter(|&x| e.get(y, x) == 1.0).collect();
            assert_eq!(cols.len(), 1, "row {y}: {cols:?}");
            assert!(cols[0] == 15 || cols[0] == 16);
        }
    }

    #[test]
    fn weak_speckle_is_suppressed() {
        let img = unit(40, 40, |y, x| {
            let base = if x < 28 { 0.0 } else { 1.0 };
            if (y, x) == (10, 8) {
                base + 0.03
            } else {
                base
            }
        });
        let e = canny(&img, &CannyParams::default()).unwrap();
        for y in 4..17 {
            for x in 2..15 {
                assert_eq!(e.get(y, x), 0.0, "speckle survived at ({y},{x})");
            }
        }
        assert!((0..40).all(|y| (0..40).filter(|&x| e.get(y, x) == 1.0).count() == 1));
    }

    #[test]
    fn output_is_binary_and_thin() {
        let img = unit(30, 30, |y, x| {
            let d = ((y as f64 - 14.5).powi(2) + (x as f64 - 14.5).powi(2)).sqrt();
            if d < 9.0 {
                0.8
            } else {
                0.2
            }
        });
        let e = canny(&img, &CannyParams::default()).unwrap();
        assert!(e.confidence().iter().all(|&c| c == 0.0 || c == 1.0));
        assert!(e.confidence().contains(&1.0));
    }
}
