use crate::edgemap::EdgeMap;
use crate::error::Result;
use crate::image::{convolve2d, Border, GrayImage, Kernel, RealMap};

use super::require_unit;

pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
pub const PREWITT_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]];

// Largest gradient magnitude either kernel pair can produce on a [0, 1] image,
// found by enumerating the 512 binary 3x3 patches (magnitude is convex, so the
// maximum sits on a vertex of the unit cube).
const SOBEL_MAX: f64 = 4.472_135_954_999_579; // sqrt(20)
const PREWITT_MAX: f64 = 3.162_277_660_168_379_5; // sqrt(10)
const ROBERTS_MAX: f64 = std::f64::consts::SQRT_2;

pub(crate) fn gradient_pair(map: &RealMap, kx: &Kernel) -> Result<(RealMap, RealMap)> {
    let gx = convolve2d(map, kx, Border::Replicate)?;
    let gy = convolve2d(map, &kx.transpose(), Border::Replicate)?;
    Ok((gx, gy))
}

fn magnitude(gx: &RealMap, gy: &RealMap) -> RealMap {
    RealMap {
        height: gx.height,
        width: gx.width,
        data: gx.data.iter().zip(&gy.data).map(|(a, b)| a.hypot(*b)).collect(),
    }
}

fn gradient_detector(img: &GrayImage, kx: [[f64; 3]; 3], max: f64) -> Result<EdgeMap> {
    require_unit(img)?;
    let (gx, gy) = gradient_pair(&img.to_real_map(), &Kernel::from_rows(&kx))?;
    Ok(EdgeMap::from_scaled(magnitude(&gx, &gy), max))
}

/// Sobel gradient magnitude, normalized by its largest attainable value.
pub fn sobel(img: &GrayImage) -> Result<EdgeMap> {
    gradient_detector(img, SOBEL_X, SOBEL_MAX)
}

/// Prewitt gradient magnitude, normalized by its largest attainable value.
pub fn prewitt(img: &GrayImage) -> Result<EdgeMap> {
    gradient_detector(img, PREWITT_X, PREWITT_MAX)
}

/// Roberts cross. The 2x2 support is anchored at the top-left pixel; the
/// far row and column replicate.
pub fn roberts(img: &GrayImage) -> Result<EdgeMap> {
    require_unit(img)?;
    let map = img.to_real_map();
    let (h, w) = (map.height, map.width);
    let mut mag = RealMap::zeros(h, w);
    for y in 0..h {
        for x in 0..w {
            let (yi, xi) = (y as isize, x as isize);
            let d1 = map.get(y, x) - map.get_clamped(yi + 1, xi + 1);
            let d2 = map.get_clamped(yi, xi + 1) - map.get_clamped(yi + 1, xi);
            mag.data[y * w + x] = d1.hypot(d2);
        }
    }
    Ok(EdgeMap::from_scaled(mag, ROBERTS_MAX))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::RangeTag;

    fn unit(h: usize, w: usize, f: impl FnMut(usize, usize) -> f64) -> GrayImage {
        GrayImage::from_fn(h, w, RangeTag::Unit, f).unwrap()
    }

    fn argmax_set(e: &EdgeMap) -> Vec<usize> {
        let m = e.max();
        (0..e.confidence().len()).filter(|&i| e.confidence()[i] == m).collect()
    }

    #[test]
    fn kernel_maxima_by_enumeration() {
        for (kx, max) in [(SOBEL_X, SOBEL_MAX), (PREWITT_X, PREWITT_MAX)] {
            let mut best: f64 = 0.0;
            for bits in 0u32..512 {
                let (mut gx, mut gy) = (0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let p = f64::from((bits >> (i * 3 + j)) & 1);
                        gx += kx[i][j] * p;
                        gy += kx[j][i] * p;
                    }
                }
                best = best.max(gx.hypot(gy));
            }
            assert!((best - max).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_gives_zero() {
        let img = unit(9, 7, |_, _| 0.42);
        for d in [sobel, prewitt, roberts] {
            assert!(d(&img).unwrap().confidence().iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn raw_input_rejected() {
        let img = GrayImage::from_fn(3, 3, RangeTag::Raw8, |_, _| 10.0).unwrap();
        assert!(sobel(&img).is_err());
        assert!(roberts(&img).is_err());
    }

    #[test]
    fn vertical_step_hits_adjacent_columns() {
        // 0 for x < 4, 1 for x >= 4. Hand-applied Sobel: columns 3 and 4 see
        // gx = 4, every other column 0.
        let img = unit(8, 8, |_, x| if x < 4 { 0.0 } else { 1.0 });
        let e = sobel(&img).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expect = if x == 3 || x == 4 { 4.0 / SOBEL_MAX } else { 0.0 };
                assert!((e.get(y, x) - expect).abs() < 1e-12);
            }
        }
        let p = prewitt(&img).unwrap();
        assert!((p.get(2, 3) - 3.0 / PREWITT_MAX).abs() < 1e-12);
        assert_eq!(p.get(2, 0), 0.0);
        assert_eq!(p.get(2, 7), 0.0);
    }

    #[test]
    fn transpose_and_rotation_symmetry() {
        let img = unit(6, 9, |y, x| ((y * 7 + x * 3) % 5) as f64 / 4.0);
        let timg = GrayImage::new(9, 6, img.to_real_map().transpose().data, RangeTag::Unit).unwrap();
        for d in [sobel, prewitt] {
            let a = d(&img).unwrap().transpose();
            let b = d(&timg).unwrap();
            for (p, q) in a.confidence().iter().zip(b.confidence()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
        // 90-degree clockwise rotation: out(y, x) = in(h - 1 - x, y)
        let (h, w) = (img.height(), img.width());
        let rot = unit(w, h, |y, x| img.get(h - 1 - x, y));
        let a = prewitt(&img).unwrap();
        let b = prewitt(&rot).unwrap();
        for y in 0..w {
            for x in 0..h {
                assert!((b.get(y, x) - a.get(h - 1 - x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn roberts_diagonal_step_and_point() {
        let img = unit(6, 6, |y, x| if x > y { 1.0 } else { 0.0 });
        let e = roberts(&img).unwrap();
        // unit response along the step; the replicated far column doubles up
        for i in 0..5 {
            assert!((e.get(i, i) - 1.0 / ROBERTS_MAX).abs() < 1e-12);
        }
        for i in 0..4 {
            assert!((e.get(i, i + 1) - 1.0 / ROBERTS_MAX).abs() < 1e-12);
        }
        assert_eq!(e.get(4, 5), 1.0);
        assert_eq!(e.get(5, 0), 0.0);

        let dot = unit(7, 7, |y, x| if (y, x) == (3, 3) { 1.0 } else { 0.0 });
        let e = roberts(&dot).unwrap();
        for y in 0..7 {
            for x in 0..7 {
                let inside = (2..=3).contains(&y) && (2..=3).contains(&x);
                assert_eq!(e.get(y, x) > 0.0, inside, "({y},{x})");
            }
        }
    }

    #[test]
    fn contrast_scaling_keeps_argmax() {
        let img = unit(10, 10, |y, x| 0.25 * (((y * 3 + x * x) % 7) as f64 / 6.0));
        let doubled = unit(10, 10, |y, x| 2.0 * img.get(y, x));
        for d in [sobel, prewitt, roberts] {
            assert_eq!(argmax_set(&d(&img).unwrap()), argmax_set(&d(&doubled).unwrap()));
        }
    }
}
