//! Deterministic inputs shared by the benchmarks.

use edgekit_core::{BinaryMap, GrayImage, RangeTag};

/// Smooth gradient with a bright disc, unit range.
pub fn test_image(size: usize) -> GrayImage {
    let c = size as f64 / 2.0;
    GrayImage::from_fn(size, size, RangeTag::Unit, |y, x| {
        let (dy, dx) = (y as f64 - c, x as f64 - c);
        let base = 0.2 + 0.3 * x as f64 / size as f64;
        if dy * dy + dx * dx < (size as f64 / 4.0).powi(2) {
            0.9
        } else {
            base
        }
    })
    .expect("values lie in [0, 1]")
}

/// Circle outline of the given radius, optionally shifted right.
pub fn circle(size: usize, radius: f64, shift: f64) -> BinaryMap {
    let c = size as f64 / 2.0;
    let mut m = BinaryMap::empty(size, size);
    for y in 0..size {
        for x in 0..size {
            let d = ((y as f64 - c).powi(2) + (x as f64 - c - shift).powi(2)).sqrt();
            if (d - radius).abs() < 0.5 {
                m.set(y, x, true);
            }
        }
    }
    m
}
