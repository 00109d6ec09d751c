//! Classical baseline detectors. Every detector takes a unit-range image and
//! returns an [`EdgeMap`](crate::EdgeMap) of the same dimensions.
//!
//! Sobel, Prewitt, Roberts, LoG and zero-crossing produce soft confidences
//! suitable for threshold sweeps. Canny produces a binary map.

mod canny;
mod gradient;
mod zero_crossing;

pub use canny::{canny, CannyParams};
pub use gradient::{prewitt, roberts, sobel, PREWITT_X, SOBEL_X};
pub use zero_crossing::{
    gaussian_kernel, laplacian_kernel, log_detector, log_kernel, zero_crossing_strength, zerocross,
};

use crate::error::{Error, Result};
use crate::image::{GrayImage, RangeTag};

/// Default LoG smoothing scale.
pub const DEFAULT_LOG_SIGMA: f64 = 2.0;

fn require_unit(img: &GrayImage) -> Result<()> {
    if img.range() != RangeTag::Unit {
        return Err(Error::arg("detectors expect a unit-normalized image"));
    }
    Ok(())
}
