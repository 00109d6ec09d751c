use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{nearest_index, RealMap};

/// Per-pixel edge confidence in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMap {
    height: usize,
    width: usize,
    confidence: Vec<f64>,
}

impl EdgeMap {
    pub fn new(height: usize, width: usize, confidence: Vec<f64>) -> Result<Self> {
        if confidence.len() != height * width {
            return Err(Error::shape(format!(
                "{} confidences for a {height}x{width} edge map",
                confidence.len()
            )));
        }
        if let Some(bad) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::arg(format!("confidence {bad} outside [0, 1]")));
        }
        Ok(EdgeMap {
            height,
            width,
            confidence,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        EdgeMap {
            height,
            width,
            confidence: vec![0.0; height * width],
        }
    }

    /// Scale a non-negative response map by `scale` and clamp into `[0, 1]`.
    pub(crate) fn from_scaled(map: RealMap, scale: f64) -> Self {
        let confidence = if scale > 0.0 {
            map.data.iter().map(|v| (v / scale).clamp(0.0, 1.0)).collect()
        } else {
            vec![0.0; map.data.len()]
        };
        EdgeMap {
            height: map.height,
            width: map.width,
            confidence,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.confidence[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.confidence.iter().copied().fold(0.0, f64::max)
    }

    /// Pixels with confidence `>= threshold`.
    pub fn binarize(&self, threshold: f64) -> BinaryMap {
        BinaryMap {
            height: self.height,
            width: self.width,
            bits: self.confidence.iter().map(|&c| c >= threshold).collect(),
        }
    }

    pub fn transpose(&self) -> EdgeMap {
        let mut confidence = vec![0.0; self.confidence.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                confidence[x * self.height + y] = self.confidence[y * self.width + x];
            }
        }
        EdgeMap {
            height: self.width,
            width: self.height,
            confidence,
        }
    }

    /// 8-bit rendering, confidence scaled to 0..=255.
    pub fn to_luma8(&self) -> Vec<u8> {
        self.confidence.iter().map(|&c| (c * 255.0).round() as u8).collect()
    }
}

/// Binary mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMap {
    pub height: usize,
    pub width: usize,
    pub bits: Vec<bool>,
}

impl BinaryMap {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::shape(format!("{} bits for a {height}x{width} mask", bits.len())));
        }
        Ok(BinaryMap { height, width, bits })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        BinaryMap {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Nearest-neighbour resize (half-pixel-centred); binary masks are never
    /// interpolated.
    pub fn resize_nearest(&self, out_h: usize, out_w: usize) -> Result<BinaryMap> {
        if out_h == 0 || out_w == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::arg("cannot resize to or from an empty mask"));
        }
        let cols: Vec<usize> = (0..out_w).map(|x| nearest_index(x, self.width, out_w)).collect();
        let mut bits = Vec::with_capacity(out_h * out_w);
        for y in 0..out_h {
            let sy = nearest_index(y, self.height, out_h);
            bits.extend(cols.iter().map(|&sx| self.get(sy, sx)));
        }
        Ok(BinaryMap {
            height: out_h,
            width: out_w,
            bits,
        })
    }

    pub fn to_edge_map(&self) -> EdgeMap {
        EdgeMap {
            height: self.height,
            width: self.width,
            confidence: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}
