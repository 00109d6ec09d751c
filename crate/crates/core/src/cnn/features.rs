use crate::edgemap::EdgeMap;
use crate::error::{Error, Result};
use crate::image::{GrayImage, RangeTag};
use crate::nn::Tensor;
use crate::WORKING_SIZE;

use super::model::CnnModel;

/// Channel-major feature activations `[channels, height, width]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

/// One row per pixel, one column per channel, row-major. Row `r` holds
/// pixel `(r / width, r % width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

fn require_working_image(img: &GrayImage) -> Result<Tensor> {
    if img.height() != WORKING_SIZE || img.width() != WORKING_SIZE {
        return Err(Error::shape(format!(
            "expected a {WORKING_SIZE}x{WORKING_SIZE} image, got {}x{}",
            img.height(),
            img.width()
        )));
    }
    if img.range() != RangeTag::Unit {
        return Err(Error::arg("expected a unit-normalized image"));
    }
    image_tensor(img)
}

/// `[1, 1, h, w]` tensor view of an image.
pub fn image_tensor(img: &GrayImage) -> Result<Tensor> {
    Tensor::new(vec![1, 1, img.height(), img.width()], img.pixels().to_vec())
}

/// Edge-head activations for a 256x256 unit image (batch norm in inference mode).
pub fn forward_edge(model: &CnnModel, img: &GrayImage) -> Result<EdgeMap> {
    let x = require_working_image(img)?;
    let y = model.forward(&x)?;
    EdgeMap::new(img.height(), img.width(), y.into_data())
}

/// Feature-tap activations for a 256x256 unit image (batch norm in inference mode).
pub fn extract_features(model: &CnnModel, img: &GrayImage) -> Result<FeatureMap> {
    let x = require_working_image(img)?;
    let y = model.forward_until(&x, model.feature_tap)?;
    let [_, c, h, w] = y.dims4()?;
    Ok(FeatureMap {
        channels: c,
        height: h,
        width: w,
        data: y.into_data(),
    })
}

/// Flatten a 256x256 feature map to a `(256 * 256) x C` matrix.
pub fn flatten_features(fmap: &FeatureMap) -> Result<FeatureMatrix> {
    if fmap.height != WORKING_SIZE || fmap.width != WORKING_SIZE {
        return Err(Error::shape(format!(
            "feature map is {}x{}, expected {WORKING_SIZE}x{WORKING_SIZE}",
            fmap.height, fmap.width
        )));
    }
    let plane = fmap.height * fmap.width;
    let c = fmap.channels;
    let mut data = vec![0.0; plane * c];
    for ch in 0..c {
        for (r, v) in fmap.data[ch * plane..(ch + 1) * plane].iter().enumerate() {
            data[r * c + ch] = *v;
        }
    }
    FeatureMatrix::new(plane, c, data)
}

/// Inverse of [`flatten_features`].
pub fn unflatten_features(m: &FeatureMatrix, height: usize, width: usize) -> Result<FeatureMap> {
    if m.rows != height * width {
        return Err(Error::shape(format!(
            "{} rows cannot form a {height}x{width} map",
            m.rows
        )));
    }
    let plane = height * width;
    let mut data = vec![0.0; m.data.len()];
    for r in 0..plane {
        for ch in 0..m.cols {
            data[ch * plane + r] = m.data[r * m.cols + ch];
        }
    }
    Ok(FeatureMap {
        channels: m.cols,
        height,
        width,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fmap() -> FeatureMap {
        let c = 3;
        let plane = WORKING_SIZE * WORKING_SIZE;
        FeatureMap {
            channels: c,
            height: WORKING_SIZE,
            width: WORKING_SIZE,
            data: (0..c * plane).map(|i| (i % 977) as f64 * 0.01).collect(),
        }
    }

    #[test]
    fn flatten_indexing_contract() {
        let f = fmap();
        let m = flatten_features(&f).unwrap();
        assert_eq!((m.rows, m.cols), (65536, 3));
        let plane = 65536;
        for ch in 0..3 {
            assert_eq!(m.row(0)[ch], f.data[ch * plane]);
            // 257 = 1 * 256 + 1
            assert_eq!(m.row(257)[ch], f.data[ch * plane + 256 + 1]);
        }
        assert_eq!(unflatten_features(&m, 256, 256).unwrap(), f);
    }

    #[test]
    fn wrong_size_rejected() {
        let f = FeatureMap {
            channels: 1,
            height: 4,
            width: 4,
            data: vec![0.0; 16],
        };
        assert!(matches!(flatten_features(&f), Err(Error::Shape(_))));
    }
}
