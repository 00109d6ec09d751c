use std::path::Path;

use crate::cnn::TrainSample;
use crate::edgemap::BinaryMap;
use crate::error::{Error, Result};
use crate::eval::EvalItem;
use crate::image::{load_image, GrayImage, RealMap};
use crate::pipeline::prepare_image;
use crate::WORKING_SIZE;

use super::{DatasetManifest, Sample, Split};

/// Decode a mask; every nonzero pixel is a boundary pixel.
pub fn load_gt_mask(path: impl AsRef<Path>) -> Result<BinaryMap> {
    let img = load_image(path)?;
    BinaryMap::new(
        img.height(),
        img.width(),
        img.pixels().iter().map(|&v| v > 0.0).collect(),
    )
}

pub fn load_sample_image(manifest: &DatasetManifest, sample: &Sample) -> Result<GrayImage> {
    load_image(manifest.resolve(&sample.image_path))
}

/// Per-annotator masks resized (nearest neighbour) to `size` x `size`.
pub fn load_eval_gts(manifest: &DatasetManifest, sample: &Sample, size: usize) -> Result<Vec<BinaryMap>> {
    if sample.gt_paths.is_empty() {
        return Err(Error::Data(format!("sample '{}' has no ground truth", sample.id)));
    }
    sample
        .gt_paths
        .iter()
        .map(|p| load_gt_mask(manifest.resolve(p))?.resize_nearest(size, size))
        .collect()
}

/// Mean of the resized annotator masks, values in `{0, 1/k, ..., 1}`.
pub fn load_training_targets(manifest: &DatasetManifest, sample: &Sample, size: usize) -> Result<RealMap> {
    let gts = load_eval_gts(manifest, sample, size)?;
    let k = gts.len() as f64;
    let mut data = vec![0.0; size * size];
    for g in &gts {
        for (d, &b) in data.iter_mut().zip(&g.bits) {
            if b {
                *d += 1.0;
            }
        }
    }
    data.iter_mut().for_each(|d| *d /= k);
    RealMap::from_vec(size, size, data)
}

/// Raw images with working-size ground truth for one split.
pub fn eval_items(manifest: &DatasetManifest, split: Split) -> Result<Vec<EvalItem>> {
    manifest
        .split(split)
        .map(|s| {
            Ok(EvalItem {
                id: s.id.clone(),
                image: load_sample_image(manifest, s)?,
                gts: load_eval_gts(manifest, s, WORKING_SIZE)?,
            })
        })
        .collect()
}

/// Prepared working-size images with mean-annotator targets for one split.
pub fn training_samples(manifest: &DatasetManifest, split: Split) -> Result<Vec<TrainSample>> {
    manifest
        .split(split)
        .map(|s| {
            Ok(TrainSample {
                image: prepare_image(&load_sample_image(manifest, s)?)?,
                target: load_training_targets(manifest, s, WORKING_SIZE)?,
            })
        })
        .collect()
}
