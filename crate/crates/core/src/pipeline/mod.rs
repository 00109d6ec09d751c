//! The hybrid detector: resize, normalize, CNN features, flatten, SVM
//! scores, calibration, reshape and optional morphological filtering.

mod bundle;
mod calibration;
mod morphology;

pub use bundle::{load_bundle, save_bundle, BUNDLE_VERSION};
pub use calibration::{percentile, Calibration};
pub use morphology::{
    connectivity_number, postprocess_morphological, remove_small_components, thin, DEFAULT_MIN_COMPONENT,
};

use crate::cnn::{extract_features, flatten_features, CnnModel, TrainSample};
use crate::edgemap::{BinaryMap, EdgeMap};
use crate::error::{Error, Result};
use crate::image::{normalize_unit, resize_bilinear, GrayImage, RangeTag};
use crate::svm::{decision_values, sample_training_pixels, train_svm, SvmConfig, SvmModel, SvmReport};
use crate::WORKING_SIZE;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridDetector {
    pub cnn: CnnModel,
    pub svm: SvmModel,
    pub calibration: Calibration,
    pub postprocess: bool,
    pub min_component: usize,
}

impl HybridDetector {
    /// Detector with the neutral calibration and post-processing off.
    pub fn new(cnn: CnnModel, svm: SvmModel) -> Result<Self> {
        let det = HybridDetector {
            cnn,
            svm,
            calibration: Calibration::default(),
            postprocess: false,
            min_component: DEFAULT_MIN_COMPONENT,
        };
        det.validate()?;
        Ok(det)
    }

    pub fn validate(&self) -> Result<()> {
        self.cnn.validate()?;
        let c = self.cnn.feature_channels();
        if self.svm.dim() != c {
            return Err(Error::Config(format!(
                "svm expects {} features but the cnn tap has {c} channels",
                self.svm.dim()
            )));
        }
        self.calibration.validate()
    }
}

/// Resize to the working size and map to unit range.
pub fn prepare_image(img: &GrayImage) -> Result<GrayImage> {
    let resized = resize_bilinear(img, WORKING_SIZE, WORKING_SIZE)?;
    match resized.range() {
        RangeTag::Raw8 => normalize_unit(&resized),
        RangeTag::Unit => Ok(resized),
    }
}

/// Raw SVM decision values for every working-size pixel, row-major.
pub fn hybrid_scores(det: &HybridDetector, img: &GrayImage) -> Result<Vec<f64>> {
    det.validate()?;
    let prepared = prepare_image(img)?;
    let fmat = flatten_features(&extract_features(&det.cnn, &prepared)?)?;
    decision_values(&det.svm, &fmat)
}

/// Calibrated soft edge map at the working size.
pub fn detect_hybrid(det: &HybridDetector, img: &GrayImage) -> Result<EdgeMap> {
    let scores = hybrid_scores(det, img)?;
    let conf = scores.iter().map(|&f| det.calibration.apply(f)).collect();
    let map = EdgeMap::new(WORKING_SIZE, WORKING_SIZE, conf)?;
    Ok(if det.postprocess {
        postprocess_morphological(&map, det.min_component)
    } else {
        map
    })
}

/// Sign-rule labels: a pixel is an edge when its decision value is positive.
/// Equals `detect_hybrid(..).confidence > 0.5` without post-processing.
pub fn detect_hybrid_binary(det: &HybridDetector, img: &GrayImage) -> Result<BinaryMap> {
    let scores = hybrid_scores(det, img)?;
    let bits = scores.iter().map(|&f| f > 0.0).collect();
    let map = BinaryMap::new(WORKING_SIZE, WORKING_SIZE, bits)?;
    if det.postprocess {
        Ok(postprocess_morphological(&map.to_edge_map(), det.min_component).binarize(0.5))
    } else {
        Ok(map)
    }
}

/// Fit the calibration to the 1st and 99th percentiles of the decision
/// values pooled over `images`.
pub fn calibrate_scores(det: &HybridDetector, images: &[GrayImage]) -> Result<HybridDetector> {
    if images.is_empty() {
        return Err(Error::arg("calibration needs at least one image"));
    }
    let mut all = Vec::with_capacity(images.len() * WORKING_SIZE * WORKING_SIZE);
    for img in images {
        all.extend(hybrid_scores(det, img)?);
    }
    let mut out = det.clone();
    out.calibration = Calibration::fit(&all)?;
    Ok(out)
}

/// Outcome of the SVM stage.
#[derive(Debug, Clone)]
pub struct HybridFit {
    pub detector: HybridDetector,
    pub report: SvmReport,
    pub samples: usize,
    pub warnings: usize,
}

/// Second training stage: sample pixels from the frozen CNN's features
/// (targets binarized at 0.5), train the SVM, and calibrate on the same
/// images. Image `i` is sampled with seed `seed + i`.
pub fn train_hybrid_svm(
    cnn: CnnModel,
    data: &[TrainSample],
    svm_cfg: &SvmConfig,
    n_per_class: usize,
    seed: u64,
) -> Result<HybridFit> {
    if data.is_empty() {
        return Err(Error::arg("no training images for the svm stage"));
    }
    let mut samples = Vec::new();
    let mut warnings = 0;
    for (i, s) in data.iter().enumerate() {
        let image = prepare_image(&s.image)?;
        let fmat = flatten_features(&extract_features(&cnn, &image)?)?;
        let bits = s.target.data.iter().map(|&t| t >= 0.5).collect();
        let gt = BinaryMap::new(s.target.height, s.target.width, bits)?;
        let drawn = sample_training_pixels(&fmat, &gt, n_per_class, seed.wrapping_add(i as u64))?;
        warnings += drawn.warnings;
        samples.extend(drawn.samples);
    }
    if warnings > 0 {
        log::warn!("{warnings} image(s) had a class with no pixels");
    }
    let fit = train_svm(&samples, svm_cfg)?;
    let det = HybridDetector::new(cnn, fit.model)?;
    let images: Vec<GrayImage> = data.iter().map(|s| s.image.clone()).collect();
    Ok(HybridFit {
        detector: calibrate_scores(&det, &images)?,
        report: fit.report,
        samples: samples.len(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::build_model;

    fn detector(w: f64, b: f64) -> HybridDetector {
        let cnn = build_model(3);
        let c = cnn.feature_channels();
        HybridDetector::new(cnn, SvmModel::new(vec![w; c], b, 1e-4)).unwrap()
    }

    fn image() -> GrayImage {
        GrayImage::from_fn(40, 30, RangeTag::Raw8, |y, x| ((x * 7 + y * 3) % 256) as f64).unwrap()
    }

    #[test]
    fn zero_model_is_uniform_half() {
        let e = detect_hybrid(&detector(0.0, 0.0), &image()).unwrap();
        assert_eq!((e.height(), e.width()), (WORKING_SIZE, WORKING_SIZE));
        assert!(e.confidence().iter().all(|&c| c == 0.5));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let cnn = build_model(3);
        assert!(matches!(
            HybridDetector::new(cnn, SvmModel::new(vec![1.0; 3], 0.0, 1e-4)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn binary_is_the_strict_half_slice() {
        let det = calibrate_scores(&detector(0.3, -0.05), &[image()]).unwrap();
        let soft = detect_hybrid(&det, &image()).unwrap();
        let hard = detect_hybrid_binary(&det, &image()).unwrap();
        for (c, b) in soft.confidence().iter().zip(&hard.bits) {
            assert_eq!(*c > 0.5, *b);
        }
    }
}
