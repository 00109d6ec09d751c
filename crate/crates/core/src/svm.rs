//! Linear SVM over per-pixel feature vectors.
//!
//! Training minimizes
//!
//! ```text
//! lambda * (|w|^2 + b^2) + (1/n) * sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! by dual coordinate descent on the equivalent box-constrained dual, with the
//! bias folded in as a constant feature of value 1. Features are standardized
//! with statistics from the training sample; the standardization is stored
//! in the model and applied at scoring time.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cnn::FeatureMatrix;
use crate::edgemap::BinaryMap;
use crate::error::{Error, Result};

pub const SVM_FORMAT_VERSION: u32 = 1;
const SVM_FORMAT: &str = "edgekit-svm";

/// Per-dimension affine map `x' = (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Mean and population standard deviation of every dimension; a zero
    /// deviation keeps scale 1.
    pub fn fit(samples: &[PixelSample]) -> Self {
        let dim = samples[0].feature.len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            mean.iter_mut().zip(&s.feature).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(&s.feature).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub lambda: f64,
    pub standardizer: Standardizer,
}

/// A feature vector with label `-1` (non-edge) or `+1` (edge).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelSample {
    pub feature: Vec<f64>,
    pub label: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub lambda: f64,
    pub max_epochs: usize,
    pub tol: f64,
    pub seed: u64,
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            max_epochs: 200,
            tol: 1e-4,
            seed: 42,
            standardize: true,
        }
    }
}

/// Solver diagnostics; objectives are in the scale of the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmReport {
    pub epochs: usize,
    pub converged: bool,
    /// Largest projected-gradient violation at the returned solution.
    pub max_violation: f64,
    pub primal: f64,
    pub dual: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    pub report: SvmReport,
}

/// Pixels drawn from one image plus the number of degenerate-class warnings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PixelSampling {
    pub samples: Vec<PixelSample>,
    pub warnings: usize,
}

/// Draw up to `n_per_class` edge and non-edge pixels uniformly without
/// replacement. An image without edge pixels contributes nothing; a class
/// with no pixels is reported as a warning.
pub fn sample_training_pixels(
    fmat: &FeatureMatrix,
    gt: &BinaryMap,
    n_per_class: usize,
    seed: u64,
) -> Result<PixelSampling> {
    if n_per_class == 0 {
        return Err(Error::arg("n_per_class must be at least 1"));
    }
    if gt.bits.len() != fmat.rows {
        return Err(Error::shape(format!(
            "ground truth has {} pixels, feature matrix {} rows",
            gt.bits.len(),
            fmat.rows
        )));
    }
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..fmat.rows).partition(|&r| gt.bits[r]);
    let mut out = PixelSampling::default();
    if pos.is_empty() {
        log::warn!("image without edge pixels skipped");
        out.warnings = 1;
        return Ok(out);
    }
    if neg.is_empty() {
        log::warn!("image without non-edge pixels: positives only");
        out.warnings = 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (idx, label) in [(&mut pos, 1i8), (&mut neg, -1i8)] {
        let take = n_per_class.min(idx.len());
        let (chosen, _) = idx.partial_shuffle(&mut rng, take);
        out.samples.extend(chosen.iter().map(|&r| PixelSample {
            feature: fmat.row(r).to_vec(),
            label,
        }));
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Train by dual coordinate descent with a fresh random permutation every
/// epoch, stopping once the largest projected-gradient violation of an epoch
/// falls below `cfg.tol`.
pub fn train_svm(samples: &[PixelSample], cfg: &SvmConfig) -> Result<SvmFit> {
    if !(cfg.lambda > 0.0) {
        return Err(Error::arg(format!("lambda must be positive, got {}", cfg.lambda)));
    }
    if !(cfg.tol > 0.0) || cfg.max_epochs == 0 {
        return Err(Error::arg("tol and max_epochs must be positive"));
    }
    let first = samples
        .first()
        .ok_or_else(|| Error::Training("no training samples".into()))?;
    let dim = first.feature.len();
    if samples.iter().any(|s| s.feature.len() != dim) {
        return Err(Error::shape("training samples differ in dimension"));
    }
    if let Some(bad) = samples.iter().find(|s| s.label != 1 && s.label != -1) {
        return Err(Error::arg(format!("label {} is not -1 or +1", bad.label)));
    }
    if !(samples.iter().any(|s| s.label == 1) && samples.iter().any(|s| s.label == -1)) {
        return Err(Error::Training("training samples contain a single class".into()));
    }

    let standardizer = if cfg.standardize {
        Standardizer::fit(samples)
    } else {
        Standardizer::identity(dim)
    };
    // Augmented rows [x', 1].
    let stride = dim + 1;
    let n = samples.len();
    let mut xs = vec![0.0; n * stride];
    for (row, s) in xs.chunks_mut(stride).zip(samples) {
        standardizer.apply_into(&s.feature, &mut row[..dim]);
        row[dim] = 1.0;
    }
    let ys: Vec<f64> = samples.iter().map(|s| f64::from(s.label)).collect();
    let c = 1.0 / (2.0 * cfg.lambda * n as f64);
    let qd: Vec<f64> = xs.chunks(stride).map(|r| dot(r, r)).collect();

    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; stride];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs = 0;
    let mut converged = false;
    while epochs < cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut max_pg: f64 = 0.0;
        for &i in &order {
            let xi = &xs[i * stride..(i + 1) * stride];
            let g = ys[i] * dot(&w, xi) - 1.0;
            let pg = projected_gradient(alpha[i], g, c);
            max_pg = max_pg.max(pg.abs());
            if pg != 0.0 && qd[i] > 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, c);
                let d = (alpha[i] - old) * ys[i];
                w.iter_mut().zip(xi).for_each(|(wj, xj)| *wj += d * xj);
            }
        }
        epochs += 1;
        if max_pg < cfg.tol {
            converged = true;
            break;
        }
    }

    let mut hinge = 0.0;
    let mut max_violation: f64 = 0.0;
    for i in 0..n {
        let margin = ys[i] * dot(&w, &xs[i * stride..(i + 1) * stride]);
        hinge += (1.0 - margin).max(0.0);
        max_violation = max_violation.max(projected_gradient(alpha[i], margin - 1.0, c).abs());
    }
    let wnorm2 = dot(&w, &w);
    let primal = cfg.lambda * wnorm2 + hinge / n as f64;
    let dual = 2.0 * cfg.lambda * (alpha.iter().sum::<f64>() - 0.5 * wnorm2);
    if !converged {
        log::warn!("svm stopped after {epochs} epochs with violation {max_violation:.3e}");
    }
    let b = w.pop().unwrap_or(0.0);
    Ok(SvmFit {
        model: SvmModel {
            w,
            b,
            lambda: cfg.lambda,
            standardizer,
        },
        report: SvmReport {
            epochs,
            converged,
            max_violation,
            primal,
            dual,
            duality_gap: primal - dual,
        },
    })
}

#[inline]
fn projected_gradient(alpha: f64, g: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= c {
        g.max(0.0)
    } else {
        g
    }
}

impl SvmModel {
    /// Model with identity standardization.
    pub fn new(w: Vec<f64>, b: f64, lambda: f64) -> Self {
        let dim = w.len();
        SvmModel {
            w,
            b,
            lambda,
            standardizer: Standardizer::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// Affine score of one raw feature vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut acc = self.b;
        for (((v, m), s), w) in x
            .iter()
            .zip(&self.standardizer.mean)
            .zip(&self.standardizer.scale)
            .zip(&self.w)
        {
            acc += w * ((v - m) / s);
        }
        acc
    }

    /// Training objective of this model on `samples`.
    pub fn objective(&self, samples: &[PixelSample]) -> f64 {
        let hinge: f64 = samples
            .iter()
            .map(|s| (1.0 - f64::from(s.label) * self.score(&s.feature)).max(0.0))
            .sum();
        self.lambda * (dot(&self.w, &self.w) + self.b * self.b) + hinge / samples.len() as f64
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = SvmFile {
            format: SVM_FORMAT.to_string(),
            version: SVM_FORMAT_VERSION,
            dim: self.dim(),
            w: self.w.clone(),
            b: self.b,
            lambda: self.lambda,
            mean: self.standardizer.mean.clone(),
            scale: self.standardizer.scale.clone(),
        };
        let json = serde_json::to_string_pretty(&file)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: SvmFile = serde_json::from_str(&text)?;
        if f.format != SVM_FORMAT || f.version != SVM_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{} is not an {SVM_FORMAT} v{SVM_FORMAT_VERSION} file",
                path.display()
            )));
        }
        if f.w.len() != f.dim || f.mean.len() != f.dim || f.scale.len() != f.dim {
            return Err(Error::Config(format!(
                "{}: vector lengths disagree with dim {}",
                path.display(),
                f.dim
            )));
        }
        if !(f.lambda > 0.0) {
            return Err(Error::Config(format!("{}: lambda must be positive", path.display())));
        }
        Ok(SvmModel {
            w: f.w,
            b: f.b,
            lambda: f.lambda,
            standardizer: Standardizer {
                mean: f.mean,
                scale: f.scale,
            },
        })
    }
}

/// On-disk layout of an SVM model.
#[derive(Serialize, Deserialize)]
struct SvmFile {
    format: String,
    version: u32,
    dim: usize,
    w: Vec<f64>,
    b: f64,
    lambda: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

/// Exact affine scores, one per matrix row.
pub fn decision_values(model: &SvmModel, fmat: &FeatureMatrix) -> Result<Vec<f64>> {
    if fmat.cols != model.dim() {
        return Err(Error::shape(format!(
            "feature matrix has {} columns, model expects {}",
            fmat.cols,
            model.dim()
        )));
    }
    Ok(fmat
        .data
        .chunks(fmat.cols.max(1))
        .take(fmat.rows)
        .map(|r| model.score(r))
        .collect())
}

/// Sign of the decision value; a score of exactly 0 maps to -1.
pub fn predict_labels(model: &SvmModel, fmat: &FeatureMatrix) -> Result<Vec<i8>> {
    Ok(decision_values(model, fmat)?
        .into_iter()
        .map(|s| if s > 0.0 { 1 } else { -1 })
        .collect())
}
