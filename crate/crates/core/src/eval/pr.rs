//! Precision/recall sweeps and the ODS, OIS and AP summaries.

use serde::{Deserialize, Serialize};

use crate::edgemap::{BinaryMap, EdgeMap};
use crate::error::{Error, Result};

use super::matching::match_pairs;

/// Counts and rates at one threshold.
///
/// `tp_pred` counts predicted pixels matched to at least one annotator;
/// `tp_gt` and `fn_` are summed over annotators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PRPoint {
    pub threshold: f64,
    pub tp_pred: usize,
    pub fp: usize,
    pub tp_gt: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean; 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl PRPoint {
    pub fn from_counts(threshold: f64, tp_pred: usize, fp: usize, tp_gt: usize, fn_: usize) -> Self {
        PRPoint {
            threshold,
            tp_pred,
            fp,
            tp_gt,
            fn_,
            precision: ratio(tp_pred, tp_pred + fp),
            recall: ratio(tp_gt, tp_gt + fn_),
        }
    }

    pub fn f(&self) -> f64 {
        f_measure(self.precision, self.recall)
    }

    /// Sum of counts over points, at `threshold`.
    pub fn pooled<'a>(threshold: f64, points: impl IntoIterator<Item = &'a PRPoint>) -> Self {
        let (mut a, mut b, mut c, mut d) = (0, 0, 0, 0);
        for p in points {
            a += p.tp_pred;
            b += p.fp;
            c += p.tp_gt;
            d += p.fn_;
        }
        PRPoint::from_counts(threshold, a, b, c, d)
    }
}

/// `n` evenly spaced thresholds from `lo` to `hi` inclusive.
pub fn threshold_grid(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n == 0 || !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::arg(format!("bad threshold grid: {n} values over [{lo}, {hi}]")));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

/// The default 33-point grid over `[0.01, 0.99]`.
pub fn default_grid() -> Vec<f64> {
    threshold_grid(33, 0.01, 0.99).expect("static grid")
}

/// Match a binarized prediction against every annotator.
pub fn pr_of_binary(pred: &BinaryMap, gts: &[BinaryMap], threshold: f64, max_dist: f64) -> Result<PRPoint> {
    if gts.is_empty() {
        return Err(Error::arg("at least one ground-truth map is required"));
    }
    let mut hit = vec![false; pred.bits.len()];
    let (mut tp_gt, mut fn_) = (0, 0);
    for gt in gts {
        let pairs = match_pairs(pred, gt, max_dist)?;
        pairs.iter().for_each(|&(p, _)| hit[p] = true);
        tp_gt += pairs.len();
        fn_ += gt.count() - pairs.len();
    }
    let tp_pred = hit.iter().filter(|&&h| h).count();
    Ok(PRPoint::from_counts(
        threshold,
        tp_pred,
        pred.count() - tp_pred,
        tp_gt,
        fn_,
    ))
}

/// Binarize `pred` at confidence `>= t` and score it.
pub fn pr_at_threshold(pred: &EdgeMap, gts: &[BinaryMap], t: f64, max_dist: f64) -> Result<PRPoint> {
    pr_of_binary(&pred.binarize(t), gts, t, max_dist)
}

/// One PR point per grid threshold.
pub fn pr_curve(pred: &EdgeMap, gts: &[BinaryMap], grid: &[f64], max_dist: f64) -> Result<Vec<PRPoint>> {
    grid.iter().map(|&t| pr_at_threshold(pred, gts, t, max_dist)).collect()
}

fn check_grid(per_image: &[Vec<PRPoint>]) -> Result<&[PRPoint]> {
    let first = per_image.first().ok_or_else(|| Error::arg("no images to summarize"))?;
    if first.is_empty() {
        return Err(Error::arg("empty threshold grid"));
    }
    for curve in per_image {
        if curve.len() != first.len() || curve.iter().zip(first).any(|(a, b)| a.threshold != b.threshold) {
            return Err(Error::arg("images were evaluated on different threshold grids"));
        }
    }
    Ok(first)
}

/// Counts pooled over images at every grid threshold.
pub fn pooled_curve(per_image: &[Vec<PRPoint>]) -> Result<Vec<PRPoint>> {
    let first = check_grid(per_image)?;
    Ok((0..first.len())
        .map(|k| PRPoint::pooled(first[k].threshold, per_image.iter().map(|c| &c[k])))
        .collect())
}

fn best_index(curve: &[PRPoint]) -> usize {
    let mut best = 0;
    for (i, p) in curve.iter().enumerate() {
        if p.f() > curve[best].f() {
            best = i;
        }
    }
    best
}

/// Best pooled F over the shared grid: `(threshold, F)`. Ties go to the
/// lowest threshold.
pub fn compute_ods(per_image: &[Vec<PRPoint>]) -> Result<(f64, f64)> {
    let pooled = pooled_curve(per_image)?;
    let p = pooled[best_index(&pooled)];
    Ok((p.threshold, p.f()))
}

/// Pooled F over each image's own best threshold.
pub fn compute_ois(per_image: &[Vec<PRPoint>]) -> Result<f64> {
    check_grid(per_image)?;
    let best: Vec<PRPoint> = per_image.iter().map(|c| c[best_index(c)]).collect();
    Ok(PRPoint::pooled(0.0, &best).f())
}

/// Per-image best F over the grid.
pub fn best_f_per_image(per_image: &[Vec<PRPoint>]) -> Vec<f64> {
    per_image.iter().map(|c| c[best_index(c)].f()).collect()
}

/// Trapezoid area under `(recall, precision)` points, sorted by recall,
/// spanning only the observed recall range.
pub fn compute_ap(curve: &[(f64, f64)]) -> f64 {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}
