use rayon::prelude::*;

use crate::edgemap::{BinaryMap, EdgeMap};
use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::pr::{best_f_per_image, compute_ap, compute_ods, compute_ois, pooled_curve, pr_curve};
use super::report::EvalSummary;

/// One evaluation image with its per-annotator ground truth.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub id: String,
    pub image: GrayImage,
    pub gts: Vec<BinaryMap>,
}

/// Run `detector` on every item, sweep `grid`, and summarize. Images are
/// processed in parallel; results are reduced in item order.
pub fn evaluate_method<D>(
    name: &str,
    detector: D,
    items: &[EvalItem],
    grid: &[f64],
    max_dist: f64,
) -> Result<EvalSummary>
where
    D: Fn(&GrayImage) -> Result<EdgeMap> + Sync,
{
    if items.is_empty() {
        return Err(Error::arg("no images to evaluate"));
    }
    let curves = items
        .par_iter()
        .map(|item| {
            let pred = detector(&item.image)?;
            if item
                .gts
                .iter()
                .any(|g| (g.height, g.width) != (pred.height(), pred.width()))
            {
                return Err(Error::shape(format!(
                    "{}: ground truth size differs from the {}x{} prediction",
                    item.id,
                    pred.height(),
                    pred.width()
                )));
            }
            pr_curve(&pred, &item.gts, grid, max_dist)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(name, items.iter().map(|i| i.id.clone()).collect(), &curves)
}

/// Summary of precomputed per-image curves on a shared grid.
pub fn summarize(name: &str, image_ids: Vec<String>, curves: &[Vec<super::PRPoint>]) -> Result<EvalSummary> {
    let (ods_threshold, ods) = compute_ods(curves)?;
    let ois = compute_ois(curves)?;
    let curve = pooled_curve(curves)?;
    let ap = compute_ap(&curve.iter().map(|p| (p.recall, p.precision)).collect::<Vec<_>>());
    Ok(EvalSummary {
        method: name.to_string(),
        ods,
        ods_threshold,
        ois,
        ap,
        image_ids,
        per_image_best_f: best_f_per_image(curves),
        curve,
    })
}
