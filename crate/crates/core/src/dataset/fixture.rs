//! Synthetic datasets of flat-shaded rectangles and ellipses on a noisy
//! background. The boundary of every shape is known exactly from its label
//! map.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::save_luma8_png;

use super::Split;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub size: usize,
    pub annotators: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            n_train: 30,
            n_val: 0,
            n_test: 10,
            size: 256,
            annotators: 1,
            noise_sigma: 12.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Rect { y0: f64, x0: f64, y1: f64, x1: f64 },
    Ellipse { cy: f64, cx: f64, ry: f64, rx: f64 },
}

impl Shape {
    fn contains(&self, y: f64, x: f64) -> bool {
        match *self {
            Shape::Rect { y0, x0, y1, x1 } => y >= y0 && y < y1 && x >= x0 && x < x1,
            Shape::Ellipse { cy, cx, ry, rx } => {
                let (u, v) = ((y - cy) / ry, (x - cx) / rx);
                u * u + v * v <= 1.0
            }
        }
    }
}

const MIN_CONTRAST: f64 = 40.0;

fn pick_level(rng: &mut ChaCha8Rng, taken: &[f64]) -> f64 {
    for _ in 0..100 {
        let v = rng.random_range(20..=235) as f64;
        if taken.iter().all(|t| (t - v).abs() >= MIN_CONTRAST) {
            return v;
        }
    }
    // Fall back to the level farthest from every taken level.
    (20..=235)
        .map(f64::from)
        .max_by(|a, b| {
            let da = taken.iter().map(|t| (t - a).abs()).fold(f64::INFINITY, f64::min);
            let db = taken.iter().map(|t| (t - b).abs()).fold(f64::INFINITY, f64::min);
            da.total_cmp(&db)
        })
        .unwrap_or(128.0)
}

/// Label of the topmost shape covering each pixel, 0 for background.
/// Shape `skip`, if any, is left out.
fn label_map(shapes: &[Shape], size: usize, skip: Option<usize>) -> Vec<u8> {
    let mut labels = vec![0u8; size * size];
    for y in 0..size {
        for x in 0..size {
            let (cy, cx) = (y as f64 + 0.5, x as f64 + 0.5);
            for (i, s) in shapes.iter().enumerate().rev() {
                if Some(i) != skip && s.contains(cy, cx) {
                    labels[y * size + x] = (i + 1) as u8;
                    break;
                }
            }
        }
    }
    labels
}

/// Pixels whose label differs from the right or lower neighbour.
fn boundary(labels: &[u8], size: usize) -> Vec<u8> {
    let mut out = vec![0u8; size * size];
    for y in 0..size {
        for x in 0..size {
            let l = labels[y * size + x];
            let right = x + 1 < size && labels[y * size + x + 1] != l;
            let down = y + 1 < size && labels[(y + 1) * size + x] != l;
            if right || down {
                out[y * size + x] = 255;
            }
        }
    }
    out
}

/// Write a bsds-like dataset under `root`. Annotator 0 marks every shape
/// boundary; annotator `k > 0` omits one shape.
pub fn generate_fixture(root: impl AsRef<Path>, cfg: &FixtureConfig) -> Result<()> {
    let root = root.as_ref();
    if cfg.size < 16 || cfg.annotators == 0 || cfg.n_train + cfg.n_val + cfg.n_test == 0 {
        return Err(Error::arg(
            "fixture needs size >= 16, at least one annotator and one image",
        ));
    }
    if !(cfg.noise_sigma >= 0.0) {
        return Err(Error::arg("noise sigma must be non-negative"));
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.size;
    let sz = n as f64;
    let mut index = 0;
    for (split, count) in [
        (Split::Train, cfg.n_train),
        (Split::Val, cfg.n_val),
        (Split::Test, cfg.n_test),
    ] {
        if count == 0 {
            continue;
        }
        let img_dir = root.join("images").join(split.name());
        let gt_dir = root.join("groundtruth").join(split.name());
        for d in [&img_dir, &gt_dir] {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        for _ in 0..count {
            let n_shapes = rng.random_range(3..=6);
            let mut levels = vec![pick_level(&mut rng, &[])];
            let mut shapes = Vec::with_capacity(n_shapes);
            for _ in 0..n_shapes {
                let shape = if rng.random_bool(0.5) {
                    let (h, w) = (rng.random_range(0.12..0.45) * sz, rng.random_range(0.12..0.45) * sz);
                    let (y0, x0) = (rng.random_range(0.0..sz - h), rng.random_range(0.0..sz - w));
                    Shape::Rect {
                        y0: y0.round(),
                        x0: x0.round(),
                        y1: (y0 + h).round(),
                        x1: (x0 + w).round(),
                    }
                } else {
                    let (ry, rx) = (rng.random_range(0.06..0.22) * sz, rng.random_range(0.06..0.22) * sz);
                    Shape::Ellipse {
                        cy: rng.random_range(ry..sz - ry),
                        cx: rng.random_range(rx..sz - rx),
                        ry,
                        rx,
                    }
                };
                shapes.push(shape);
                let level = pick_level(&mut rng, &levels);
                levels.push(level);
            }
            let labels = label_map(&shapes, n, None);
            let pixels: Vec<u8> = labels
                .iter()
                .map(|&l| (levels[l as usize] + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
                .collect();
            let id = format!("img{index:04}");
            index += 1;
            save_luma8_png(img_dir.join(format!("{id}.png")), n, n, &pixels)?;
            for k in 0..cfg.annotators {
                let gt = if k == 0 {
                    boundary(&labels, n)
                } else {
                    boundary(&label_map(&shapes, n, Some((k - 1) % shapes.len())), n)
                };
                save_luma8_png(gt_dir.join(format!("{id}_gt{k}.png")), n, n, &gt)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_of_a_square() {
        let n = 6;
        let mut labels = vec![0u8; 36];
        for y in 2..4 {
            for x in 2..4 {
                labels[y * n + x] = 1;
            }
        }
        let b = boundary(&labels, n);
        let marked: Vec<usize> = (0..36).filter(|&i| b[i] > 0).collect();
        assert_eq!(marked, vec![8, 9, 13, 15, 19, 20, 21]);
    }

    #[test]
    fn deterministic_output() {
        let cfg = FixtureConfig {
            n_train: 1,
            n_test: 1,
            size: 32,
            annotators: 2,
            ..FixtureConfig::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_fixture(a.path(), &cfg).unwrap();
        generate_fixture(b.path(), &cfg).unwrap();
        for rel in ["images/train/img0000.png", "groundtruth/test/img0001_gt1.png"] {
            assert_eq!(
                std::fs::read(a.path().join(rel)).unwrap(),
                std::fs::read(b.path().join(rel)).unwrap()
            );
        }
    }
}
