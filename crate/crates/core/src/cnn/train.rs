use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::save_checkpoint;
use super::model::CnnModel;
use crate::error::{Error, Result};
use crate::image::{GrayImage, RangeTag, RealMap};
use crate::nn::{adam_step, mse_loss, AdamConfig, AdamState, Mode, Tensor};

/// A unit-range input image and its real-valued target edge map.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub image: GrayImage,
    pub target: RealMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    /// Write a checkpoint every this many epochs (requires `checkpoint_dir`).
    pub checkpoint_interval: Option<usize>,
    pub checkpoint_dir: Option<PathBuf>,
    /// CSV destination for the per-iteration log.
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 4,
            lr: 1e-3,
            seed: 42,
            checkpoint_interval: None,
            checkpoint_dir: None,
            log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::arg("epochs must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch size must be positive"));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::arg(format!(
                "learning rate {} must be finite and non-negative",
                self.lr
            )));
        }
        if self.checkpoint_interval == Some(0) {
            return Err(Error::arg("checkpoint interval must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub loss: f64,
    pub rmse: f64,
}

/// Per-iteration training loss and RMSE.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn push(&mut self, iteration: usize, loss: f64) {
        self.records.push(TrainRecord {
            iteration,
            loss,
            rmse: loss.sqrt(),
        });
    }

    /// `iteration,loss,rmse` with floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,loss,rmse\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{:?},{:?}", r.iteration, r.loss, r.rmse);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn stack(samples: &[&TrainSample]) -> Result<(Tensor, Tensor)> {
    let (h, w) = (samples[0].image.height(), samples[0].image.width());
    let mut x = Vec::with_capacity(samples.len() * h * w);
    let mut t = Vec::with_capacity(samples.len() * h * w);
    for s in samples {
        x.extend_from_slice(s.image.pixels());
        t.extend_from_slice(&s.target.data);
    }
    Ok((
        Tensor::new(vec![samples.len(), 1, h, w], x)?,
        Tensor::new(vec![samples.len(), 1, h, w], t)?,
    ))
}

fn validate_samples(data: &[TrainSample]) -> Result<()> {
    let first = data.first().ok_or_else(|| Error::arg("training set is empty"))?;
    let (h, w) = (first.image.height(), first.image.width());
    if h % 4 != 0 || w % 4 != 0 || h == 0 || w == 0 {
        return Err(Error::shape(format!(
            "training images must have sides divisible by 4, got {h}x{w}"
        )));
    }
    for s in data {
        if s.image.range() != RangeTag::Unit {
            return Err(Error::arg("training images must be unit-normalized"));
        }
        if (s.image.height(), s.image.width()) != (h, w) || (s.target.height, s.target.width) != (h, w) {
            return Err(Error::shape("training images and targets must share one size"));
        }
        if s.target.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::arg("training targets must lie in [0, 1]"));
        }
    }
    Ok(())
}

/// Minimize pixel-wise MSE between the edge head and the targets with Adam.
///
/// Batch norm runs in train mode throughout. Sample order is reshuffled each
/// epoch from `cfg.seed`; with a fixed seed the run is bit-reproducible.
pub fn train_cnn(mut model: CnnModel, data: &[TrainSample], cfg: &TrainConfig) -> Result<(CnnModel, TrainLog)> {
    cfg.validate()?;
    validate_samples(data)?;
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut states: Vec<AdamState> = model
        .layers
        .iter()
        .flat_map(|l| l.params())
        .map(|t| AdamState::new(t.len()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainLog::default();
    let mut iteration = 0;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&TrainSample> = chunk.iter().map(|&i| &data[i]).collect();
            let (x, target) = stack(&batch)?;
            let trace = model.forward_train(&x, Mode::Train)?;
            let (loss, grad) = mse_loss(trace.output(), &target)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("loss diverged at iteration {}", iteration + 1)));
            }
            model.backward(&trace, &grad)?;
            drop(trace);

            let mut k = 0;
            for layer in &mut model.layers {
                for t in layer.params_mut() {
                    let (values, grad) = t.data_and_grad();
                    let grad = grad.ok_or_else(|| Error::Training("missing parameter gradient".into()))?;
                    adam_step(values, grad, &mut states[k], &adam);
                    k += 1;
                }
            }
            iteration += 1;
            log.push(iteration, loss);
            epoch_loss += loss;
            batches += 1;
        }
        log::info!(
            "epoch {epoch}/{} iterations {iteration} mean loss {:.6}",
            cfg.epochs,
            epoch_loss / batches as f64
        );
        if let (Some(every), Some(dir)) = (cfg.checkpoint_interval, &cfg.checkpoint_dir) {
            if epoch % every == 0 {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                save_checkpoint(&model, dir.join(format!("epoch_{epoch:04}.json")))?;
            }
        }
    }
    for layer in &mut model.layers {
        layer.params_mut().into_iter().for_each(Tensor::clear_grad);
    }
    if let Some(path) = &cfg.log_path {
        log.write_csv(path)?;
    }
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::build_model;

    fn tiny_sample() -> TrainSample {
        let image = GrayImage::from_fn(8, 8, RangeTag::Unit, |_, x| if x < 4 { 0.1 } else { 0.9 }).unwrap();
        let target = RealMap::from_vec(8, 8, (0..64).map(|i| if i % 8 == 3 { 1.0 } else { 0.0 }).collect()).unwrap();
        TrainSample { image, target }
    }

    #[test]
    fn rejects_bad_config_and_data() {
        let m = build_model(0);
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train_cnn(m.clone(), &[tiny_sample()], &cfg),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            train_cnn(m, &[], &TrainConfig::default()),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let m = build_model(0);
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 1,
            lr: 0.0,
            ..TrainConfig::default()
        };
        let (trained, log) = train_cnn(m.clone(), &[tiny_sample()], &cfg).unwrap();
        assert_eq!(log.records.len(), 3);
        for (a, b) in m.layers.iter().zip(&trained.layers) {
            for (p, q) in a.params().iter().zip(b.params()) {
                assert_eq!(p.data(), q.data());
            }
        }
    }

    #[test]
    fn csv_layout() {
        let mut log = TrainLog::default();
        log.push(1, 0.25);
        assert_eq!(log.to_csv(), "iteration,loss,rmse\n1,0.25,0.5\n");
    }
}
