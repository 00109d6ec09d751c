use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Whether batch normalization uses batch statistics or running estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Per-channel affine parameters and running statistics.
///
/// Inference before any training step is allowed: running statistics start
/// at mean 0 / variance 1 and `eps` guards the division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub eps: f64,
    pub momentum: f64,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        BatchNormParams {
            gamma: Tensor::filled(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::filled(&[channels], 1.0),
            eps: 1e-5,
            momentum: 0.1,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.channels();
        if [&self.beta, &self.running_mean, &self.running_var]
            .iter()
            .any(|t| t.len() != c)
        {
            return Err(Error::shape("batch-norm tensors disagree on channel count"));
        }
        if self.running_var.data().iter().any(|&v| v < 0.0) {
            return Err(Error::arg("negative running variance"));
        }
        if !(self.eps > 0.0) || !(self.momentum > 0.0 && self.momentum < 1.0) {
            return Err(Error::arg("eps must be positive and momentum in (0, 1)"));
        }
        Ok(())
    }
}

/// What the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    x_hat: Vec<f64>,
    inv_std: Vec<f64>,
    shape: [usize; 4],
    mode: Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormGrads {
    pub grad_x: Tensor,
    pub grad_gamma: Tensor,
    pub grad_beta: Tensor,
}

/// `y = gamma * x_hat + beta` per channel over `[n, c, h, w]`.
///
/// In train mode `x_hat` uses the biased batch variance and the running
/// statistics are updated with `momentum` (running variance uses the unbiased
/// estimate). In infer mode the running statistics are used unchanged.
pub fn batchnorm_forward(x: &Tensor, p: &mut BatchNormParams, mode: Mode) -> Result<(Tensor, BatchNormCache)> {
    let (y, cache, stats) = batchnorm_apply(x, p, mode)?;
    if let Some((mean, var, count)) = stats {
        let unbias = if count > 1 {
            count as f64 / (count - 1) as f64
        } else {
            1.0
        };
        let mom = p.momentum;
        for (ch, (m, v)) in mean.iter().zip(&var).enumerate() {
            let rm = &mut p.running_mean.data_mut()[ch];
            *rm = (1.0 - mom) * *rm + mom * m;
            let rv = &mut p.running_var.data_mut()[ch];
            *rv = (1.0 - mom) * *rv + mom * v * unbias;
        }
    }
    Ok((y, cache))
}

type BatchStats = (Vec<f64>, Vec<f64>, usize);

/// Forward pass without touching the running statistics; in train mode the
/// batch mean, biased variance and element count are returned alongside.
pub(crate) fn batchnorm_apply(
    x: &Tensor,
    p: &BatchNormParams,
    mode: Mode,
) -> Result<(Tensor, BatchNormCache, Option<BatchStats>)> {
    let [n, c, h, w] = x.dims4()?;
    if c != p.channels() {
        return Err(Error::shape(format!(
            "input has {c} channels, batch norm has {}",
            p.channels()
        )));
    }
    let plane = h * w;
    let count = n * plane;
    if count == 0 {
        return Err(Error::shape("empty batch"));
    }
    let data = x.data();
    let (mean, var) = match mode {
        Mode::Train => {
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ch in 0..c {
                let mut s = 0.0;
                for i in 0..n {
                    let start = (i * c + ch) * plane;
                    s += data[start..start + plane].iter().sum::<f64>();
                }
                let m = s / count as f64;
                let mut sq = 0.0;
                for i in 0..n {
                    let start = (i * c + ch) * plane;
                    sq += data[start..start + plane]
                        .iter()
                        .map(|v| (v - m) * (v - m))
                        .sum::<f64>();
                }
                mean[ch] = m;
                var[ch] = sq / count as f64;
            }
            (mean, var)
        }
        Mode::Infer => (p.running_mean.data().to_vec(), p.running_var.data().to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + p.eps).sqrt()).collect();
    let mut x_hat = vec![0.0; data.len()];
    let mut y = vec![0.0; data.len()];
    for i in 0..n {
        for ch in 0..c {
            let start = (i * c + ch) * plane;
            let (g, b, m, s) = (p.gamma.data()[ch], p.beta.data()[ch], mean[ch], inv_std[ch]);
            for j in start..start + plane {
                let xh = (data[j] - m) * s;
                x_hat[j] = xh;
                y[j] = g * xh + b;
            }
        }
    }
    let stats = (mode == Mode::Train).then_some((mean, var, count));
    Ok((
        Tensor::new(x.shape().to_vec(), y)?,
        BatchNormCache {
            x_hat,
            inv_std,
            shape: [n, c, h, w],
            mode,
        },
        stats,
    ))
}

/// Gradients of [`batchnorm_forward`] given its cache and the forward `gamma`.
pub fn batchnorm_backward(grad_out: &Tensor, cache: &BatchNormCache, gamma: &Tensor) -> Result<BatchNormGrads> {
    let [n, c, h, w] = cache.shape;
    if grad_out.shape() != cache.shape {
        return Err(Error::shape(format!(
            "upstream gradient {:?} does not match cached shape {:?}",
            grad_out.shape(),
            cache.shape
        )));
    }
    let plane = h * w;
    let count = (n * plane) as f64;
    let g = grad_out.data();
    let mut grad_gamma = vec![0.0; c];
    let mut grad_beta = vec![0.0; c];
    for i in 0..n {
        for ch in 0..c {
            let start = (i * c + ch) * plane;
            for j in start..start + plane {
                grad_beta[ch] += g[j];
                grad_gamma[ch] += g[j] * cache.x_hat[j];
            }
        }
    }
    let mut grad_x = vec![0.0; g.len()];
    for i in 0..n {
        for ch in 0..c {
            let start = (i * c + ch) * plane;
            let scale = gamma.data()[ch] * cache.inv_std[ch];
            match cache.mode {
                Mode::Train => {
                    let (sb, sg) = (grad_beta[ch] / count, grad_gamma[ch] / count);
                    for j in start..start + plane {
                        grad_x[j] = scale * (g[j] - sb - cache.x_hat[j] * sg);
                    }
                }
                Mode::Infer => {
                    for j in start..start + plane {
                        grad_x[j] = scale * g[j];
                    }
                }
            }
        }
    }
    Ok(BatchNormGrads {
        grad_x: Tensor::new(cache.shape.to_vec(), grad_x)?,
        grad_gamma: Tensor::new(vec![c], grad_gamma)?,
        grad_beta: Tensor::new(vec![c], grad_beta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch() -> Tensor {
        Tensor::new(
            vec![2, 2, 2, 3],
            (0..24).map(|i| ((i * 29 % 13) as f64) * 0.3 - 1.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn train_mode_standardizes() {
        let mut p = BatchNormParams::new(2);
        let (y, _) = batchnorm_forward(&batch(), &mut p, Mode::Train).unwrap();
        for ch in 0..2 {
            let vals: Vec<f64> = (0..2)
                .flat_map(|i| y.data()[(i * 2 + ch) * 6..(i * 2 + ch) * 6 + 6].to_vec())
                .collect();
            let m = vals.iter().sum::<f64>() / 12.0;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 12.0;
            assert!(m.abs() < 1e-12);
            assert!((v - 1.0).abs() < 1e-4);
        }
        assert!(p.running_mean.data().iter().any(|&m| m != 0.0));
    }

    #[test]
    fn infer_inverse_transform_is_identity() {
        let mut p = BatchNormParams::new(2);
        p.running_mean = Tensor::new(vec![2], vec![0.3, -1.2]).unwrap();
        p.running_var = Tensor::new(vec![2], vec![2.5, 0.04]).unwrap();
        p.gamma = Tensor::new(
            vec![2],
            p.running_var.data().iter().map(|v| (v + p.eps).sqrt()).collect(),
        )
        .unwrap();
        p.beta = p.running_mean.clone();
        let x = batch();
        let (y, _) = batchnorm_forward(&x, &mut p, Mode::Infer).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn infer_before_training_is_permitted() {
        let mut p = BatchNormParams::new(2);
        p.running_var = Tensor::zeros(&[2]);
        let (y, _) = batchnorm_forward(&batch(), &mut p, Mode::Infer).unwrap();
        assert!(y.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_upstream_and_beta_grad() {
        let mut p = BatchNormParams::new(2);
        let (_, cache) = batchnorm_forward(&batch(), &mut p, Mode::Train).unwrap();
        let g = batchnorm_backward(&Tensor::zeros(&[2, 2, 2, 3]), &cache, &p.gamma).unwrap();
        assert!(g.grad_x.data().iter().all(|&v| v == 0.0));
        let up = batch();
        let g = batchnorm_backward(&up, &cache, &p.gamma).unwrap();
        for ch in 0..2 {
            let s: f64 = (0..2)
                .map(|i| up.data()[(i * 2 + ch) * 6..(i * 2 + ch) * 6 + 6].iter().sum::<f64>())
                .sum();
            assert!((g.grad_beta.data()[ch] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn validation() {
        let mut p = BatchNormParams::new(3);
        assert!(p.validate().is_ok());
        p.running_var = Tensor::filled(&[3], -1.0);
        assert!(p.validate().is_err());
        let mut q = BatchNormParams::new(3);
        assert!(batchnorm_forward(&batch(), &mut q, Mode::Train).is_err());
    }
}
