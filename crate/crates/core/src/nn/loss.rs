use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Mean squared error and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape(format!(
            "prediction {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.is_empty() {
        return Err(Error::shape("empty prediction"));
    }
    let count = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / count
        })
        .collect();
    Ok((loss / count, Tensor::new(pred.shape().to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_cases() {
        let a = Tensor::new(vec![2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
        let b = Tensor::new(vec![2, 2], a.data().iter().map(|v| v + 1.0).collect()).unwrap();
        let (l, _) = mse_loss(&b, &a).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!(mse_loss(&a, &Tensor::zeros(&[4])).is_err());
    }
}
