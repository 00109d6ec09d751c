use super::tensor::Tensor;
use crate::error::{Error, Result};

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Passes the upstream gradient where `x > 0`, zero elsewhere.
pub fn relu_backward(grad_out: &Tensor, x: &Tensor) -> Result<Tensor> {
    same_shape(grad_out, x)?;
    let data = grad_out
        .data()
        .iter()
        .zip(x.data())
        .map(|(&g, &v)| if v > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: &Tensor) -> Tensor {
    let data = x
        .data()
        .iter()
        .map(|&v| {
            if v >= 0.0 {
                1.0 / (1.0 + (-v).exp())
            } else {
                let e = v.exp();
                e / (1.0 + e)
            }
        })
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Backward of [`sigmoid`] given its output `y`.
pub fn sigmoid_backward(grad_out: &Tensor, y: &Tensor) -> Result<Tensor> {
    same_shape(grad_out, y)?;
    let data = grad_out
        .data()
        .iter()
        .zip(y.data())
        .map(|(&g, &s)| g * s * (1.0 - s))
        .collect();
    Tensor::new(y.shape().to_vec(), data)
}

fn same_shape(a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}
