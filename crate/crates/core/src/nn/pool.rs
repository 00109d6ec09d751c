use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Flat input index of the maximum of every pooling window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolIndices {
    pub input_shape: [usize; 4],
    pub argmax: Vec<usize>,
}

/// 2x2 max pooling with stride 2. Ties go to the first element in row-major
/// window order.
pub fn maxpool2d(x: &Tensor) -> Result<(Tensor, PoolIndices)> {
    let [n, c, h, w] = x.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(format!(
            "max pooling needs even spatial dims, got {h}x{w}"
        )));
    }
    let (ho, wo) = (h / 2, w / 2);
    let data = x.data();
    let mut out = Vec::with_capacity(n * c * ho * wo);
    let mut argmax = Vec::with_capacity(n * c * ho * wo);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut best = base + 2 * oy * w + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let i = base + (2 * oy + dy) * w + 2 * ox + dx;
                    if data[i] > data[best] {
                        best = i;
                    }
                }
                out.push(data[best]);
                argmax.push(best);
            }
        }
    }
    Ok((
        Tensor::new(vec![n, c, ho, wo], out)?,
        PoolIndices {
            input_shape: [n, c, h, w],
            argmax,
        },
    ))
}

/// Routes each upstream gradient to the recorded argmax position.
pub fn maxpool2d_backward(grad_out: &Tensor, idx: &PoolIndices) -> Result<Tensor> {
    if grad_out.len() != idx.argmax.len() {
        return Err(Error::shape(format!(
            "{} upstream values for {} pooling windows",
            grad_out.len(),
            idx.argmax.len()
        )));
    }
    let mut grad = vec![0.0; idx.input_shape.iter().product()];
    for (&g, &i) in grad_out.data().iter().zip(&idx.argmax) {
        grad[i] += g;
    }
    Tensor::new(idx.input_shape.to_vec(), grad)
}
