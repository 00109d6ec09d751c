use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    batchnorm_apply, batchnorm_backward, conv2d_backward, conv2d_forward, maxpool2d, maxpool2d_backward, relu,
    relu_backward, sigmoid, sigmoid_backward, transposed_conv2d_backward, transposed_conv2d_forward, BatchNormCache,
    BatchNormParams, ConvParams, Mode, PoolIndices, Tensor,
};

/// Channel width of the feature tap (`conv_6` after batch norm and ReLU).
pub const FEATURE_CHANNELS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layer {
    Conv { name: String, params: ConvParams },
    TransposedConv { name: String, params: ConvParams },
    BatchNorm { name: String, params: BatchNormParams },
    Relu,
    MaxPool,
    Sigmoid,
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Conv { name, .. } | Layer::TransposedConv { name, .. } | Layer::BatchNorm { name, .. } => name,
            Layer::Relu => "relu",
            Layer::MaxPool => "maxpool",
            Layer::Sigmoid => "sigmoid",
        }
    }

    /// Learnable tensors in a fixed order (weights, bias / gamma, beta).
    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv { params, .. } | Layer::TransposedConv { params, .. } => {
                vec![&mut params.weights, &mut params.bias]
            }
            Layer::BatchNorm { params, .. } => vec![&mut params.gamma, &mut params.beta],
            _ => Vec::new(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv { params, .. } | Layer::TransposedConv { params, .. } => {
                vec![&params.weights, &params.bias]
            }
            Layer::BatchNorm { params, .. } => vec![&params.gamma, &params.beta],
            _ => Vec::new(),
        }
    }
}

/// Encoder/decoder backbone with a full-resolution feature tap and a 1x1
/// logistic edge head.
///
/// ```text
/// conv_0  1->16  3x3  BN ReLU        256
/// conv_1 16->16  3x3  BN ReLU        256
/// maxpool                            128
/// conv_2 16->32  3x3  BN ReLU        128
/// maxpool                             64
/// conv_3 32->64  3x3  BN ReLU         64
/// tconv_4 64->32 4x4/2 BN ReLU       128
/// tconv_5 32->16 4x4/2 BN ReLU       256
/// conv_6 16->16  3x3  BN ReLU        256   <- feature tap
/// head   16->1   1x1  sigmoid        256
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub layers: Vec<Layer>,
    /// Index of the layer whose output is the SVM feature map.
    pub feature_tap: usize,
}

struct ConvSpec {
    name: &'static str,
    cin: usize,
    cout: usize,
    k: usize,
    transposed: bool,
}

const STAGES: [ConvSpec; 7] = [
    ConvSpec {
        name: "conv_0",
        cin: 1,
        cout: 16,
        k: 3,
        transposed: false,
    },
    ConvSpec {
        name: "conv_1",
        cin: 16,
        cout: 16,
        k: 3,
        transposed: false,
    },
    ConvSpec {
        name: "conv_2",
        cin: 16,
        cout: 32,
        k: 3,
        transposed: false,
    },
    ConvSpec {
        name: "conv_3",
        cin: 32,
        cout: 64,
        k: 3,
        transposed: false,
    },
    ConvSpec {
        name: "tconv_4",
        cin: 64,
        cout: 32,
        k: 4,
        transposed: true,
    },
    ConvSpec {
        name: "tconv_5",
        cin: 32,
        cout: 16,
        k: 4,
        transposed: true,
    },
    ConvSpec {
        name: "conv_6",
        cin: 16,
        cout: 16,
        k: 3,
        transposed: false,
    },
];

/// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`, fan-in taken from the
/// second weight axis times the kernel area) and zero bias.
fn kaiming_conv(rng: &mut ChaCha8Rng, shape: [usize; 4], bias_len: usize, stride: usize, padding: usize) -> ConvParams {
    let fan_in = shape[1] * shape[2] * shape[3];
    let bound = (6.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    ConvParams {
        weights: Tensor::new(shape.to_vec(), w).expect("shape"),
        bias: Tensor::zeros(&[bias_len]),
        stride,
        padding,
    }
}

/// Build the backbone with seeded initialization.
pub fn build_model(seed: u64) -> CnnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    let mut feature_tap = 0;
    for (i, s) in STAGES.iter().enumerate() {
        let idx = s.name.rsplit('_').next().unwrap_or("");
        let conv = if s.transposed {
            // Stored in the layout of the convolution it is the adjoint of.
            Layer::TransposedConv {
                name: s.name.to_string(),
                params: kaiming_conv(&mut rng, [s.cin, s.cout, s.k, s.k], s.cout, 2, 1),
            }
        } else {
            Layer::Conv {
                name: s.name.to_string(),
                params: kaiming_conv(&mut rng, [s.cout, s.cin, s.k, s.k], s.cout, 1, 1),
            }
        };
        layers.push(conv);
        layers.push(Layer::BatchNorm {
            name: format!("bn_{idx}"),
            params: BatchNormParams::new(s.cout),
        });
        layers.push(Layer::Relu);
        if i == 1 || i == 2 {
            layers.push(Layer::MaxPool);
        }
        if s.name == "conv_6" {
            feature_tap = layers.len() - 1;
        }
    }
    layers.push(Layer::Conv {
        name: "head".to_string(),
        params: kaiming_conv(&mut rng, [1, FEATURE_CHANNELS, 1, 1], 1, 1, 0),
    });
    layers.push(Layer::Sigmoid);
    CnnModel { layers, feature_tap }
}

enum Cache {
    None,
    BatchNorm(BatchNormCache),
    Pool(PoolIndices),
}

/// Activations recorded by [`CnnModel::forward_train`] for the backward pass.
pub struct Trace {
    inputs: Vec<Tensor>,
    caches: Vec<Cache>,
    output: Tensor,
}

impl Trace {
    pub fn output(&self) -> &Tensor {
        &self.output
    }
}

impl CnnModel {
    pub fn validate(&self) -> Result<()> {
        if self.feature_tap >= self.layers.len() {
            return Err(Error::Config("feature tap beyond the layer stack".into()));
        }
        for layer in &self.layers {
            match layer {
                Layer::Conv { params, .. } | Layer::TransposedConv { params, .. } => {
                    ConvParams::new(
                        params.weights.clone(),
                        params.bias.clone(),
                        params.stride,
                        params.padding,
                    )?;
                }
                Layer::BatchNorm { params, .. } => params.validate()?,
                _ => {}
            }
        }
        Ok(())
    }

    /// Channel count at the feature tap.
    pub fn feature_channels(&self) -> usize {
        self.layers[..=self.feature_tap]
            .iter()
            .rev()
            .find_map(|l| match l {
                Layer::Conv { params, .. } => Some(params.weights.shape()[0]),
                Layer::TransposedConv { params, .. } => Some(params.weights.shape()[1]),
                _ => None,
            })
            .unwrap_or(1)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().flat_map(|l| l.params()).map(Tensor::len).sum()
    }

    /// Inference-mode forward through layers `0..=last`.
    pub fn forward_until(&self, x: &Tensor, last: usize) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &self.layers[..=last] {
            cur = match layer {
                Layer::Conv { params, .. } => conv2d_forward(&cur, params)?,
                Layer::TransposedConv { params, .. } => transposed_conv2d_forward(&cur, params)?,
                Layer::BatchNorm { params, .. } => batchnorm_apply(&cur, params, Mode::Infer)?.0,
                Layer::Relu => relu(&cur),
                Layer::MaxPool => maxpool2d(&cur)?.0,
                Layer::Sigmoid => sigmoid(&cur),
            };
        }
        Ok(cur)
    }

    /// Inference-mode forward through the whole stack.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.forward_until(x, self.layers.len() - 1)
    }

    /// Forward pass recording everything the backward pass needs. In
    /// [`Mode::Train`] batch norm uses batch statistics and updates its
    /// running estimates.
    pub fn forward_train(&mut self, x: &Tensor, mode: Mode) -> Result<Trace> {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &mut self.layers {
            let (next, cache) = match layer {
                Layer::Conv { params, .. } => (conv2d_forward(&cur, params)?, Cache::None),
                Layer::TransposedConv { params, .. } => (transposed_conv2d_forward(&cur, params)?, Cache::None),
                Layer::BatchNorm { params, .. } => {
                    let (y, c) = crate::nn::batchnorm_forward(&cur, params, mode)?;
                    (y, Cache::BatchNorm(c))
                }
                Layer::Relu => (relu(&cur), Cache::None),
                Layer::MaxPool => {
                    let (y, idx) = maxpool2d(&cur)?;
                    (y, Cache::Pool(idx))
                }
                Layer::Sigmoid => (sigmoid(&cur), Cache::None),
            };
            inputs.push(std::mem::replace(&mut cur, next));
            caches.push(cache);
        }
        Ok(Trace {
            inputs,
            caches,
            output: cur,
        })
    }

    /// Backpropagate `grad_out` (gradient of the loss wrt the trace output)
    /// and store each learnable tensor's gradient in its `grad` slot.
    /// Returns the gradient wrt the network input.
    pub fn backward(&mut self, trace: &Trace, grad_out: &Tensor) -> Result<Tensor> {
        let mut grad = grad_out.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let input = &trace.inputs[i];
            grad = match (layer, &trace.caches[i]) {
                (Layer::Conv { params, .. }, _) => {
                    let g = conv2d_backward(&grad, input, params)?;
                    params.weights.set_grad(g.grad_w.into_data())?;
                    params.bias.set_grad(g.grad_b.into_data())?;
                    g.grad_x
                }
                (Layer::TransposedConv { params, .. }, _) => {
                    let g = transposed_conv2d_backward(&grad, input, params)?;
                    params.weights.set_grad(g.grad_w.into_data())?;
                    params.bias.set_grad(g.grad_b.into_data())?;
                    g.grad_x
                }
                (Layer::BatchNorm { params, .. }, Cache::BatchNorm(cache)) => {
                    let g = batchnorm_backward(&grad, cache, &params.gamma)?;
                    params.gamma.set_grad(g.grad_gamma.into_data())?;
                    params.beta.set_grad(g.grad_beta.into_data())?;
                    g.grad_x
                }
                (Layer::Relu, _) => relu_backward(&grad, input)?,
                (Layer::MaxPool, Cache::Pool(idx)) => maxpool2d_backward(&grad, idx)?,
                (Layer::Sigmoid, _) => {
                    let out = if i + 1 < trace.inputs.len() {
                        &trace.inputs[i + 1]
                    } else {
                        &trace.output
                    };
                    sigmoid_backward(&grad, out)?
                }
                _ => return Err(Error::Training("trace does not match the layer stack".into())),
            };
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_builds_are_identical() {
        assert_eq!(build_model(7), build_model(7));
        assert_ne!(build_model(7), build_model(8));
    }

    #[test]
    fn layer_names_and_tap() {
        let m = build_model(1);
        assert_eq!(m.feature_channels(), FEATURE_CHANNELS);
        let conv6 = m.layers.iter().position(|l| l.name() == "conv_6").unwrap();
        assert_eq!(m.feature_tap, conv6 + 2);
        assert!(matches!(m.layers[m.feature_tap], Layer::Relu));
        assert!(m.validate().is_ok());
    }

    #[test]
    fn shape_trace_small_input() {
        let m = build_model(3);
        let x = Tensor::filled(&[2, 1, 16, 16], 0.5);
        let tap = m.forward_until(&x, m.feature_tap).unwrap();
        assert_eq!(tap.shape(), &[2, 16, 16, 16]);
        let y = m.forward(&x).unwrap();
        assert_eq!(y.shape(), &[2, 1, 16, 16]);
        assert!(y.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
