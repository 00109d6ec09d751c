//! A minimal f64 tensor and the layer primitives of the backbone, each with
//! an explicit backward function. Models chain these by hand; there is no
//! autograd tape.

mod activation;
mod adam;
mod batchnorm;
mod conv;
mod gemm;
mod loss;
mod pool;
mod tensor;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward};
pub use adam::{adam_step, AdamConfig, AdamState};
pub(crate) use batchnorm::batchnorm_apply;
pub use batchnorm::{batchnorm_backward, batchnorm_forward, BatchNormCache, BatchNormGrads, BatchNormParams, Mode};
pub use conv::{
    conv2d_backward, conv2d_forward, transposed_conv2d_backward, transposed_conv2d_forward, ConvGrads, ConvParams,
};
pub use loss::mse_loss;
pub use pool::{maxpool2d, maxpool2d_backward, PoolIndices};
pub use tensor::Tensor;
