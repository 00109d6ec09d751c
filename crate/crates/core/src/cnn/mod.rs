//! The encoder/decoder backbone: construction, supervised training,
//! feature extraction and checkpoints.

mod checkpoint;
mod features;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use features::{
    extract_features, flatten_features, forward_edge, image_tensor, unflatten_features, FeatureMap, FeatureMatrix,
};
pub use model::{build_model, CnnModel, Layer, Trace, FEATURE_CHANNELS};
pub use train::{train_cnn, TrainConfig, TrainLog, TrainRecord, TrainSample};
