//! Binary quality classifier: an MLP-Mixer over the fused token sequence with
//! hand-written gradients, Adam, class-weighted loss and a stratified split.

pub mod adam;
pub mod checkpoint;
mod config;
pub mod forward;
mod params;
mod train;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint};
pub use config::{MixerConfig, TrainConfig};
pub use forward::{
    backward, forward, forward_cached, forward_tokens, input_to_f64, loss_and_grad, sigmoid,
    ClassWeights, Mode,
};
pub use params::{init_params, tensor_shapes, BlockParams, MixerParams};
pub use train::{
    evaluate, mean_loss, predict, predict_tokens, split_dataset, train, train_on_split, CurvePoint,
    EvalReport, LabeledInput, TrainOutcome,
};

use thiserror::Error;

use crate::io::FormatError;

#[derive(Debug, Error)]
pub enum MixerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("label {0} is not a binary label")]
    Label(u8),
    #[error("empty batch")]
    EmptyBatch,
    #[error("class {class} has {count} training examples; at least 2 are required")]
    ClassAbsent { class: u8, count: usize },
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}
