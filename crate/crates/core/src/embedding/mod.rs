//! Per-object multi-view embeddings, the MFEB container, and the fusion that
//! builds the classifier's token sequence.

mod fuse;
mod mfeb;
mod record;

pub use fuse::{compress_corpus, flatten_raw, fuse, FusedInput};
pub use mfeb::{mfeb_decode, mfeb_encode, mfeb_read, mfeb_write, MFEB_MAGIC, MFEB_VERSION};
pub use record::{MultiViewEmbedding, ObjectId};

use thiserror::Error;

use crate::io::FormatError;
use crate::math::MathError;

/// Width of one SigLIP view embedding and of one fused token.
pub const TOKEN_WIDTH: usize = 768;
/// DINOv2 tokens per view: class token plus a 16×16 patch grid.
pub const DINO_TOKENS: usize = 257;
pub const DINO_RAW_WIDTH: usize = DINO_TOKENS * TOKEN_WIDTH;
pub const CLASSIFIER_VIEWS: usize = 4;
/// Length of the compressed DINOv2 vector: four token-width slices.
pub const PCA_WIDTH: usize = CLASSIFIER_VIEWS * TOKEN_WIDTH;
pub const SEQ_LEN: usize = 2 * CLASSIFIER_VIEWS;
pub const MAX_ID_LEN: usize = 128;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("invalid object id {0:?}: {1}")]
    InvalidId(String, &'static str),
    #[error("duplicate object id {0:?}")]
    DuplicateId(String),
    #[error("record {id:?}: {msg}")]
    Shape { id: String, msg: String },
    #[error("record {0:?} has a non-finite embedding value")]
    NonFinite(String),
    #[error("record {0:?} carries no DINOv2 payload")]
    MissingDino(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Math(#[from] MathError),
}
