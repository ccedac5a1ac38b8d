//! Dense arithmetic, symmetric eigensolver, PCA and deterministic RNG streams.

pub mod eigen;
pub mod matrix;
pub mod pca;
pub mod rng;

pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use matrix::DenseMatrix;
pub use pca::{
    pca_fit, pca_fit_with_route, pca_transform, PcaModel, PcaRoute, MFPC_MAGIC, MFPC_VERSION,
};
pub use rng::{derive_seed, RngStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MathError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigensolver failed to converge for eigenvalue {0}")]
    NoConvergence(usize),
    #[error("requested {requested} components but centered data has numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },
}
