use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EmbeddingError, MAX_ID_LEN};
use crate::math::DenseMatrix;

/// Corpus object identifier: 1..=128 characters from `[A-Za-z0-9_-]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Result<Self, EmbeddingError> {
        let id = id.into();
        if id.is_empty() {
            return Err(EmbeddingError::InvalidId(id, "empty"));
        }
        if id.len() > MAX_ID_LEN {
            return Err(EmbeddingError::InvalidId(id, "longer than 128 characters"));
        }
        if !id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
        {
            return Err(EmbeddingError::InvalidId(
                id,
                "characters outside [A-Za-z0-9_-]",
            ));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for ObjectId {
    type Error = EmbeddingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<ObjectId> for String {
    fn from(id: ObjectId) -> Self {
        id.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ObjectId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Embeddings for one object. `siglip` is V×768; `dinov2_raw` is
/// V×(257·768) in production files; `dinov2_pca` is the compressed vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewEmbedding {
    pub object_id: ObjectId,
    pub siglip: DenseMatrix,
    pub dinov2_raw: Option<DenseMatrix>,
    pub dinov2_pca: Option<Vec<f32>>,
}

impl MultiViewEmbedding {
    pub fn num_views(&self) -> usize {
        self.siglip.rows()
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let id = self.object_id.as_str();
        let views = self.num_views();
        if views == 0 || views > usize::from(u16::MAX) {
            return Err(EmbeddingError::Shape {
                id: id.into(),
                msg: format!("{views} views"),
            });
        }
        if self.dinov2_raw.is_none() && self.dinov2_pca.is_none() {
            return Err(EmbeddingError::MissingDino(id.into()));
        }
        if let Some(raw) = &self.dinov2_raw {
            if raw.rows() != views {
                return Err(EmbeddingError::Shape {
                    id: id.into(),
                    msg: format!("raw DINOv2 has {} views, SigLIP has {views}", raw.rows()),
                });
            }
        }
        let finite = self.siglip.is_finite()
            && self.dinov2_raw.as_ref().is_none_or(DenseMatrix::is_finite)
            && self
                .dinov2_pca
                .as_ref()
                .is_none_or(|p| p.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(EmbeddingError::NonFinite(id.into()));
        }
        Ok(())
    }
}
