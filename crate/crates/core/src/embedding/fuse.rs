use super::{EmbeddingError, MultiViewEmbedding, CLASSIFIER_VIEWS, SEQ_LEN};
use crate::math::{pca_transform, DenseMatrix, PcaModel};

/// Classifier input: eight tokens. Tokens 0–3 are consecutive slices of the
/// compressed DINOv2 vector, tokens 4–7 the per-view SigLIP vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedInput {
    tokens: DenseMatrix,
}

impl FusedInput {
    pub fn from_tokens(tokens: DenseMatrix) -> Result<Self, EmbeddingError> {
        if tokens.rows() != SEQ_LEN || tokens.cols() == 0 {
            return Err(EmbeddingError::Shape {
                id: String::new(),
                msg: format!(
                    "fused input must be {SEQ_LEN}×W, got {}×{}",
                    tokens.rows(),
                    tokens.cols()
                ),
            });
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &DenseMatrix {
        &self.tokens
    }

    pub fn width(&self) -> usize {
        self.tokens.cols()
    }

    pub fn token(&self, i: usize) -> &[f32] {
        self.tokens.row(i)
    }
}

pub fn fuse(e: &MultiViewEmbedding) -> Result<FusedInput, EmbeddingError> {
    let id = e.object_id.to_string();
    if e.num_views() != CLASSIFIER_VIEWS {
        return Err(EmbeddingError::Shape {
            id,
            msg: format!(
                "classifier needs {CLASSIFIER_VIEWS} views, record has {}",
                e.num_views()
            ),
        });
    }
    let pca = e
        .dinov2_pca
        .as_ref()
        .ok_or_else(|| EmbeddingError::MissingDino(id.clone()))?;
    let width = e.siglip.cols();
    if pca.len() != CLASSIFIER_VIEWS * width {
        return Err(EmbeddingError::Shape {
            id,
            msg: format!(
                "compressed DINOv2 length {} is not {CLASSIFIER_VIEWS}×{width}",
                pca.len()
            ),
        });
    }
    let mut data = Vec::with_capacity(SEQ_LEN * width);
    data.extend_from_slice(pca);
    data.extend_from_slice(e.siglip.as_slice());
    Ok(FusedInput {
        tokens: DenseMatrix::from_vec(SEQ_LEN, width, data)?,
    })
}

/// View-major flattening of the raw DINOv2 block (view, token, channel).
pub fn flatten_raw(e: &MultiViewEmbedding) -> Option<&[f32]> {
    e.dinov2_raw.as_ref().map(DenseMatrix::as_slice)
}

/// Fills `dinov2_pca` for every record by projecting its flattened raw
/// DINOv2 block. Records without a raw block keep an existing compressed
/// vector of the right length.
pub fn compress_corpus(
    records: &[MultiViewEmbedding],
    pca: &PcaModel,
    drop_raw: bool,
) -> Result<Vec<MultiViewEmbedding>, EmbeddingError> {
    records
        .iter()
        .map(|rec| {
            let id = rec.object_id.to_string();
            let mut out = rec.clone();
            match flatten_raw(rec) {
                Some(flat) => {
                    if flat.len() != pca.input_dim() {
                        return Err(EmbeddingError::Shape {
                            id,
                            msg: format!(
                                "raw DINOv2 has {} values, PCA expects {}",
                                flat.len(),
                                pca.input_dim()
                            ),
                        });
                    }
                    out.dinov2_pca = Some(pca_transform(pca, flat)?);
                    if drop_raw {
                        out.dinov2_raw = None;
                    }
                }
                None => match &rec.dinov2_pca {
                    Some(p) if p.len() == pca.num_components() => {}
                    Some(p) => {
                        return Err(EmbeddingError::Shape {
                            id,
                            msg: format!(
                                "compressed vector of length {} for a {}-component PCA",
                                p.len(),
                                pca.num_components()
                            ),
                        })
                    }
                    None => return Err(EmbeddingError::MissingDino(id)),
                },
            }
            Ok(out)
        })
        .collect()
}
