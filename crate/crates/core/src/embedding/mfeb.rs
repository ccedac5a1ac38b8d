//! MFEB container.
//!
//! ```text
//! "MFEB" | version u32 | record count u64
//! per record:
//!   id length u16 | UTF-8 id | views u16 | flags u16
//!   [flags bit2] siglip width u32 | raw width u32 | pca length u32
//!   siglip      views × siglip width f32
//!   [bit0] raw  views × raw width f32
//!   [bit1] pca  pca length f32
//! ```
//!
//! Everything is little-endian. Records at production widths (768, 257·768,
//! 3072) never set bit 2 and carry no width block; bit 2 is only written for
//! reduced-width corpora.

use std::collections::HashSet;
use std::path::Path;

use super::{EmbeddingError, MultiViewEmbedding, ObjectId, DINO_RAW_WIDTH, PCA_WIDTH, TOKEN_WIDTH};
use crate::io::{atomic_write, ByteReader, ByteWriter, FormatError};
use crate::math::DenseMatrix;

pub const MFEB_MAGIC: &[u8; 4] = b"MFEB";
pub const MFEB_VERSION: u32 = 1;

const FLAG_RAW: u16 = 1;
const FLAG_PCA: u16 = 1 << 1;
const FLAG_DIMS: u16 = 1 << 2;
const KNOWN_FLAGS: u16 = FLAG_RAW | FLAG_PCA | FLAG_DIMS;

pub fn mfeb_encode(records: &[MultiViewEmbedding]) -> Result<Vec<u8>, EmbeddingError> {
    let mut seen = HashSet::with_capacity(records.len());
    let mut w = ByteWriter::new();
    w.bytes(MFEB_MAGIC);
    w.u32(MFEB_VERSION);
    w.u64(records.len() as u64);
    for rec in records {
        rec.validate()?;
        if !seen.insert(rec.object_id.as_str()) {
            return Err(EmbeddingError::DuplicateId(rec.object_id.to_string()));
        }
        let id = rec.object_id.as_str().as_bytes();
        let siglip_width = rec.siglip.cols();
        let raw_width = rec.dinov2_raw.as_ref().map_or(0, DenseMatrix::cols);
        let pca_len = rec.dinov2_pca.as_ref().map_or(0, Vec::len);
        let production = siglip_width == TOKEN_WIDTH
            && rec
                .dinov2_raw
                .as_ref()
                .is_none_or(|_| raw_width == DINO_RAW_WIDTH)
            && rec.dinov2_pca.as_ref().is_none_or(|_| pca_len == PCA_WIDTH);

        let mut flags = 0u16;
        if rec.dinov2_raw.is_some() {
            flags |= FLAG_RAW;
        }
        if rec.dinov2_pca.is_some() {
            flags |= FLAG_PCA;
        }
        if !production {
            flags |= FLAG_DIMS;
        }
        w.u16(id.len() as u16);
        w.bytes(id);
        w.u16(rec.num_views() as u16);
        w.u16(flags);
        if !production {
            for (name, v) in [
                ("siglip", siglip_width),
                ("raw", raw_width),
                ("pca", pca_len),
            ] {
                let v = u32::try_from(v).map_err(|_| EmbeddingError::Shape {
                    id: rec.object_id.to_string(),
                    msg: format!("{name} width {v} exceeds u32"),
                })?;
                w.u32(v);
            }
        }
        w.f32s(rec.siglip.as_slice());
        if let Some(raw) = &rec.dinov2_raw {
            w.f32s(raw.as_slice());
        }
        if let Some(pca) = &rec.dinov2_pca {
            w.f32s(pca);
        }
    }
    Ok(w.into_inner())
}

pub fn mfeb_decode(bytes: &[u8]) -> Result<Vec<MultiViewEmbedding>, EmbeddingError> {
    let mut r = ByteReader::new(bytes);
    r.magic(MFEB_MAGIC)?;
    let version = r.u32()?;
    if version != MFEB_VERSION {
        return Err(FormatError::Version(version).into());
    }
    // Smallest possible record: u16 id len + 1 id byte + u16 + u16 + one float.
    let count = r.len_u64(11)?;
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let id_len = usize::from(r.u16()?);
        let id_bytes = r.take(id_len)?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| FormatError::Invalid("object id is not UTF-8".into()))?;
        let object_id = ObjectId::new(id)?;
        if !seen.insert(object_id.clone()) {
            return Err(EmbeddingError::DuplicateId(object_id.to_string()));
        }
        let views = usize::from(r.u16()?);
        let flags = r.u16()?;
        if flags & !KNOWN_FLAGS != 0 {
            return Err(FormatError::Invalid(format!("unknown flag bits {flags:#06x}")).into());
        }
        let (siglip_width, raw_width, pca_len) = if flags & FLAG_DIMS != 0 {
            (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize)
        } else {
            (TOKEN_WIDTH, DINO_RAW_WIDTH, PCA_WIDTH)
        };
        let matrix =
            |r: &mut ByteReader, rows: usize, cols: usize| -> Result<DenseMatrix, EmbeddingError> {
                let n = rows
                    .checked_mul(cols)
                    .ok_or_else(|| FormatError::Invalid("payload size overflow".into()))?;
                let data = r.f32s(n)?;
                DenseMatrix::from_vec(rows, cols, data)
                    .map_err(|_| EmbeddingError::NonFinite(object_id.to_string()))
            };
        let siglip = matrix(&mut r, views, siglip_width)?;
        let dinov2_raw = if flags & FLAG_RAW != 0 {
            Some(matrix(&mut r, views, raw_width)?)
        } else {
            None
        };
        let dinov2_pca = if flags & FLAG_PCA != 0 {
            Some(r.f32s(pca_len)?)
        } else {
            None
        };
        let rec = MultiViewEmbedding {
            object_id,
            siglip,
            dinov2_raw,
            dinov2_pca,
        };
        rec.validate()?;
        out.push(rec);
    }
    r.finish()?;
    Ok(out)
}

pub fn mfeb_write(records: &[MultiViewEmbedding], path: &Path) -> Result<(), EmbeddingError> {
    let bytes = mfeb_encode(records)?;
    atomic_write(path, &bytes).map_err(FormatError::from)?;
    Ok(())
}

pub fn mfeb_read(path: &Path) -> Result<Vec<MultiViewEmbedding>, EmbeddingError> {
    let bytes = std::fs::read(path).map_err(FormatError::from)?;
    mfeb_decode(&bytes)
}
