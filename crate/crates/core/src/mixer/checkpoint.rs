//! MFMX checkpoint: `"MFMX" | version u32 | seq_len, channel_dim, num_blocks,
//! token_hidden, channel_hidden, head_hidden (u32 each) | dropout_rate f32 |`
//! then every tensor in declaration order as little-endian f32.

use std::path::Path;

use super::params::tensor_shapes;
use super::{MixerConfig, MixerError, MixerParams};
use crate::io::{atomic_write, ByteReader, ByteWriter, FormatError};

pub const MFMX_MAGIC: &[u8; 4] = b"MFMX";
pub const MFMX_VERSION: u32 = 1;

fn to_u32(name: &str, v: usize) -> Result<u32, MixerError> {
    u32::try_from(v).map_err(|_| MixerError::Config(format!("{name} = {v} does not fit in u32")))
}

pub fn encode_checkpoint(params: &MixerParams) -> Result<Vec<u8>, MixerError> {
    params.validate()?;
    let c = &params.config;
    let mut w = ByteWriter::with_capacity(36 + 4 * params.num_parameters());
    w.bytes(MFMX_MAGIC);
    w.u32(MFMX_VERSION);
    for (name, v) in [
        ("seq_len", c.seq_len),
        ("channel_dim", c.channel_dim),
        ("num_blocks", c.num_blocks),
        ("token_hidden", c.token_hidden),
        ("channel_hidden", c.channel_hidden),
        ("head_hidden", c.head_hidden),
    ] {
        w.u32(to_u32(name, v)?);
    }
    w.f32(c.dropout_rate as f32);
    for t in params.tensors() {
        for &v in t {
            w.f32(v as f32);
        }
    }
    Ok(w.into_inner())
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<MixerParams, MixerError> {
    let mut r = ByteReader::new(bytes);
    r.magic(MFMX_MAGIC)?;
    let version = r.u32()?;
    if version != MFMX_VERSION {
        return Err(FormatError::Version(version).into());
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let dropout_rate = f64::from(r.f32()?);
    let config = MixerConfig {
        seq_len: dims[0],
        channel_dim: dims[1],
        num_blocks: dims[2],
        token_hidden: dims[3],
        channel_hidden: dims[4],
        head_hidden: dims[5],
        dropout_rate,
    };
    config.validate()?;
    let total: usize = tensor_shapes(&config).iter().map(|(_, a, b)| a * b).sum();
    if total.saturating_mul(4) != r.remaining() {
        return Err(FormatError::Truncated {
            offset: r.position(),
            needed: total * 4,
            available: r.remaining(),
        }
        .into());
    }
    let mut params = MixerParams::zeroed(config);
    for t in params.tensors_mut() {
        let vals = r.f32s(t.len())?;
        for (dst, v) in t.iter_mut().zip(vals) {
            *dst = f64::from(v);
        }
    }
    r.finish()?;
    params.validate()?;
    Ok(params)
}

pub fn write_checkpoint(params: &MixerParams, path: &Path) -> Result<(), MixerError> {
    let bytes = encode_checkpoint(params)?;
    atomic_write(path, &bytes).map_err(FormatError::from)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<MixerParams, MixerError> {
    let bytes = std::fs::read(path).map_err(FormatError::from)?;
    decode_checkpoint(&bytes)
}
