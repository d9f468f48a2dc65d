use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

use super::{ModelConfig, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"S2MCKPT1";

/// Serializes `config` and `params`: magic, `u32` length plus JSON config,
/// then every tensor as `u32` rank, `u32` dims and `f32` values, all
/// little-endian.
pub fn checkpoint_bytes<T: Real>(config: &ModelConfig, params: &ModelParams<T>) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(config)?;
    let mut out = Vec::with_capacity(16 + json.len() + 4 * crate::model::count_params(params));
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in params.tensors() {
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&cast::<T, f32>(v).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_checkpoint<T: Real>(
    path: impl AsRef<Path>,
    config: &ModelConfig,
    params: &ModelParams<T>,
) -> Result<()> {
    fs::write(path, checkpoint_bytes(config, params)?)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Length {
                expected: end,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn parse_checkpoint<T: Real>(bytes: &[u8]) -> Result<(ModelConfig, ModelParams<T>)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(len)?)?;
    config.validate()?;
    let mut params = ModelParams::<T>::zeros(&config);
    let names = params.tensor_names();
    for (t, name) in params.tensors_mut().into_iter().zip(names) {
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        if shape != t.shape() {
            return Err(Error::Consistency(format!(
                "checkpoint tensor {name} has shape {shape:?}, config implies {:?}",
                t.shape()
            )));
        }
        for v in t.data_mut() {
            let raw = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
            *v = cast(raw);
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - r.pos
        )));
    }
    if !params.is_finite() {
        return Err(Error::Format(
            "checkpoint holds non-finite parameters".into(),
        ));
    }
    Ok((config, params))
}

pub fn load_checkpoint<T: Real>(path: impl AsRef<Path>) -> Result<(ModelConfig, ModelParams<T>)> {
    parse_checkpoint(&fs::read(path)?)
}
