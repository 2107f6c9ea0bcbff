//! Binary model file.
//!
//! ```text
//! "KFAE" | u32 version | u32 tensor count | u32 config length | config JSON
//! per tensor: u16 name length | name | u8 rank | u32 dims... | f32 data...
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::imaging::write_atomic;
use crate::numerics::Tensor;

const MAGIC: &[u8; 4] = b"KFAE";
pub const FORMAT_VERSION: u32 = 1;

pub fn model_to_bytes(params: &ModelParams<f32>, cfg: &ModelConfig) -> Result<Vec<u8>> {
    let named = params.named_tensors();
    let config = serde_json::to_vec(cfg)?;
    let mut out = Vec::with_capacity(16 + config.len() + 4 * params.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(named.len() as u32).to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    for (name, t) in named {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape().len() as u8);
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_model(params: &ModelParams<f32>, cfg: &ModelConfig, path: &Path) -> Result<()> {
    write_atomic(path, &model_to_bytes(params, cfg)?)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<(ModelParams<f32>, ModelConfig)> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4) != Some(MAGIC.as_slice()) {
        return Err(Error::BadMagic);
    }
    let header = |what: &str| Error::MalformedModel(format!("truncated {what}"));
    let version = r.u32().ok_or_else(|| header("header"))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = r.u32().ok_or_else(|| header("header"))? as usize;
    let config_len = r.u32().ok_or_else(|| header("header"))? as usize;
    let config_bytes = r.take(config_len).ok_or_else(|| header("config"))?;
    let cfg: ModelConfig = serde_json::from_slice(config_bytes)
        .map_err(|e| Error::MalformedModel(format!("config: {e}")))?;
    cfg.validate()
        .map_err(|e| Error::MalformedModel(format!("config: {e}")))?;

    let mut params = ModelParams::<f32>::zeros(&cfg);
    let expected: Vec<(String, Vec<usize>)> = params
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    if count != expected.len() {
        return Err(Error::MalformedModel(format!(
            "{count} tensors, config implies {}",
            expected.len()
        )));
    }

    for ((name, shape), slot) in expected.iter().zip(params.tensors_mut()) {
        let truncated = || Error::TruncatedTensor(name.clone());
        let len = r.u16().ok_or_else(truncated)? as usize;
        let got = r.take(len).ok_or_else(truncated)?;
        if got != name.as_bytes() {
            return Err(Error::MalformedModel(format!(
                "expected tensor `{name}`, found `{}`",
                String::from_utf8_lossy(got)
            )));
        }
        let rank = r.u8().ok_or_else(truncated)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32().ok_or_else(truncated)? as usize);
        }
        if &dims != shape {
            return Err(Error::MalformedModel(format!(
                "tensor `{name}` has shape {dims:?}, expected {shape:?}"
            )));
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n * 4).ok_or_else(truncated)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        *slot = Tensor::from_vec(&dims, data)?;
    }
    if r.pos != bytes.len() {
        return Err(Error::MalformedModel(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    if !params.is_finite() {
        return Err(Error::MalformedModel("non-finite parameter values".into()));
    }
    Ok((params, cfg))
}

pub fn load_model(path: &Path) -> Result<(ModelParams<f32>, ModelConfig)> {
    model_from_bytes(&std::fs::read(path)?)
}
