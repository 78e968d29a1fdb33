//! Binary checkpoint format.
//!
//! ```text
//! "DDSR"  u32 version  u32 count
//! count × { u32 name_len, name (UTF-8), u32 rank, rank × u32 extent, f32 values… }
//! ```
//!
//! All integers and values are little-endian; values are row-major.

use std::fs;
use std::path::Path;

use crate::autograd::ParamStore;
use crate::error::{Error, Result};
use crate::model::{DdsrParams, ModelConfig};
use crate::tensor::{Shape, Tensor};

pub const MAGIC: &[u8; 4] = b"DDSR";
pub const VERSION: u32 = 1;

pub fn encode(store: &ParamStore<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + store.numel() * 4 + store.len() * 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for p in store.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        let dims = p.value.shape().dims();
        out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("checkpoint truncated while reading {what} at byte {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<ParamStore<f32>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let count = r.u32("parameter count")?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::Format("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32("rank")? as usize;
        if !(1..=4).contains(&rank) {
            return Err(Error::Format(format!("parameter {name} has unsupported rank {rank}")));
        }
        let mut dims = [1usize; 4];
        for slot in dims[4 - rank..].iter_mut() {
            *slot = r.u32("extent")? as usize;
        }
        let numel = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("parameter {name} extents overflow")))?;
        let byte_len = numel
            .checked_mul(4)
            .ok_or_else(|| Error::Format(format!("parameter {name} extents overflow")))?;
        let raw = r.take(byte_len, &format!("values of {name}"))?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        store
            .add(name, Tensor::from_vec(Shape::from(dims), data)?)
            .map_err(|e| Error::Format(e.to_string()))?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
    }
    Ok(store)
}

pub fn save_checkpoint(params: &DdsrParams<f32>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(params.store()))?;
    Ok(())
}

/// Raw parameter store; bind it with [`DdsrParams::from_store`] or
/// [`load_for_config`].
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ParamStore<f32>> {
    decode(&fs::read(path)?)
}

pub fn load_for_config(path: impl AsRef<Path>, config: ModelConfig) -> Result<DdsrParams<f32>> {
    DdsrParams::from_store(config, load_checkpoint(path)?)
}
