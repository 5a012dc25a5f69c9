//! NNCK classifier checkpoint, little-endian:
//!
//! ```text
//! "NNCK" | u32 version | u32 pool[0..3] | u32 block count
//! per block: u32 name length | name (UTF-8) | u32 ndim | u32 dims[ndim] | f32 values[prod(dims)]
//! ```

use std::path::Path;

use crate::error::{Error, Result};

use super::classifier::{ClassifierModel, Param};

pub const NNCK_MAGIC: &[u8; 4] = b"NNCK";
pub const NNCK_VERSION: u32 = 1;

pub fn encode_checkpoint(model: &ClassifierModel) -> Vec<u8> {
    let mut out = Vec::new();
    let word = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    out.extend_from_slice(NNCK_MAGIC);
    word(&mut out, NNCK_VERSION);
    for p in model.pools() {
        word(&mut out, p as u32);
    }
    word(&mut out, model.params().len() as u32);
    for p in model.params() {
        word(&mut out, p.name.len() as u32);
        out.extend_from_slice(p.name.as_bytes());
        word(&mut out, p.shape.len() as u32);
        for &d in &p.shape {
            word(&mut out, d as u32);
        }
        for v in &p.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated { path: self.path.to_path_buf(), expected: self.pos + n, found: self.bytes.len() });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<ClassifierModel> {
    if bytes.len() < 4 || &bytes[..4] != NNCK_MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf(), expected: "NNCK" });
    }
    let mut r = Reader { bytes, pos: 4, path };
    let version = r.u32()?;
    if version != NNCK_VERSION {
        return Err(Error::UnsupportedVersion { path: path.to_path_buf(), found: version });
    }
    let pools = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let n = r.u32()? as usize;
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| Error::invalid("parameter name is not UTF-8"))?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let values = r
            .take(4 * count)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        params.push(Param { name, shape, values });
    }
    ClassifierModel::from_params(pools, params)
}

pub fn save_checkpoint(model: &ClassifierModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ClassifierModel> {
    let path = path.as_ref();
    decode_checkpoint(&std::fs::read(path)?, path)
}
