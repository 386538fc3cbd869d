//! Named-tensor container used for model weights and cached feature
//! matrices. Little-endian layout:
//!
//! ```text
//! magic "HWTS" | version u32 | entry count u32
//! per entry: name length u32 | name (UTF-8) | dtype u8 (0 = f32, 1 = f64)
//!            | rank u32 | dims u32 x rank | data
//! ```

use std::fs;
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"HWTS";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn tag(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }
}

/// Ordered list of named tensors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TensorArchive {
    pub entries: Vec<(String, Tensor)>,
}

impl TensorArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) {
        self.entries.push((name.into(), tensor));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn encode(&self, dtype: DType) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, tensor) in &self.entries {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(dtype.tag());
            out.extend_from_slice(&(tensor.shape().len() as u32).to_le_bytes());
            for d in tensor.shape() {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in tensor.data() {
                match dtype {
                    DType::F32 => out.extend_from_slice(&(*v as f32).to_le_bytes()),
                    DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut cursor = Cursor { bytes, pos: 0, path };
        if cursor.take(4)? != ARCHIVE_MAGIC {
            return Err(Error::format(path, "not a tensor archive (bad magic)"));
        }
        let version = cursor.u32()?;
        if version != ARCHIVE_VERSION {
            return Err(Error::format(path, format!("unsupported archive version {version}")));
        }
        let count = cursor.u32()? as usize;
        let mut archive = TensorArchive::new();
        for _ in 0..count {
            let len = cursor.u32()? as usize;
            let name = String::from_utf8(cursor.take(len)?.to_vec())
                .map_err(|_| Error::format(path, "entry name is not UTF-8"))?;
            let dtype = match cursor.take(1)?[0] {
                0 => DType::F32,
                1 => DType::F64,
                t => return Err(Error::format(path, format!("{name}: unknown dtype tag {t}"))),
            };
            let rank = cursor.u32()? as usize;
            let shape = (0..rank)
                .map(|_| cursor.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let data = match dtype {
                DType::F32 => cursor
                    .take(4 * n)?
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                    .collect(),
                DType::F64 => cursor
                    .take(8 * n)?
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            };
            archive.push(name, Tensor::new(shape, data)?);
        }
        if cursor.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes after last entry"));
        }
        Ok(archive)
    }

    pub fn save(&self, path: &Path, dtype: DType) -> Result<()> {
        fs::write(path, self.encode(dtype)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, "truncated archive"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip_is_exact_and_f32_rounds() {
        let mut a = TensorArchive::new();
        a.push("w", Tensor::new(vec![2, 2], vec![0.1, -2.0, 1e-30, 3.5]).unwrap());
        a.push("b", Tensor::vector(vec![]));
        let p = Path::new("mem");
        assert_eq!(TensorArchive::decode(&a.encode(DType::F64), p).unwrap(), a);
        let f = TensorArchive::decode(&a.encode(DType::F32), p).unwrap();
        assert_eq!(f.get("w").unwrap().data()[0], 0.1f32 as f64);
    }

    #[test]
    fn truncation_detected() {
        let mut a = TensorArchive::new();
        a.push("w", Tensor::vector(vec![1.0, 2.0]));
        let mut bytes = a.encode(DType::F32);
        bytes.truncate(bytes.len() - 1);
        assert!(TensorArchive::decode(&bytes, Path::new("x")).is_err());
    }
}
