//! Self-describing binary model container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "STKNRMDL"
//! version      u32
//! endianness   u8       b'L' (tensor payloads are little-endian f64)
//! manifest_len u64
//! manifest     UTF-8 JSON object
//! n_tensors    u32
//! per tensor:  name_len u32, name bytes, ndim u32, dims u64 × ndim, data f64 × Π dims
//! ```
//!
//! Tensors are stored in name order so that encoding is canonical and
//! `to_bytes(from_bytes(b)) == b` for every valid payload.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Parameters};

pub const MAGIC: &[u8; 8] = b"STKNRMDL";
pub const VERSION: u32 = 1;
const LITTLE_ENDIAN: u8 = b'L';

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub manifest: Value,
    tensors: BTreeMap<String, Matrix>,
}

impl Container {
    pub fn new(manifest: Value) -> Self {
        Container {
            manifest,
            tensors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Matrix) {
        self.tensors.insert(name.into(), tensor);
    }

    pub fn get(&self, name: &str) -> Result<&Matrix> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::ModelMissingComponent(name.to_string()))
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// Stores every tensor of `params` under `prefix.<tensor-name>`.
    pub fn put_params<P: Parameters>(&mut self, prefix: &str, params: &P) {
        for (name, t) in params.tensors() {
            self.insert(format!("{prefix}.{name}"), t.clone());
        }
    }

    /// Fills `params` from tensors stored by [`Container::put_params`];
    /// shapes must match exactly.
    pub fn load_params<P: Parameters>(&self, prefix: &str, params: &mut P) -> Result<()> {
        for (name, t) in params.tensors_mut() {
            let key = format!("{prefix}.{name}");
            let stored = self.get(&key)?;
            if stored.shape() != t.shape() {
                return Err(Error::MalformedContainer(format!(
                    "tensor {key} has shape {:?}, expected {:?}",
                    stored.shape(),
                    t.shape()
                )));
            }
            *t = stored.clone();
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest).expect("manifest is valid JSON");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(LITTLE_ENDIAN);
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
            for v in t.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::MalformedContainer("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::MalformedContainer(format!(
                "unsupported version {version}"
            )));
        }
        if r.take(1)?[0] != LITTLE_ENDIAN {
            return Err(Error::MalformedContainer("unsupported endianness".into()));
        }
        let manifest_len = r.u64()? as usize;
        let manifest: Value = serde_json::from_slice(r.take(manifest_len)?)
            .map_err(|e| Error::MalformedContainer(format!("manifest: {e}")))?;
        let n = r.u32()?;
        let mut tensors = BTreeMap::new();
        for _ in 0..n {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::MalformedContainer("tensor name is not UTF-8".into()))?;
            let ndim = r.u32()?;
            if ndim != 2 {
                return Err(Error::MalformedContainer(format!(
                    "tensor {name}: expected 2 dims, found {ndim}"
                )));
            }
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let count = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::MalformedContainer("tensor too large".into()))?;
            let raw = r.take(count.checked_mul(8).ok_or_else(|| {
                Error::MalformedContainer("tensor too large".into())
            })?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.insert(name, Matrix::from_vec(rows, cols, data));
        }
        if r.pos != bytes.len() {
            return Err(Error::MalformedContainer("trailing bytes".into()));
        }
        Ok(Container { manifest, tensors })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::MalformedContainer("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reads a required manifest field.
pub(crate) fn field<'a>(manifest: &'a Value, key: &str) -> Result<&'a Value> {
    manifest
        .get(key)
        .ok_or_else(|| Error::MalformedContainer(format!("manifest missing {key:?}")))
}

pub(crate) fn usize_field(manifest: &Value, key: &str) -> Result<usize> {
    field(manifest, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::MalformedContainer(format!("manifest field {key:?} is not an integer")))
}

pub(crate) fn str_field<'a>(manifest: &'a Value, key: &str) -> Result<&'a str> {
    field(manifest, key)?
        .as_str()
        .ok_or_else(|| Error::MalformedContainer(format!("manifest field {key:?} is not a string")))
}

pub(crate) fn decode_field<T: serde::de::DeserializeOwned>(manifest: &Value, key: &str) -> Result<T> {
    serde_json::from_value(field(manifest, key)?.clone())
        .map_err(|e| Error::MalformedContainer(format!("manifest field {key:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut c = Container::new(json!({"kind": "test", "labels": ["O", "B-X"]}));
        c.insert("a", Matrix::from_vec(2, 2, vec![1.0, -0.0, f64::MIN_POSITIVE, 1e-300]));
        c.insert("b", Matrix::zeros(0, 3));
        let bytes = c.to_bytes();
        let back = Container::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.get("a").unwrap().as_slice()[1].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn rejects_truncated_and_missing() {
        let c = Container::new(json!({}));
        let bytes = c.to_bytes();
        assert!(matches!(
            Container::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::MalformedContainer(_))
        ));
        assert!(matches!(c.get("nope"), Err(Error::ModelMissingComponent(_))));
        assert!(Container::from_bytes(b"garbage!").is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_tensors_round_trip(values in proptest::collection::vec(any::<f64>(), 0..40), cols in 1usize..5) {
            let rows = values.len() / cols;
            let data = values[..rows * cols].to_vec();
            let mut c = Container::new(json!({"k": 1}));
            c.insert("t", Matrix::from_vec(rows, cols, data));
            let bytes = c.to_bytes();
            let back = Container::from_bytes(&bytes).unwrap();
            prop_assert_eq!(back.to_bytes(), bytes);
        }
    }
}
