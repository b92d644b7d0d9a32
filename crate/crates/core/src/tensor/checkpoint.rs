//! Checkpoint container and its binary wire format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic  b"SCDA"
//! u32    format version (currently 1)
//! u32    tensor count
//! per tensor:
//!   u32      name length in bytes
//!   [u8]     UTF-8 name
//!   u32      rank
//!   [u32]    extents
//!   [f32 LE] raw scalars, product(extents) of them
//! ```
//!
//! Tensors are stored sorted by name, so save -> load -> save is
//! byte-identical.

use super::Tensor;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"SCDA";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    tensors: BTreeMap<String, (Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Checkpoint::default()
    }

    pub fn insert<T: Scalar>(&mut self, name: &str, tensor: &Tensor<T>) {
        let data = tensor.data().iter().map(|v| v.to_f32_s()).collect();
        self.tensors.insert(name.to_string(), (tensor.shape().to_vec(), data));
    }

    pub fn insert_raw(&mut self, name: &str, shape: Vec<usize>, data: Vec<f32>) {
        self.tensors.insert(name.to_string(), (shape, data));
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        self.tensors.get(name).map(|(s, d)| (s.as_slice(), d.as_slice()))
    }

    pub fn tensor<T: Scalar>(&self, name: &str) -> Result<Tensor<T>> {
        let (shape, data) = self
            .get(name)
            .ok_or_else(|| CoreError::config(format!("checkpoint is missing tensor '{name}'")))?;
        Tensor::from_vec(shape, data.iter().map(|&v| T::from_f32(v)).collect())
    }

    /// Scalar convenience accessor for metadata entries.
    pub fn scalar(&self, name: &str) -> Result<f32> {
        let (_, data) = self
            .get(name)
            .ok_or_else(|| CoreError::config(format!("checkpoint is missing scalar '{name}'")))?;
        if data.len() != 1 {
            return Err(CoreError::config(format!("'{name}' is not a scalar")));
        }
        Ok(data[0])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(|s| s.as_str())
    }

    pub fn has_prefix(&self, prefix: &str) -> bool {
        self.tensors.keys().any(|k| k.starts_with(prefix))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, (shape, data)) in &self.tensors {
            buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
            buf.extend_from_slice(name.as_bytes());
            buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &e in shape {
                buf.extend_from_slice(&(e as u32).to_le_bytes());
            }
            for v in data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        buf
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > bytes.len() {
                return Err(CoreError::Parse {
                    line: 0,
                    msg: format!("checkpoint truncated at byte {}", *pos),
                });
            }
            let s = &bytes[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let read_u32 = |pos: &mut usize| -> Result<u32> {
            let b = take(pos, 4)?;
            Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        };

        if take(&mut pos, 4)? != MAGIC {
            return Err(CoreError::Parse { line: 0, msg: "bad checkpoint magic".into() });
        }
        let version = read_u32(&mut pos)?;
        if version != VERSION {
            return Err(CoreError::Parse {
                line: 0,
                msg: format!("unsupported checkpoint version {version}"),
            });
        }
        let count = read_u32(&mut pos)? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let name_len = read_u32(&mut pos)? as usize;
            let name = std::str::from_utf8(take(&mut pos, name_len)?)
                .map_err(|_| CoreError::Parse { line: 0, msg: "tensor name is not UTF-8".into() })?
                .to_string();
            let rank = read_u32(&mut pos)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u32(&mut pos)? as usize);
            }
            let numel: usize = shape.iter().product();
            let raw = take(&mut pos, numel * 4)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.insert(name, (shape, data));
        }
        if pos != bytes.len() {
            return Err(CoreError::Parse {
                line: 0,
                msg: format!("{} trailing bytes after checkpoint payload", bytes.len() - pos),
            });
        }
        Ok(Checkpoint { tensors })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&ckpt.encode())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    Checkpoint::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut ckpt = Checkpoint::new();
        let t = Tensor::<f32>::uniform_init(&[3, 4], 3, 99, "w");
        ckpt.insert("enc/w", &t);
        ckpt.insert_raw("meta/step", vec![1], vec![1234.0]);
        let bytes = ckpt.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, ckpt);
        // save -> load -> save byte identity
        assert_eq!(back.encode(), bytes);
        let t2: Tensor<f32> = back.tensor("enc/w").unwrap();
        assert_eq!(t2.data(), t.data());
    }

    #[test]
    fn truncated_and_corrupt_payloads_are_rejected() {
        let mut ckpt = Checkpoint::new();
        ckpt.insert_raw("a", vec![2], vec![1.0, 2.0]);
        let bytes = ckpt.encode();
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Checkpoint::decode(&bad).is_err());
    }
}
