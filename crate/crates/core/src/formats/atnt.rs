//! ATNT tensor file format.
//!
//! ```text
//! "ATNT" | version u32 = 1 | kind u8 (0 self, 1 cross, 2 attribution) | 3 zero bytes
//!        | ndim u32 | ndim × u32 dims | float32 payload, row-major
//! ```
//! Little-endian throughout. An optional JSON sidecar (same basename) holds
//! token labels and a per-sample BLEU-1 score.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_file, read_u32, write_atomic};
use crate::attention::{AttentionTensor, AttributionMatrix, Matrix, TensorKind};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ATNT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct AtntFile {
    pub kind: TensorKind,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AtntSidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bleu1: Option<f64>,
}

impl AtntFile {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind.code());
        out.extend_from_slice(&[0; 3]);
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let short = || Error::Format("truncated ATNT header".into());
        if bytes.len() < 16 {
            return Err(short());
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected ATNT".into()));
        }
        let version = read_u32(bytes, 4).ok_or_else(short)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported ATNT version {version}")));
        }
        let kind = TensorKind::from_code(bytes[8])
            .ok_or_else(|| Error::Format(format!("unknown tensor kind {}", bytes[8])))?;
        let ndim = read_u32(bytes, 12).ok_or_else(short)? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for i in 0..ndim {
            dims.push(read_u32(bytes, 16 + 4 * i).ok_or_else(short)? as usize);
        }
        let start = 16 + 4 * ndim;
        let count: usize = dims.iter().product();
        if bytes.len() != start + 4 * count {
            return Err(Error::Format(format!(
                "payload size mismatch: {} bytes, expected {}",
                bytes.len(),
                start + 4 * count
            )));
        }
        let data = bytes[start..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(AtntFile { kind, dims, data })
    }

    pub fn from_tensor(t: &AttentionTensor) -> Self {
        AtntFile { kind: t.kind(), dims: t.dims().to_vec(), data: t.data().to_vec() }
    }

    pub fn into_tensor(self) -> Result<AttentionTensor> {
        let dims: [usize; 4] = self
            .dims
            .as_slice()
            .try_into()
            .map_err(|_| Error::Shape(format!("attention tensor needs 4 dims, got {:?}", self.dims)))?;
        AttentionTensor::new(self.kind, dims, self.data)
    }

    /// A derived matrix (head/layer average, attribution) stored as 2-D.
    pub fn from_matrix(kind: TensorKind, m: &Matrix) -> Self {
        AtntFile { kind, dims: vec![m.rows, m.cols], data: m.data.iter().map(|&v| v as f32).collect() }
    }

    pub fn from_vector(kind: TensorKind, v: &[f64]) -> Self {
        AtntFile { kind, dims: vec![v.len()], data: v.iter().map(|&x| x as f32).collect() }
    }

    pub fn into_matrix(self) -> Result<Matrix> {
        match self.dims.as_slice() {
            &[rows, cols] => Matrix::new(rows, cols, self.data.into_iter().map(f64::from).collect()),
            &[len] => Matrix::new(1, len, self.data.into_iter().map(f64::from).collect()),
            other => Err(Error::Shape(format!("expected a 1-D or 2-D tensor, got {other:?}"))),
        }
    }

    pub fn into_attribution(self, tokens: Vec<String>) -> Result<AttributionMatrix> {
        if self.kind != TensorKind::Attribution {
            return Err(Error::WrongKind { expected: "attribution", actual: self.kind });
        }
        AttributionMatrix::new(tokens, self.into_matrix()?)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn read(path: &Path) -> Result<AtntFile> {
    AtntFile::decode(&read_file(path)?)
}

/// Sidecar contents, or the default when the file does not exist.
pub fn read_sidecar(path: &Path) -> Result<AtntSidecar> {
    let p = sidecar_path(path);
    if !p.exists() {
        return Ok(AtntSidecar::default());
    }
    Ok(serde_json::from_slice(&read_file(&p)?)?)
}

pub fn write(path: &Path, file: &AtntFile) -> Result<()> {
    write_atomic(path, &file.encode())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let f = AtntFile { kind: TensorKind::Cross, dims: vec![1, 1, 2, 3], data: vec![0.5; 6] };
        let b = f.encode();
        assert_eq!(&b[..4], b"ATNT");
        assert_eq!(&b[4..8], &[1, 0, 0, 0]);
        assert_eq!(&b[8..12], &[1, 0, 0, 0]);
        assert_eq!(&b[12..16], &[4, 0, 0, 0]);
        assert_eq!(&b[16..20], &[1, 0, 0, 0]);
        assert_eq!(&b[28..32], &[3, 0, 0, 0]);
        assert_eq!(b.len(), 32 + 24);
        assert_eq!(AtntFile::decode(&b).unwrap(), f);
        assert!(AtntFile::decode(&b[..b.len() - 1]).is_err());
    }

    #[test]
    fn attribution_requires_kind() {
        let f = AtntFile { kind: TensorKind::Cross, dims: vec![2, 2], data: vec![0.0; 4] };
        assert!(f.clone().into_attribution(vec![]).is_err());
        let a = AtntFile { kind: TensorKind::Attribution, ..f };
        assert_eq!(a.into_attribution(vec!["a".into(), "b".into()]).unwrap().values.rows, 2);
    }

    proptest::proptest! {
        #[test]
        fn encode_decode(kind in 0u8..3, dims in proptest::collection::vec(1usize..5, 0..4), seed in 0u32..1000) {
            let n: usize = dims.iter().product();
            let data: Vec<f32> = (0..n).map(|i| (i as u32 ^ seed) as f32 * 0.125).collect();
            let f = AtntFile { kind: TensorKind::from_code(kind).unwrap(), dims, data };
            proptest::prop_assert_eq!(AtntFile::decode(&f.encode()).unwrap(), f);
        }
    }
}
