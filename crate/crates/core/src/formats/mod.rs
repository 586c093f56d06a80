//! On-disk formats: PKPF keypoint clips with JSON sidecars, the JSON debug
//! clip format, ATNT tensors, and raw `.f32` feature matrices.

pub mod atnt;
pub mod json_clip;
pub mod pkpf;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place. A crash never leaves a truncated file under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".poseprep-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Frames × 208 feature matrix as raw little-endian float32, row-major.
pub fn encode_features(rows: &[[f64; crate::layout::FEATURE_DIM]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(rows.len() * crate::layout::FEATURE_DIM * 4);
    for row in rows {
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<Vec<Vec<f32>>> {
    let row_bytes = crate::layout::FEATURE_DIM * 4;
    if !bytes.len().is_multiple_of(row_bytes) {
        return Err(Error::Format(format!("{} bytes is not a whole number of 208-float rows", bytes.len())));
    }
    Ok(bytes
        .chunks_exact(row_bytes)
        .map(|row| row.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect())
        .collect())
}

pub(crate) fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}
