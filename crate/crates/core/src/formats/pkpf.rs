//! PKPF binary clip format.
//!
//! ```text
//! "PKPF" | version u32 = 1 | frame_count u32 | keypoint_count u32 = 104
//!        | coordinate_state u8 | 3 zero bytes
//!        | frame_count × 104 × (x, y) float32, quiet NaN = missing
//! ```
//! All integers and floats little-endian. Clip metadata lives in a JSON
//! sidecar with the same basename.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_file, read_u32, write_atomic};
use crate::error::{Error, Result};
use crate::layout::KEYPOINT_COUNT;
use crate::pose::{Clip, ClipMeta, CoordinateState, Keypoint2D, PoseFrame};

pub const MAGIC: &[u8; 4] = b"PKPF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
const FRAME_BYTES: usize = KEYPOINT_COUNT * 2 * 4;

/// JSON sidecar. Only `id`, `fps` and `caption` are required; pipeline
/// outputs add provenance fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub id: String,
    pub fps: f64,
    pub caption: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate_state: Option<CoordinateState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentinel: Option<f64>,
    /// `[frames, 208]` of the `.f32` feature matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_dims: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<serde_json::Value>,
}

impl Sidecar {
    pub fn for_clip(clip: &Clip) -> Self {
        let m = clip.meta();
        Sidecar {
            id: m.id.clone(),
            fps: m.fps,
            caption: m.caption.clone(),
            coordinate_state: None,
            sentinel: None,
            feature_dims: None,
            normalization: None,
            rng_algorithm: None,
            seed: None,
            augmentation: None,
        }
    }

    pub fn meta(&self) -> ClipMeta {
        ClipMeta { id: self.id.clone(), fps: self.fps, caption: self.caption.clone() }
    }
}

pub fn encode(clip: &Clip) -> Vec<u8> {
    let frames = clip.frames();
    let mut out = Vec::with_capacity(HEADER_LEN + frames.len() * FRAME_BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(frames.len() as u32).to_le_bytes());
    out.extend_from_slice(&(KEYPOINT_COUNT as u32).to_le_bytes());
    out.push(clip.state().code());
    out.extend_from_slice(&[0; 3]);
    for f in frames {
        for k in f.keypoints() {
            let (x, y) = k.get().map_or((f32::NAN, f32::NAN), |(x, y)| (x as f32, y as f32));
            out.extend_from_slice(&x.to_le_bytes());
            out.extend_from_slice(&y.to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub frame_count: u32,
    pub keypoint_count: u32,
    pub state_code: u8,
    pub pad: [u8; 3],
}

pub fn read_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected PKPF".into()));
    }
    Ok(Header {
        version: read_u32(bytes, 4).unwrap_or_default(),
        frame_count: read_u32(bytes, 8).unwrap_or_default(),
        keypoint_count: read_u32(bytes, 12).unwrap_or_default(),
        state_code: bytes[16],
        pad: [bytes[17], bytes[18], bytes[19]],
    })
}

/// All format violations in a PKPF byte stream. Empty means valid.
pub fn violations(bytes: &[u8]) -> Vec<String> {
    let header = match read_header(bytes) {
        Ok(h) => h,
        Err(e) => return vec![e.to_string()],
    };
    let mut out = Vec::new();
    if header.version != VERSION {
        out.push(format!("unsupported version {}", header.version));
    }
    if header.keypoint_count as usize != KEYPOINT_COUNT {
        out.push(format!("keypoint_count {} != {KEYPOINT_COUNT}", header.keypoint_count));
    }
    let state = CoordinateState::from_code(header.state_code);
    if state.is_none() {
        out.push(format!("unknown coordinate_state {}", header.state_code));
    }
    if header.pad != [0; 3] {
        out.push("non-zero pad bytes".into());
    }
    if header.frame_count == 0 {
        out.push("clip has no frames".into());
    }
    let expected = HEADER_LEN + header.frame_count as usize * header.keypoint_count as usize * 8;
    if bytes.len() != expected {
        out.push(format!("payload size mismatch: {} bytes, expected {expected}", bytes.len()));
        return out;
    }
    if header.keypoint_count as usize != KEYPOINT_COUNT {
        return out;
    }
    let mut nan_in_featurized = 0usize;
    let mut infinite = 0usize;
    for (t, chunk) in bytes[HEADER_LEN..].chunks_exact(FRAME_BYTES).enumerate() {
        let kps = decode_frame(chunk);
        infinite += kps.iter().filter(|k| k.x.is_infinite() || k.y.is_infinite()).count();
        if state == Some(CoordinateState::Featurized) {
            nan_in_featurized += kps.iter().filter(|k| k.x.is_nan() || k.y.is_nan()).count();
        }
        if let Err(e) = PoseFrame::new(t, &kps) {
            out.push(e.to_string());
        }
    }
    if infinite > 0 {
        out.push(format!("{infinite} keypoint(s) with infinite coordinates"));
    }
    if nan_in_featurized > 0 {
        out.push(format!("{nan_in_featurized} missing keypoint(s) in a featurized clip"));
    }
    out
}

fn decode_frame(chunk: &[u8]) -> Vec<Keypoint2D> {
    chunk
        .chunks_exact(8)
        .map(|b| {
            let x = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            let y = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
            if x.is_nan() && y.is_nan() {
                Keypoint2D::MISSING
            } else {
                // a half-missing pair is kept as is so validation can flag it
                Keypoint2D::new(x as f64, y as f64)
            }
        })
        .collect()
}

/// Decodes frames and state; errors on the first violation.
pub fn decode(bytes: &[u8]) -> Result<(CoordinateState, Vec<PoseFrame>)> {
    let h = read_header(bytes)?;
    if h.version != VERSION {
        return Err(Error::Format(format!("unsupported version {}", h.version)));
    }
    if h.keypoint_count as usize != KEYPOINT_COUNT {
        return Err(Error::KeypointCount(h.keypoint_count as usize));
    }
    let state = CoordinateState::from_code(h.state_code)
        .ok_or_else(|| Error::Format(format!("unknown coordinate_state {}", h.state_code)))?;
    let expected = HEADER_LEN + h.frame_count as usize * FRAME_BYTES;
    if bytes.len() != expected {
        return Err(Error::Format(format!("payload size mismatch: {} bytes, expected {expected}", bytes.len())));
    }
    let frames = bytes[HEADER_LEN..]
        .chunks_exact(FRAME_BYTES)
        .enumerate()
        .map(|(t, chunk)| PoseFrame::new(t, &decode_frame(chunk)))
        .collect::<Result<Vec<_>>>()?;
    Ok((state, frames))
}

pub fn sidecar_path(pkpf: &Path) -> PathBuf {
    pkpf.with_extension("json")
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let bytes = read_file(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Loads a `.pkpf` file and its sidecar.
pub fn read_clip(path: &Path) -> Result<Clip> {
    let sidecar = read_sidecar(&sidecar_path(path))?;
    let (state, frames) = decode(&read_file(path)?)?;
    Clip::new(sidecar.meta(), frames, state)
}

/// Writes `<dir>/<stem>.pkpf` and its sidecar atomically.
pub fn write_clip(dir: &Path, stem: &str, clip: &Clip, sidecar: &Sidecar) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.pkpf"));
    write_atomic(&path, &encode(clip))?;
    let mut json = serde_json::to_vec_pretty(sidecar)?;
    json.push(b'\n');
    write_atomic(&sidecar_path(&path), &json)?;
    Ok(path)
}
