//! JSON clip format used for debugging and test fixtures:
//! `{"id", "fps", "caption", "frames": [[[x, y] | null; 104]; N]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_atomic};
use crate::error::Result;
use crate::pose::{Clip, ClipMeta, CoordinateState, Keypoint2D, PoseFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonClip {
    pub id: String,
    pub fps: f64,
    pub caption: Option<String>,
    /// Absent means raw crop coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinate_state: Option<CoordinateState>,
    pub frames: Vec<Vec<Option<[f64; 2]>>>,
}

impl JsonClip {
    pub fn from_clip(clip: &Clip) -> Self {
        let m = clip.meta();
        JsonClip {
            id: m.id.clone(),
            fps: m.fps,
            caption: m.caption.clone(),
            coordinate_state: (clip.state() != CoordinateState::RawCrop).then_some(clip.state()),
            frames: clip
                .frames()
                .iter()
                .map(|f| f.keypoints().iter().map(|k| k.get().map(|(x, y)| [x, y])).collect())
                .collect(),
        }
    }

    pub fn into_clip(self) -> Result<Clip> {
        let frames = self
            .frames
            .iter()
            .enumerate()
            .map(|(t, kps)| {
                let kps: Vec<Keypoint2D> = kps
                    .iter()
                    .map(|k| k.map_or(Keypoint2D::MISSING, |[x, y]| Keypoint2D::new(x, y)))
                    .collect();
                PoseFrame::new(t, &kps)
            })
            .collect::<Result<Vec<_>>>()?;
        Clip::new(
            ClipMeta { id: self.id, fps: self.fps, caption: self.caption },
            frames,
            self.coordinate_state.unwrap_or(CoordinateState::RawCrop),
        )
    }
}

pub fn read(path: &Path) -> Result<Clip> {
    let clip: JsonClip = serde_json::from_slice(&read_file(path)?)?;
    clip.into_clip()
}

pub fn write(path: &Path, clip: &Clip) -> Result<()> {
    let mut bytes = serde_json::to_vec(&JsonClip::from_clip(clip))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}
