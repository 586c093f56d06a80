//! Frame and clip data model.
//!
//! In memory a missing keypoint is stored as NaN in both coordinates. The
//! numeric sentinel only appears once a clip is featurized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Group, BODY, FEATURE_DIM, KEYPOINT_COUNT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint2D {
    pub x: f64,
    pub y: f64,
}

impl Keypoint2D {
    pub const MISSING: Keypoint2D = Keypoint2D {
        x: f64::NAN,
        y: f64::NAN,
    };

    pub const fn new(x: f64, y: f64) -> Self {
        Keypoint2D { x, y }
    }

    pub fn is_missing(&self) -> bool {
        self.x.is_nan()
    }

    pub fn is_present(&self) -> bool {
        !self.is_missing()
    }

    pub fn get(&self) -> Option<(f64, f64)> {
        self.is_present().then_some((self.x, self.y))
    }

    pub fn distance(&self, other: &Keypoint2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bitwise comparison that treats two missing markers as equal.
    pub fn same_as(&self, other: &Keypoint2D) -> bool {
        (self.is_missing() && other.is_missing())
            || (self.x.to_bits() == other.x.to_bits() && self.y.to_bits() == other.y.to_bits())
    }
}

/// Axis-aligned box, inclusive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Keypoint2D>) -> Option<BBox> {
        points
            .into_iter()
            .filter(|p| p.is_present())
            .fold(None, |acc, p| {
                Some(match acc {
                    None => BBox {
                        min_x: p.x,
                        min_y: p.y,
                        max_x: p.x,
                        max_y: p.y,
                    },
                    Some(b) => b.extend(p.x, p.y),
                })
            })
    }

    fn extend(self, x: f64, y: f64) -> BBox {
        BBox {
            min_x: self.min_x.min(x),
            min_y: self.min_y.min(y),
            max_x: self.max_x.max(x),
            max_y: self.max_y.max(y),
        }
    }

    pub fn union(self, other: BBox) -> BBox {
        self.extend(other.min_x, other.min_y)
            .extend(other.max_x, other.max_y)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> Keypoint2D {
        Keypoint2D::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    frame_index: usize,
    keypoints: [Keypoint2D; KEYPOINT_COUNT],
}

impl PoseFrame {
    /// Builds a frame, checking the layout size and the missing-ness
    /// invariants (no half-missing keypoints, hands and face all-or-nothing).
    pub fn new(frame_index: usize, keypoints: &[Keypoint2D]) -> Result<Self> {
        let keypoints: [Keypoint2D; KEYPOINT_COUNT] = keypoints
            .try_into()
            .map_err(|_| Error::KeypointCount(keypoints.len()))?;
        let frame = PoseFrame {
            frame_index,
            keypoints,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub(crate) fn from_array_unchecked(
        frame_index: usize,
        keypoints: [Keypoint2D; KEYPOINT_COUNT],
    ) -> Self {
        PoseFrame {
            frame_index,
            keypoints,
        }
    }

    pub fn all_missing(frame_index: usize) -> Self {
        Self::from_array_unchecked(frame_index, [Keypoint2D::MISSING; KEYPOINT_COUNT])
    }

    pub fn validate(&self) -> Result<()> {
        for (index, k) in self.keypoints.iter().enumerate() {
            if k.x.is_nan() != k.y.is_nan() {
                return Err(Error::HalfMissing {
                    frame: self.frame_index,
                    index,
                });
            }
        }
        for g in Group::ALL {
            let block = &self.keypoints[g.range()];
            let missing = block.iter().filter(|k| k.is_missing()).count();
            if missing != 0 && missing != block.len() {
                return Err(Error::PartialGroup {
                    frame: self.frame_index,
                    group: g.name(),
                });
            }
        }
        Ok(())
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn keypoints(&self) -> &[Keypoint2D; KEYPOINT_COUNT] {
        &self.keypoints
    }

    pub(crate) fn keypoints_mut(&mut self) -> &mut [Keypoint2D; KEYPOINT_COUNT] {
        &mut self.keypoints
    }

    pub fn get(&self, index: usize) -> &Keypoint2D {
        &self.keypoints[index]
    }

    pub fn group_present(&self, group: Group) -> bool {
        self.keypoints[group.range().start].is_present()
    }

    pub fn present_count(&self) -> usize {
        self.keypoints.iter().filter(|k| k.is_present()).count()
    }

    /// Bitwise equality, missing markers compare equal.
    pub fn same_as(&self, other: &PoseFrame) -> bool {
        self.frame_index == other.frame_index
            && self
                .keypoints
                .iter()
                .zip(&other.keypoints)
                .all(|(a, b)| a.same_as(b))
    }
}

/// Interleaved `x, y` per keypoint in layout order; missing keypoints emit
/// `(sentinel, sentinel)`.
pub fn flatten_frame(frame: &PoseFrame, sentinel: f64) -> [f64; FEATURE_DIM] {
    let mut out = [0.0; FEATURE_DIM];
    for (pair, k) in out.chunks_exact_mut(2).zip(&frame.keypoints) {
        let (x, y) = k.get().unwrap_or((sentinel, sentinel));
        pair[0] = x;
        pair[1] = y;
    }
    out
}

/// Inverse of [`flatten_frame`]: a `(sentinel, sentinel)` pair becomes missing.
pub fn unflatten_frame(features: &[f64], sentinel: f64, frame_index: usize) -> Result<PoseFrame> {
    if features.len() != FEATURE_DIM {
        return Err(Error::KeypointCount(features.len() / 2));
    }
    let keypoints: Vec<Keypoint2D> = features
        .chunks_exact(2)
        .map(|p| {
            if p[0] == sentinel && p[1] == sentinel {
                Keypoint2D::MISSING
            } else {
                Keypoint2D::new(p[0], p[1])
            }
        })
        .collect();
    PoseFrame::new(frame_index, &keypoints)
}

/// Minimal box over the present body keypoints.
pub fn body_bounding_box(frame: &PoseFrame) -> Result<BBox> {
    BBox::of_points(&frame.keypoints[BODY]).ok_or(Error::AllBodyMissing)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateState {
    RawCrop,
    Normalized,
    Featurized,
}

impl CoordinateState {
    pub fn code(self) -> u8 {
        match self {
            CoordinateState::RawCrop => 0,
            CoordinateState::Normalized => 1,
            CoordinateState::Featurized => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CoordinateState::RawCrop),
            1 => Some(CoordinateState::Normalized),
            2 => Some(CoordinateState::Featurized),
            _ => None,
        }
    }
}

/// Clip metadata carried alongside the keypoint payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub id: String,
    pub fps: f64,
    pub caption: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    meta: ClipMeta,
    frames: Vec<PoseFrame>,
    state: CoordinateState,
}

impl Clip {
    pub fn new(meta: ClipMeta, frames: Vec<PoseFrame>, state: CoordinateState) -> Result<Self> {
        if !(meta.fps > 0.0 && meta.fps.is_finite()) {
            return Err(Error::InvalidFps(meta.fps));
        }
        if frames.is_empty() {
            return Err(Error::EmptyClip);
        }
        for (i, f) in frames.iter().enumerate() {
            if f.frame_index != i {
                return Err(Error::Format(format!(
                    "frame at position {i} has index {}",
                    f.frame_index
                )));
            }
        }
        Ok(Clip {
            meta,
            frames,
            state,
        })
    }

    /// Builds a raw clip from per-frame keypoint lists, numbering frames from 0.
    pub fn from_keypoints<K: AsRef<[Keypoint2D]>>(
        meta: ClipMeta,
        frames: impl IntoIterator<Item = K>,
    ) -> Result<Self> {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, k)| PoseFrame::new(i, k.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Clip::new(meta, frames, CoordinateState::RawCrop)
    }

    pub fn meta(&self) -> &ClipMeta {
        &self.meta
    }

    pub fn id(&self) -> &str {
        &self.meta.id
    }

    pub fn fps(&self) -> f64 {
        self.meta.fps
    }

    pub fn caption(&self) -> Option<&str> {
        self.meta.caption.as_deref()
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub(crate) fn frames_mut(&mut self) -> &mut [PoseFrame] {
        &mut self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn state(&self) -> CoordinateState {
        self.state
    }

    pub(crate) fn require(&self, expected: CoordinateState) -> Result<()> {
        if self.state == expected {
            Ok(())
        } else {
            Err(Error::WrongState {
                expected,
                actual: self.state,
            })
        }
    }

    /// Moves the state machine forward. Backward moves are rejected.
    pub(crate) fn advance(&mut self, next: CoordinateState) -> Result<()> {
        if next <= self.state {
            return Err(Error::WrongState {
                expected: next,
                actual: self.state,
            });
        }
        self.state = next;
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn set_state_unchecked(&mut self, state: CoordinateState) {
        self.state = state;
    }

    pub fn same_as(&self, other: &Clip) -> bool {
        self.meta == other.meta
            && self.state == other.state
            && self.frames.len() == other.frames.len()
            && self
                .frames
                .iter()
                .zip(&other.frames)
                .all(|(a, b)| a.same_as(b))
    }

    pub fn into_frames(self) -> Vec<PoseFrame> {
        self.frames
    }
}
