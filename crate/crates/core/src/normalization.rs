//! Unit-box (per clip / per frame) and signing-space normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Group, BODY};
use crate::pose::{BBox, Clip, CoordinateState, Keypoint2D, PoseFrame};
use crate::signing_space::{compute_signing_space, SigningSpace, NORMALIZATION_MULTIPLIER};

/// Border added around each hand and the face, as a fraction of the group's
/// own bbox extent per side.
pub const LOCAL_BORDER: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMethod {
    #[default]
    None,
    YaslClip,
    YaslFrame,
    #[serde(rename = "signspace")]
    SignSpace,
}

impl NormalizationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalizationMethod::None => "none",
            NormalizationMethod::YaslClip => "yasl-clip",
            NormalizationMethod::YaslFrame => "yasl-frame",
            NormalizationMethod::SignSpace => "signspace",
        }
    }
}

impl fmt::Display for NormalizationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormalizationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormalizationMethod::None),
            "yasl-clip" => Ok(NormalizationMethod::YaslClip),
            "yasl-frame" => Ok(NormalizationMethod::YaslFrame),
            "signspace" => Ok(NormalizationMethod::SignSpace),
            other => Err(Error::Config(format!("unknown normalization method {other:?}"))),
        }
    }
}

pub fn normalize(clip: Clip, method: NormalizationMethod) -> Result<Clip> {
    match method {
        NormalizationMethod::None => {
            clip.require(CoordinateState::RawCrop)?;
            finish(clip)
        }
        NormalizationMethod::YaslClip => normalize_yasl_clip(clip),
        NormalizationMethod::YaslFrame => normalize_yasl_frame(clip),
        NormalizationMethod::SignSpace => normalize_sign_space(clip),
    }
}

fn finish(mut clip: Clip) -> Result<Clip> {
    clip.advance(CoordinateState::Normalized)?;
    Ok(clip)
}

/// Per-axis map of `[lo, hi]` onto `[0, 1]`; a zero-extent axis goes to 0.5.
#[derive(Debug, Clone, Copy)]
struct AxisMap {
    offset: f64,
    scale: f64,
    degenerate: bool,
}

impl AxisMap {
    fn new(lo: f64, hi: f64) -> Self {
        let extent = hi - lo;
        if extent > 0.0 {
            AxisMap { offset: lo, scale: 1.0 / extent, degenerate: false }
        } else {
            AxisMap { offset: lo, scale: 0.0, degenerate: true }
        }
    }

    #[inline]
    fn apply(&self, v: f64) -> f64 {
        if self.degenerate {
            0.5
        } else {
            (v - self.offset) * self.scale
        }
    }
}

fn unit_box_frame(frame: &mut PoseFrame, b: &BBox) {
    let (mx, my) = (AxisMap::new(b.min_x, b.max_x), AxisMap::new(b.min_y, b.max_y));
    for k in frame.keypoints_mut().iter_mut().filter(|k| k.is_present()) {
        *k = Keypoint2D::new(mx.apply(k.x), my.apply(k.y));
    }
}

fn yasl_clip_frames(clip: &mut Clip) -> Result<()> {
    let b = clip
        .frames()
        .iter()
        .filter_map(|f| BBox::of_points(f.keypoints()))
        .reduce(BBox::union)
        .ok_or(Error::EmptyClipGeometry)?;
    for f in clip.frames_mut() {
        unit_box_frame(f, &b);
    }
    Ok(())
}

fn yasl_frame_frames(clip: &mut Clip) -> Result<()> {
    if clip.frames().iter().all(|f| f.present_count() == 0) {
        return Err(Error::EmptyClipGeometry);
    }
    for f in clip.frames_mut() {
        if let Some(b) = BBox::of_points(f.keypoints()) {
            unit_box_frame(f, &b);
        }
    }
    Ok(())
}

/// One unit box over every present keypoint of the clip; axes scale
/// independently.
pub fn normalize_yasl_clip(mut clip: Clip) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    yasl_clip_frames(&mut clip)?;
    finish(clip)
}

/// Unit box computed per frame. Frames with no present keypoint stay all-missing.
pub fn normalize_yasl_frame(mut clip: Clip) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    yasl_frame_frames(&mut clip)?;
    finish(clip)
}

/// Uniform fit of a group's bbox, grown by [`LOCAL_BORDER`] per side, into
/// `[-1, 1]²`. The longer expanded side spans the full range and the shorter
/// one is centered.
#[derive(Debug, Clone, Copy)]
struct LocalFit {
    center: Keypoint2D,
    scale: f64,
}

impl LocalFit {
    fn of(points: &[Keypoint2D]) -> Option<Self> {
        let b = BBox::of_points(points.iter())?;
        let (w, h) = (b.width(), b.height());
        let expanded = BBox {
            min_x: b.min_x - LOCAL_BORDER * w,
            max_x: b.max_x + LOCAL_BORDER * w,
            min_y: b.min_y - LOCAL_BORDER * h,
            max_y: b.max_y + LOCAL_BORDER * h,
        };
        let longest = expanded.width().max(expanded.height());
        Some(LocalFit {
            center: expanded.center(),
            scale: if longest > 0.0 { 2.0 / longest } else { 0.0 },
        })
    }

    #[inline]
    fn apply(&self, k: &Keypoint2D) -> Keypoint2D {
        Keypoint2D::new((k.x - self.center.x) * self.scale, (k.y - self.center.y) * self.scale)
    }
}

fn local_normalize(points: &mut [Keypoint2D]) {
    let Some(fit) = LocalFit::of(points) else {
        return;
    };
    for k in points.iter_mut().filter(|k| k.is_present()) {
        *k = fit.apply(k);
    }
}

fn global_normalize(points: &mut [Keypoint2D], space: &SigningSpace) {
    let scale = 2.0 / space.side_length;
    let (cx, cy) = space.center;
    for k in points.iter_mut().filter(|k| k.is_present()) {
        *k = Keypoint2D::new((k.x - cx) * scale, (k.y - cy) * scale);
    }
}

/// Per-frame signing spaces, with shoulder-less frames reusing the most
/// recent valid space (or the first valid one for a leading run).
pub fn frame_spaces(clip: &Clip) -> Result<Vec<SigningSpace>> {
    let own: Vec<Option<SigningSpace>> = clip
        .frames()
        .iter()
        .map(|f| compute_signing_space(f, NORMALIZATION_MULTIPLIER).ok())
        .collect();
    let first = own.iter().flatten().next().copied().ok_or(Error::NoValidSigningSpace)?;
    let mut last = first;
    Ok(own
        .into_iter()
        .map(|s| {
            if let Some(s) = s {
                last = s;
            }
            last
        })
        .collect())
}

/// Body block mapped through the signing space (multiplier 3) to `[-1, 1]²`
/// centered at the origin. Each hand and the face are normalized locally.
pub fn normalize_sign_space(mut clip: Clip) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    let spaces = frame_spaces(&clip)?;
    for (f, space) in clip.frames_mut().iter_mut().zip(&spaces) {
        let kps = f.keypoints_mut();
        global_normalize(&mut kps[BODY], space);
        for g in Group::ALL {
            local_normalize(&mut kps[g.range()]);
        }
    }
    finish(clip)
}
