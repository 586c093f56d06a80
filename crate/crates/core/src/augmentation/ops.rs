//! Individual clip-level augmentations. All of them operate on raw crop
//! coordinates and leave missing keypoints untouched.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::geometry::{Affine2, Homography};
use crate::error::{Error, Result};
use crate::layout::{Side, BODY};
use crate::pose::{BBox, Clip, CoordinateState, Keypoint2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidePair {
    TopBottom,
    LeftRight,
}

/// Which side of the pair: top or left for `First`, bottom or right for `Second`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Shoulder,
    Elbow,
    Wrist,
}

impl Joint {
    pub const ALL: [Joint; 3] = [Joint::Shoulder, Joint::Elbow, Joint::Wrist];

    pub fn index(self, side: Side) -> usize {
        match self {
            Joint::Shoulder => side.shoulder(),
            Joint::Elbow => side.elbow(),
            Joint::Wrist => side.wrist(),
        }
    }
}

/// Body bbox over every frame of the clip.
pub fn clip_body_box(clip: &Clip) -> Result<BBox> {
    clip.frames()
        .iter()
        .filter_map(|f| BBox::of_points(&f.keypoints()[BODY]))
        .reduce(BBox::union)
        .ok_or(Error::AllBodyMissing)
}

/// Applies `map` to every present keypoint of every frame.
pub fn map_clip(clip: &mut Clip, map: impl Fn(Keypoint2D) -> Keypoint2D) {
    for f in clip.frames_mut() {
        for k in f.keypoints_mut().iter_mut().filter(|k| k.is_present()) {
            *k = map(*k);
        }
    }
}

pub fn rotation_transform(clip: &Clip, degrees: f64) -> Result<Affine2> {
    Ok(Affine2::rotation(clip_body_box(clip)?.center(), degrees))
}

pub fn shear_transform(clip: &Clip, angle_x: f64, angle_y: f64) -> Result<Affine2> {
    Ok(Affine2::shear(clip_body_box(clip)?.center(), angle_x, angle_y))
}

/// Homography that pulls the chosen side of the clip's body box inward by
/// `portion` of its length (half at each corner). Negative portions push outward.
pub fn perspective_transform(clip: &Clip, portion: f64, side_pair: SidePair, which: Which) -> Result<Homography> {
    if !(portion > -1.0 && portion < 1.0) {
        return Err(Error::InvalidPortion(portion));
    }
    let b = clip_body_box(clip)?;
    if !(b.width() > 0.0 && b.height() > 0.0) {
        return Err(Error::DegenerateBox);
    }
    let mut quad = [
        Keypoint2D::new(b.min_x, b.min_y),
        Keypoint2D::new(b.max_x, b.min_y),
        Keypoint2D::new(b.max_x, b.max_y),
        Keypoint2D::new(b.min_x, b.max_y),
    ];
    let dx = 0.5 * portion * b.width();
    let dy = 0.5 * portion * b.height();
    match (side_pair, which) {
        (SidePair::TopBottom, Which::First) => {
            quad[0].x += dx;
            quad[1].x -= dx;
        }
        (SidePair::TopBottom, Which::Second) => {
            quad[3].x += dx;
            quad[2].x -= dx;
        }
        (SidePair::LeftRight, Which::First) => {
            quad[0].y += dy;
            quad[3].y -= dy;
        }
        (SidePair::LeftRight, Which::Second) => {
            quad[1].y += dy;
            quad[2].y -= dy;
        }
    }
    Homography::box_to_quad(&b, quad).ok_or(Error::DegenerateBox)
}

pub fn apply_affine(mut clip: Clip, t: &Affine2) -> Clip {
    map_clip(&mut clip, |k| t.apply(k));
    clip
}

pub fn apply_homography(mut clip: Clip, h: &Homography) -> Clip {
    map_clip(&mut clip, |k| h.apply(k));
    clip
}

/// Rotates the whole clip about the center of its body bbox.
pub fn rotate_clip(clip: Clip, degrees: f64) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    if degrees == 0.0 {
        return Ok(clip);
    }
    let t = rotation_transform(&clip, degrees)?;
    Ok(apply_affine(clip, &t))
}

pub fn shear_clip(clip: Clip, angle_x: f64, angle_y: f64) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    if angle_x == 0.0 && angle_y == 0.0 {
        return Ok(clip);
    }
    let t = shear_transform(&clip, angle_x, angle_y)?;
    Ok(apply_affine(clip, &t))
}

pub fn perspective_clip(clip: Clip, portion: f64, side_pair: SidePair, which: Which) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    if portion == 0.0 {
        return Ok(clip);
    }
    let h = perspective_transform(&clip, portion, side_pair, which)?;
    Ok(apply_homography(clip, &h))
}

/// Keypoints carried along when the arm turns at `joint`.
pub fn distal_keypoints(side: Side, joint: Joint) -> Vec<usize> {
    let mut out = Vec::with_capacity(26);
    if joint == Joint::Shoulder {
        out.push(side.elbow());
    }
    if joint != Joint::Wrist {
        out.push(side.wrist());
    }
    out.extend(side.hand_points());
    out
}

/// Rotates the part of one arm below `joint` about that joint, frame by
/// frame. Frames where the joint is missing are left alone.
pub fn rotate_arm(mut clip: Clip, side: Side, joint: Joint, degrees: f64) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    if degrees == 0.0 {
        return Ok(clip);
    }
    let pivot_index = joint.index(side);
    let distal = distal_keypoints(side, joint);
    for f in clip.frames_mut() {
        let pivot = *f.get(pivot_index);
        if pivot.is_missing() {
            continue;
        }
        let t = Affine2::rotation(pivot, degrees);
        let kps = f.keypoints_mut();
        for &i in &distal {
            if kps[i].is_present() {
                kps[i] = t.apply(kps[i]);
            }
        }
    }
    Ok(clip)
}

/// Adds independent `N(0, stddev²)` noise to both coordinates of every present
/// keypoint. Draw order: frames, then keypoints, then x before y.
pub fn add_noise<R: Rng + ?Sized>(mut clip: Clip, stddev: f64, rng: &mut R) -> Result<Clip> {
    clip.require(CoordinateState::RawCrop)?;
    if !(stddev >= 0.0 && stddev.is_finite()) {
        return Err(Error::InvalidStddev(stddev));
    }
    if stddev == 0.0 {
        return Ok(clip);
    }
    let normal = Normal::new(0.0, stddev).map_err(|e| Error::InvalidParams(e.to_string()))?;
    for f in clip.frames_mut() {
        for k in f.keypoints_mut().iter_mut().filter(|k| k.is_present()) {
            k.x += normal.sample(rng);
            k.y += normal.sample(rng);
        }
    }
    Ok(clip)
}
