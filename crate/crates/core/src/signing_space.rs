//! Square signing-space box centered between the shoulders.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{LEFT_SHOULDER, RIGHT_SHOULDER};
use crate::pose::{BBox, Clip, Keypoint2D, PoseFrame};

/// Side length multiplier used when cropping the video.
pub const CROP_MULTIPLIER: f64 = 4.0;
/// Side length multiplier used by signing-space normalization.
pub const NORMALIZATION_MULTIPLIER: f64 = 3.0;
/// Shoulder distances below this are treated as degenerate.
pub const SHOULDER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigningSpace {
    pub center: (f64, f64),
    pub side_length: f64,
    pub multiplier: f64,
}

impl SigningSpace {
    pub fn bbox(&self) -> BBox {
        let h = 0.5 * self.side_length;
        BBox {
            min_x: self.center.0 - h,
            min_y: self.center.1 - h,
            max_x: self.center.0 + h,
            max_y: self.center.1 + h,
        }
    }
}

pub fn compute_signing_space(frame: &PoseFrame, multiplier: f64) -> Result<SigningSpace> {
    let (lx, ly) = frame.get(LEFT_SHOULDER).get().ok_or(Error::ShouldersMissing)?;
    let (rx, ry) = frame.get(RIGHT_SHOULDER).get().ok_or(Error::ShouldersMissing)?;
    let distance = (lx - rx).hypot(ly - ry);
    if distance.is_nan() || distance < SHOULDER_TOLERANCE {
        return Err(Error::DegenerateShoulders(distance));
    }
    let side_length = multiplier * distance;
    if side_length.is_nan() || side_length <= 0.0 {
        return Err(Error::InvalidSpace(side_length));
    }
    Ok(SigningSpace {
        center: (0.5 * (lx + rx), 0.5 * (ly + ry)),
        side_length,
        multiplier,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One crop space for the whole clip: component-wise median of the per-frame
/// centers and the largest per-frame side, so the box never shrinks below
/// any frame's signing space.
pub fn clip_crop_space(clip: &Clip) -> Result<SigningSpace> {
    let spaces: Vec<SigningSpace> = clip
        .frames()
        .iter()
        .filter_map(|f| compute_signing_space(f, CROP_MULTIPLIER).ok())
        .collect();
    if spaces.is_empty() {
        return Err(Error::NoValidFrame);
    }
    let mut xs: Vec<f64> = spaces.iter().map(|s| s.center.0).collect();
    let mut ys: Vec<f64> = spaces.iter().map(|s| s.center.1).collect();
    let side_length = spaces
        .iter()
        .map(|s| s.side_length)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SigningSpace {
        center: (median(&mut xs), median(&mut ys)),
        side_length,
        multiplier: CROP_MULTIPLIER,
    })
}

/// Maps the space's box onto `[0, out_size]²`. Points outside the box keep
/// their (out of range) coordinates.
pub fn to_crop_coordinates(space: &SigningSpace, frame: &PoseFrame, out_size: f64) -> Result<PoseFrame> {
    check_space(space)?;
    let b = space.bbox();
    let scale = out_size / space.side_length;
    Ok(map_frame(frame, |k| {
        Keypoint2D::new((k.x - b.min_x) * scale, (k.y - b.min_y) * scale)
    }))
}

/// Inverse of [`to_crop_coordinates`].
pub fn from_crop_coordinates(space: &SigningSpace, frame: &PoseFrame, out_size: f64) -> Result<PoseFrame> {
    check_space(space)?;
    let b = space.bbox();
    let scale = space.side_length / out_size;
    Ok(map_frame(frame, |k| {
        Keypoint2D::new(k.x * scale + b.min_x, k.y * scale + b.min_y)
    }))
}

fn check_space(space: &SigningSpace) -> Result<()> {
    if space.side_length > 0.0 && space.side_length.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpace(space.side_length))
    }
}

fn map_frame(frame: &PoseFrame, f: impl Fn(&Keypoint2D) -> Keypoint2D) -> PoseFrame {
    let mut out = frame.clone();
    for k in out.keypoints_mut().iter_mut().filter(|k| k.is_present()) {
        *k = f(k);
    }
    out
}
