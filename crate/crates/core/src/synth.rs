//! Synthetic signer clips for benchmarks, smoke tests and property tests.

use rand::Rng;

use crate::layout::{
    Group, Side, BODY, FACE, KEYPOINT_COUNT, LEFT_BODY_HAND, RIGHT_BODY_HAND,
};
use crate::pose::{Clip, ClipMeta, CoordinateState, Keypoint2D, PoseFrame};

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    pub frames: usize,
    /// Per-frame probability that a track starts a missing run.
    pub gap_rate: f64,
    /// Longest missing run that may be planted.
    pub max_gap: usize,
    /// Probability that an individual body keypoint is missing in a frame.
    pub body_dropout: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            frames: 60,
            gap_rate: 0.02,
            max_gap: 5,
            body_dropout: 0.0,
        }
    }
}

/// Generates a frame with a plausible upper-body layout around a random
/// shoulder line. `missing` is the chance for each body keypoint and each
/// group to be absent.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, frame_index: usize, missing: f64) -> PoseFrame {
    let center = Keypoint2D::new(rng.random_range(50.0..200.0), rng.random_range(50.0..200.0));
    let half = rng.random_range(10.0..40.0);
    let mut kps = skeleton(rng, center, half);
    for i in BODY {
        if rng.random_bool(missing) {
            kps[i] = Keypoint2D::MISSING;
        }
    }
    for g in Group::ALL {
        if rng.random_bool(missing) {
            kps[g.range()].fill(Keypoint2D::MISSING);
        }
    }
    PoseFrame::from_array_unchecked(frame_index, kps)
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, around: Keypoint2D, radius: f64) -> Keypoint2D {
    Keypoint2D::new(
        around.x + rng.random_range(-radius..radius),
        around.y + rng.random_range(-radius..radius),
    )
}

/// Rest pose in crop pixels, with per-keypoint jitter.
fn skeleton<R: Rng + ?Sized>(
    rng: &mut R,
    center: Keypoint2D,
    half: f64,
) -> [Keypoint2D; KEYPOINT_COUNT] {
    let mut kps = [Keypoint2D::MISSING; KEYPOINT_COUNT];
    let nose = Keypoint2D::new(center.x, center.y - 1.3 * half);
    for k in &mut kps[..11] {
        *k = jitter(rng, nose, 0.4 * half);
    }
    for (side, sign) in [(Side::Left, 1.0), (Side::Right, -1.0)] {
        let shoulder = Keypoint2D::new(center.x + sign * half, center.y);
        let elbow = jitter(rng, Keypoint2D::new(shoulder.x + sign * 0.3 * half, shoulder.y + 1.1 * half), 0.2 * half);
        let wrist = jitter(rng, Keypoint2D::new(center.x + sign * 0.4 * half, center.y + 0.6 * half), 0.3 * half);
        kps[side.shoulder()] = shoulder;
        kps[side.elbow()] = elbow;
        kps[side.wrist()] = wrist;
        let tips = if side == Side::Left { LEFT_BODY_HAND } else { RIGHT_BODY_HAND };
        for i in tips {
            kps[i] = jitter(rng, wrist, 0.25 * half);
        }
        for i in side.hand().range() {
            kps[i] = jitter(rng, wrist, 0.3 * half);
        }
    }
    kps[23] = jitter(rng, Keypoint2D::new(center.x + 0.6 * half, center.y + 2.2 * half), 0.1 * half);
    kps[24] = jitter(rng, Keypoint2D::new(center.x - 0.6 * half, center.y + 2.2 * half), 0.1 * half);
    for i in FACE {
        kps[i] = jitter(rng, nose, 0.5 * half);
    }
    kps
}

/// Generates a raw clip: one rest pose with smooth per-keypoint motion,
/// missing runs planted per track.
pub fn random_clip<R: Rng + ?Sized>(rng: &mut R, id: &str, opts: &SynthOptions) -> Clip {
    let center = Keypoint2D::new(rng.random_range(80.0..180.0), rng.random_range(80.0..180.0));
    let half = rng.random_range(15.0..40.0);
    let rest = skeleton(rng, center, half);
    let mut phase = [(0.0f64, 0.0f64, 0.0f64); KEYPOINT_COUNT];
    for p in phase.iter_mut() {
        *p = (
            rng.random_range(0.0..std::f64::consts::TAU),
            rng.random_range(0.02..0.3),
            rng.random_range(0.0..0.15 * half),
        );
    }
    let n = opts.frames.max(1);
    let mut frames: Vec<PoseFrame> = (0..n)
        .map(|t| {
            let mut kps = rest;
            for (k, &(ph, w, amp)) in kps.iter_mut().zip(&phase) {
                let a = ph + w * t as f64;
                k.x += amp * a.cos();
                k.y += amp * a.sin();
            }
            PoseFrame::from_array_unchecked(t, kps)
        })
        .collect();

    for track in crate::layout::Track::all() {
        let mut t = 0;
        while t < n {
            if rng.random_bool(opts.gap_rate) {
                let len = rng.random_range(1..=opts.max_gap.max(1));
                for f in frames.iter_mut().skip(t).take(len) {
                    f.keypoints_mut()[track.range()].fill(Keypoint2D::MISSING);
                }
                t += len + 1;
            } else {
                t += 1;
            }
        }
    }
    if opts.body_dropout > 0.0 {
        for f in &mut frames {
            for i in BODY {
                if rng.random_bool(opts.body_dropout) {
                    f.keypoints_mut()[i] = Keypoint2D::MISSING;
                }
            }
        }
    }
    Clip::new(
        ClipMeta {
            id: id.to_string(),
            fps: 25.0,
            caption: None,
        },
        frames,
        CoordinateState::RawCrop,
    )
    .expect("synthetic clip is valid")
}
