//! Augmentation protocols: parameter sets, presets, and seeded per-clip
//! sampling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, Joint, SidePair, Which};
use crate::error::{Error, Result};
use crate::layout::Side;
use crate::pose::{Clip, CoordinateState};
use crate::rng::clip_rng;

/// Closed interval `[low, high]`, written as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { low: 0.0, high: 0.0 };

    pub const fn symmetric(half_width: f64) -> Self {
        Interval { low: -half_width, high: half_width }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.random_range(self.low..=self.high)
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.low.is_finite() && self.high.is_finite() && self.low <= self.high {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{what}: [{}, {}] is not a closed interval", self.low, self.high)))
        }
    }
}

impl From<[f64; 2]> for Interval {
    fn from([low, high]: [f64; 2]) -> Self {
        Interval { low, high }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.low, i.high]
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RotateParams {
    /// Degrees.
    pub angle: Interval,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ShearParams {
    pub angle_x: Interval,
    pub angle_y: Interval,
    pub prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PerspectiveParams {
    /// Fraction of the side length.
    pub portion: Interval,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmParams {
    pub shoulder: Interval,
    pub elbow: Interval,
    pub wrist: Interval,
    /// Probability for each (arm, joint) rotation, decided independently.
    pub prob: f64,
    /// Joints eligible for rotation.
    pub joints: Vec<Joint>,
}

impl Default for ArmParams {
    fn default() -> Self {
        ArmParams {
            shoulder: Interval::ZERO,
            elbow: Interval::ZERO,
            wrist: Interval::ZERO,
            prob: 0.0,
            joints: Joint::ALL.to_vec(),
        }
    }
}

impl ArmParams {
    pub fn range(&self, joint: Joint) -> Interval {
        match joint {
            Joint::Shoulder => self.shoulder,
            Joint::Elbow => self.elbow,
            Joint::Wrist => self.wrist,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseParams {
    /// Crop pixels.
    pub stddev: f64,
    pub prob: f64,
}

/// Ranges and application probabilities for the five augmentations. Missing
/// TOML sections disable the corresponding augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationParams {
    pub rotate: RotateParams,
    pub shear: ShearParams,
    pub perspective: PerspectiveParams,
    pub arm_rotate: ArmParams,
    pub noise: NoiseParams,
}

impl AugmentationParams {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("rotate.prob", self.rotate.prob),
            ("shear.prob", self.shear.prob),
            ("perspective.prob", self.perspective.prob),
            ("arm_rotate.prob", self.arm_rotate.prob),
            ("noise.prob", self.noise.prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} = {p} outside [0, 1]")));
            }
        }
        self.rotate.angle.check("rotate.angle")?;
        self.shear.angle_x.check("shear.angle_x")?;
        self.shear.angle_y.check("shear.angle_y")?;
        self.perspective.portion.check("perspective.portion")?;
        let p = self.perspective.portion;
        if p.low <= -1.0 || p.high >= 1.0 {
            return Err(Error::InvalidParams("perspective.portion must lie inside (-1, 1)".into()));
        }
        self.arm_rotate.shoulder.check("arm_rotate.shoulder")?;
        self.arm_rotate.elbow.check("arm_rotate.elbow")?;
        self.arm_rotate.wrist.check("arm_rotate.wrist")?;
        if !(self.noise.stddev >= 0.0 && self.noise.stddev.is_finite()) {
            return Err(Error::InvalidStddev(self.noise.stddev));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let params: AugmentationParams =
            toml::from_str(text).map_err(|e| Error::Config(format!("augmentation params: {e}")))?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("params serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolPreset {
    Heavy,
    Medium,
    Light,
}

impl ProtocolPreset {
    pub const ALL: [ProtocolPreset; 3] = [ProtocolPreset::Heavy, ProtocolPreset::Medium, ProtocolPreset::Light];

    /// All five augmentations with the published ranges and probabilities.
    pub fn params(self) -> AugmentationParams {
        // (rotate/shear angle, perspective portion, arm angle, probs: rotate, shear, perspective, arm, noise)
        let (angle, portion, arm, probs) = match self {
            ProtocolPreset::Heavy => (6.0, 0.15, 10.0, [1.0, 0.75, 0.50, 0.75, 0.75]),
            ProtocolPreset::Medium => (4.5, 0.11, 7.5, [0.75, 0.56, 0.38, 0.56, 0.56]),
            ProtocolPreset::Light => (3.0, 0.08, 5.0, [0.50, 0.38, 0.25, 0.38, 0.38]),
        };
        AugmentationParams {
            rotate: RotateParams { angle: Interval::symmetric(angle), prob: probs[0] },
            shear: ShearParams {
                angle_x: Interval::symmetric(angle),
                angle_y: Interval::symmetric(angle),
                prob: probs[1],
            },
            perspective: PerspectiveParams { portion: Interval::symmetric(portion), prob: probs[2] },
            arm_rotate: ArmParams {
                shoulder: Interval::symmetric(arm),
                elbow: Interval::symmetric(arm),
                wrist: Interval::symmetric(arm),
                prob: probs[3],
                joints: Joint::ALL.to_vec(),
            },
            noise: NoiseParams { stddev: 1.5, prob: probs[4] },
        }
    }

    /// The reduced protocol that keeps only shear, elbow rotation and noise.
    pub fn final_params(self) -> AugmentationParams {
        let mut p = self.params();
        p.rotate.prob = 0.0;
        p.perspective.prob = 0.0;
        p.arm_rotate.joints = vec![Joint::Elbow];
        p
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolPreset::Heavy => "heavy",
            ProtocolPreset::Medium => "medium",
            ProtocolPreset::Light => "light",
        }
    }
}

impl FromStr for ProtocolPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heavy" => Ok(ProtocolPreset::Heavy),
            "medium" => Ok(ProtocolPreset::Medium),
            "light" => Ok(ProtocolPreset::Light),
            other => Err(Error::Config(format!("unknown augmentation protocol {other:?}"))),
        }
    }
}

impl fmt::Display for ProtocolPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerspectiveDraw {
    pub portion: f64,
    pub side_pair: SidePair,
    pub which: Which,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmDraw {
    pub side: Side,
    pub joint: Joint,
    pub angle: f64,
}

/// Per-clip transform parameters, drawn once and shared by every frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AugmentationPlan {
    pub rotate: Option<f64>,
    /// `(angle_x, angle_y)`, exactly one of them drawn.
    pub shear: Option<(f64, f64)>,
    pub perspective: Option<PerspectiveDraw>,
    pub arms: Vec<ArmDraw>,
    /// Number of (arm, joint) decisions taken, applied or not.
    pub arm_trials: usize,
    pub noise: Option<f64>,
}

impl AugmentationPlan {
    /// Draws the plan in a fixed order: rotate, shear, perspective, arms
    /// (left then right; shoulder, elbow, wrist), noise.
    pub fn sample<R: Rng + ?Sized>(params: &AugmentationParams, rng: &mut R) -> Self {
        let mut plan = AugmentationPlan::default();
        if rng.random_bool(params.rotate.prob) {
            plan.rotate = Some(params.rotate.angle.sample(rng));
        }
        if rng.random_bool(params.shear.prob) {
            plan.shear = Some(if rng.random_bool(0.5) {
                (params.shear.angle_x.sample(rng), 0.0)
            } else {
                (0.0, params.shear.angle_y.sample(rng))
            });
        }
        if rng.random_bool(params.perspective.prob) {
            let side_pair = if rng.random_bool(0.5) { SidePair::TopBottom } else { SidePair::LeftRight };
            let which = if rng.random_bool(0.5) { Which::First } else { Which::Second };
            let portion = params.perspective.portion.sample(rng);
            plan.perspective = Some(PerspectiveDraw { portion, side_pair, which });
        }
        let arm = &params.arm_rotate;
        for side in [Side::Left, Side::Right] {
            for joint in Joint::ALL {
                if !arm.joints.contains(&joint) {
                    continue;
                }
                plan.arm_trials += 1;
                if rng.random_bool(arm.prob) {
                    plan.arms.push(ArmDraw { side, joint, angle: arm.range(joint).sample(rng) });
                }
            }
        }
        if rng.random_bool(params.noise.prob) {
            plan.noise = Some(params.noise.stddev);
        }
        plan
    }

    pub fn is_empty(&self) -> bool {
        self.rotate.is_none()
            && self.shear.is_none()
            && self.perspective.is_none()
            && self.arms.is_empty()
            && self.noise.is_none()
    }

    /// Applies the plan. Noise draws continue from `rng`.
    pub fn apply<R: Rng + ?Sized>(&self, mut clip: Clip, rng: &mut R) -> Result<Clip> {
        clip.require(CoordinateState::RawCrop)?;
        if let Some(angle) = self.rotate {
            clip = ops::rotate_clip(clip, angle)?;
        }
        if let Some((ax, ay)) = self.shear {
            clip = ops::shear_clip(clip, ax, ay)?;
        }
        if let Some(p) = self.perspective {
            clip = ops::perspective_clip(clip, p.portion, p.side_pair, p.which)?;
        }
        for a in &self.arms {
            clip = ops::rotate_arm(clip, a.side, a.joint, a.angle)?;
        }
        if let Some(stddev) = self.noise {
            clip = ops::add_noise(clip, stddev, rng)?;
        }
        Ok(clip)
    }
}

/// Samples and applies a plan from the clip's own random stream, so the
/// result depends only on `(clip id, seed)`.
pub fn apply_protocol(clip: Clip, params: &AugmentationParams, seed: u64) -> Result<Clip> {
    apply_protocol_with_plan(clip, params, seed).map(|(c, _)| c)
}

pub fn apply_protocol_with_plan(
    clip: Clip,
    params: &AugmentationParams,
    seed: u64,
) -> Result<(Clip, AugmentationPlan)> {
    params.validate()?;
    clip.require(CoordinateState::RawCrop)?;
    let mut rng = clip_rng(clip.id(), seed);
    let plan = AugmentationPlan::sample(params, &mut rng);
    let clip = plan.apply(clip, &mut rng)?;
    Ok((clip, plan))
}
