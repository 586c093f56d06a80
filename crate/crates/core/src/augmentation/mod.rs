//! Geometric keypoint augmentations and the heavy/medium/light protocols.
//!
//! Transforms are drawn once per clip and applied to every frame; only the
//! noise augmentation draws fresh values per frame and coordinate.

pub mod geometry;
pub mod ops;
pub mod protocol;

pub use geometry::{Affine2, Homography};
pub use ops::{
    add_noise, apply_affine, apply_homography, clip_body_box, distal_keypoints, perspective_clip,
    perspective_transform, rotate_arm, rotate_clip, rotation_transform, shear_clip, shear_transform,
    Joint, SidePair, Which,
};
pub use protocol::{
    apply_protocol, apply_protocol_with_plan, ArmDraw, ArmParams, AugmentationParams, AugmentationPlan,
    Interval, NoiseParams, PerspectiveDraw, PerspectiveParams, ProtocolPreset, RotateParams, ShearParams,
};
