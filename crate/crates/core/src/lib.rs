//! Preprocessing toolkit for 2D sign-language pose sequences.
//!
//! A clip moves through `interpolate → augment → normalize → fill_sentinel →
//! flatten`. Each stage is a pure function on [`Clip`]; [`pipeline`] runs the
//! chain over a dataset directory.

pub mod attention;
pub mod augmentation;
pub mod error;
pub mod exec;
pub mod formats;
pub mod layout;
pub mod missing;
pub mod normalization;
pub mod pipeline;
pub mod pose;
pub mod rng;
pub mod signing_space;
pub mod synth;

pub use error::{Error, Result};
pub use normalization::NormalizationMethod;
pub use pose::{Clip, ClipMeta, CoordinateState, Keypoint2D, PoseFrame};
