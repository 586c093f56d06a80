//! Fixed 104-keypoint layout: body, left hand, right hand, face.
//!
//! The body block follows the upper-body part of the common 33-point pose
//! topology with the legs removed (indices 0..=24, hips included). Hand
//! blocks use the 21-point hand topology, the face block is a 37-point subset.

use std::ops::Range;

pub const BODY_COUNT: usize = 25;
pub const HAND_COUNT: usize = 21;
pub const FACE_COUNT: usize = 37;
pub const KEYPOINT_COUNT: usize = BODY_COUNT + 2 * HAND_COUNT + FACE_COUNT;
/// Length of a flattened frame.
pub const FEATURE_DIM: usize = 2 * KEYPOINT_COUNT;

pub const BODY: Range<usize> = 0..BODY_COUNT;
pub const LEFT_HAND: Range<usize> = BODY_COUNT..BODY_COUNT + HAND_COUNT;
pub const RIGHT_HAND: Range<usize> = LEFT_HAND.end..LEFT_HAND.end + HAND_COUNT;
pub const FACE: Range<usize> = RIGHT_HAND.end..RIGHT_HAND.end + FACE_COUNT;

pub const LEFT_SHOULDER: usize = 11;
pub const RIGHT_SHOULDER: usize = 12;
pub const LEFT_ELBOW: usize = 13;
pub const RIGHT_ELBOW: usize = 14;
pub const LEFT_WRIST: usize = 15;
pub const RIGHT_WRIST: usize = 16;
/// Pinky, index and thumb tips as seen by the body model.
pub const LEFT_BODY_HAND: [usize; 3] = [17, 19, 21];
pub const RIGHT_BODY_HAND: [usize; 3] = [18, 20, 22];

/// Blocks whose keypoints are detected all-or-nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    LeftHand,
    RightHand,
    Face,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::LeftHand, Group::RightHand, Group::Face];

    pub fn range(self) -> Range<usize> {
        match self {
            Group::LeftHand => LEFT_HAND,
            Group::RightHand => RIGHT_HAND,
            Group::Face => FACE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::LeftHand => "left_hand",
            Group::RightHand => "right_hand",
            Group::Face => "face",
        }
    }

    pub fn of(index: usize) -> Option<Group> {
        Group::ALL.into_iter().find(|g| g.range().contains(&index))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn shoulder(self) -> usize {
        match self {
            Side::Left => LEFT_SHOULDER,
            Side::Right => RIGHT_SHOULDER,
        }
    }

    pub fn elbow(self) -> usize {
        match self {
            Side::Left => LEFT_ELBOW,
            Side::Right => RIGHT_ELBOW,
        }
    }

    pub fn wrist(self) -> usize {
        match self {
            Side::Left => LEFT_WRIST,
            Side::Right => RIGHT_WRIST,
        }
    }

    pub fn hand(self) -> Group {
        match self {
            Side::Left => Group::LeftHand,
            Side::Right => Group::RightHand,
        }
    }

    fn body_hand(self) -> [usize; 3] {
        match self {
            Side::Left => LEFT_BODY_HAND,
            Side::Right => RIGHT_BODY_HAND,
        }
    }

    /// Keypoints that move with the hand: the body model's finger tips plus
    /// the full hand block.
    pub fn hand_points(self) -> impl Iterator<Item = usize> {
        self.body_hand().into_iter().chain(self.hand().range())
    }
}

/// A unit of missing-ness: a single body keypoint or a whole group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    Body(usize),
    Group(Group),
}

impl Track {
    pub fn all() -> impl Iterator<Item = Track> {
        BODY.map(Track::Body)
            .chain(Group::ALL.into_iter().map(Track::Group))
    }

    pub fn range(self) -> Range<usize> {
        match self {
            Track::Body(i) => i..i + 1,
            Track::Group(g) => g.range(),
        }
    }

    /// Representative keypoint used to probe presence.
    pub fn head(self) -> usize {
        self.range().start
    }
}
