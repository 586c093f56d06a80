//! Temporal gaps: detection, short-gap linear interpolation, sentinel fill
//! and gap-length statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Track, KEYPOINT_COUNT};
use crate::pose::{Clip, CoordinateState, Keypoint2D};

/// Missing-value sentinel used for featurized output.
pub const DEFAULT_SENTINEL: f64 = -10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gap {
    pub keypoint_index: usize,
    pub start_frame: usize,
    pub length: usize,
    /// Present frames exist on both sides.
    pub bounded: bool,
}

/// Maximal missing runs of a presence track, as `(start, length, bounded)`.
fn missing_runs(present: impl Iterator<Item = bool>) -> Vec<(usize, usize, bool)> {
    let mut runs = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut seen_present = false;
    let mut n = 0;
    for (t, p) in present.enumerate() {
        n = t + 1;
        match (p, run_start) {
            (false, None) => run_start = Some(t),
            (true, Some(s)) => {
                runs.push((s, t - s, seen_present));
                run_start = None;
            }
            _ => {}
        }
        seen_present |= p;
    }
    if let Some(s) = run_start {
        runs.push((s, n - s, false));
    }
    runs
}

/// Every maximal missing run of every keypoint, ordered by keypoint then start.
pub fn detect_gaps(clip: &Clip) -> Vec<Gap> {
    let frames = clip.frames();
    (0..KEYPOINT_COUNT)
        .flat_map(|k| {
            missing_runs(frames.iter().map(move |f| f.get(k).is_present()))
                .into_iter()
                .map(move |(start_frame, length, bounded)| Gap {
                    keypoint_index: k,
                    start_frame,
                    length,
                    bounded,
                })
        })
        .collect()
}

/// Gaps per missing-ness unit: one entry per body keypoint run and one per
/// hand/face group run (not one per group keypoint).
pub fn detect_track_gaps(clip: &Clip) -> Vec<Gap> {
    let frames = clip.frames();
    Track::all()
        .flat_map(|track| {
            let head = track.head();
            missing_runs(frames.iter().map(move |f| f.get(head).is_present()))
                .into_iter()
                .map(move |(start_frame, length, bounded)| Gap {
                    keypoint_index: head,
                    start_frame,
                    length,
                    bounded,
                })
        })
        .collect()
}

/// Linearly fills bounded gaps of at most `max_gap` frames. Hands and face
/// are filled as a unit, so the all-or-nothing group invariant holds after
/// the fill.
pub fn interpolate(mut clip: Clip, max_gap: usize) -> Result<Clip> {
    if max_gap < 1 {
        return Err(Error::InvalidMaxGap(max_gap));
    }
    clip.require(CoordinateState::RawCrop)?;
    let frames = clip.frames_mut();
    for track in Track::all() {
        let head = track.head();
        let runs = missing_runs(frames.iter().map(|f| f.get(head).is_present()));
        for (start, len, bounded) in runs {
            if !bounded || len > max_gap {
                continue;
            }
            let (before, after) = (start - 1, start + len);
            let span = (len + 1) as f64;
            for k in track.range() {
                let a = *frames[before].get(k);
                let b = *frames[after].get(k);
                for (step, f) in frames[start..after].iter_mut().enumerate() {
                    let t = (step + 1) as f64 / span;
                    f.keypoints_mut()[k] = Keypoint2D::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
                }
            }
        }
    }
    Ok(clip)
}

/// A present coordinate pair that equals the sentinel, which makes it
/// indistinguishable from a missing keypoint after featurization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentinelCollision {
    pub frame: usize,
    pub keypoint_index: usize,
}

/// Replaces every missing keypoint with `(sentinel, sentinel)` and marks the
/// clip featurized. Collisions are reported (and logged) but values are kept.
pub fn fill_sentinel(mut clip: Clip, sentinel: f64) -> Result<(Clip, Vec<SentinelCollision>)> {
    clip.require(CoordinateState::Normalized)?;
    let mut collisions = Vec::new();
    for (t, f) in clip.frames_mut().iter_mut().enumerate() {
        for (k, kp) in f.keypoints_mut().iter_mut().enumerate() {
            if kp.is_missing() {
                *kp = Keypoint2D::new(sentinel, sentinel);
            } else if kp.x == sentinel || kp.y == sentinel {
                collisions.push(SentinelCollision { frame: t, keypoint_index: k });
            }
        }
    }
    if !collisions.is_empty() {
        log::warn!(
            "clip {}: {} present coordinate(s) equal the sentinel {sentinel}",
            clip.id(),
            collisions.len()
        );
    }
    clip.advance(CoordinateState::Featurized)?;
    Ok((clip, collisions))
}

/// Histogram and cumulative distribution of bounded gap lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct GapStatistics {
    pub total: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub cdf: BTreeMap<usize, f64>,
    /// Set when the input contained no bounded gap at all.
    pub no_gaps: bool,
}

impl GapStatistics {
    pub fn from_lengths(lengths: impl IntoIterator<Item = usize>) -> Self {
        let mut histogram = BTreeMap::new();
        for l in lengths {
            *histogram.entry(l).or_insert(0usize) += 1;
        }
        let total: usize = histogram.values().sum();
        let mut cdf = BTreeMap::new();
        let mut running = 0;
        for (&len, &count) in &histogram {
            running += count;
            cdf.insert(len, running as f64 / total as f64);
        }
        GapStatistics { total, histogram, cdf, no_gaps: total == 0 }
    }

    /// Fraction of gaps with length `<= length`.
    pub fn fraction_at_most(&self, length: usize) -> f64 {
        self.cdf.range(..=length).next_back().map_or(0.0, |(_, &v)| v)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("length\tcount\tcdf\n");
        for (len, count) in &self.histogram {
            out.push_str(&format!("{len}\t{count}\t{}\n", self.cdf[len]));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("length\tcount\tcdf") => {}
            other => return Err(Error::Format(format!("unexpected TSV header {other:?}"))),
        }
        let mut histogram = BTreeMap::new();
        let mut cdf = BTreeMap::new();
        for line in lines.filter(|l| !l.is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Format(format!("bad TSV row {line:?}"));
            if cols.len() != 3 {
                return Err(bad());
            }
            let len: usize = cols[0].parse().map_err(|_| bad())?;
            histogram.insert(len, cols[1].parse().map_err(|_| bad())?);
            cdf.insert(len, cols[2].parse().map_err(|_| bad())?);
        }
        let total = histogram.values().sum();
        Ok(GapStatistics { total, histogram, cdf, no_gaps: total == 0 })
    }
}

/// Statistics over bounded gaps of every clip, counting hand/face runs once
/// per group.
pub fn gap_statistics<'a>(clips: impl IntoIterator<Item = &'a Clip>) -> Result<GapStatistics> {
    let mut any = false;
    let mut lengths = Vec::new();
    for clip in clips {
        any = true;
        lengths.extend(detect_track_gaps(clip).into_iter().filter(|g| g.bounded).map(|g| g.length));
    }
    if !any {
        return Err(Error::EmptyCollection);
    }
    let stats = GapStatistics::from_lengths(lengths);
    if stats.no_gaps {
        log::warn!("no bounded gaps found");
    }
    Ok(stats)
}
