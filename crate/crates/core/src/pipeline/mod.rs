//! Dataset-level runner: reads a directory of PKPF clips, runs
//! interpolate → augment → normalize → fill_sentinel on each, and writes the
//! results plus a `manifest.json`.

mod config;
mod validate;

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augmentation::{apply_protocol_with_plan, AugmentationParams, AugmentationPlan};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::formats::pkpf::{self, Sidecar};
use crate::formats::{encode_features, write_atomic};
use crate::layout::FEATURE_DIM;
use crate::missing::{fill_sentinel, interpolate, SentinelCollision};
use crate::normalization::{normalize, NormalizationMethod};
use crate::pose::{flatten_frame, Clip, CoordinateState};
use crate::rng::RNG_ALGORITHM;

pub use config::{AugmentationChoice, PipelineConfig};
pub use validate::{validate_dataset, FileReport, ValidationReport};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClipStatus {
    Ok,
    Discarded(String),
    Error(String),
}

impl ClipStatus {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::NoValidSigningSpace
            | Error::AllBodyMissing
            | Error::EmptyClipGeometry
            | Error::DegenerateBox
            | Error::ShouldersMissing
            | Error::DegenerateShoulders(_) => ClipStatus::Discarded(e.to_string()),
            _ => ClipStatus::Error(e.to_string()),
        }
    }
}

impl fmt::Display for ClipStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClipStatus::Ok => f.write_str("ok"),
            ClipStatus::Discarded(r) => write!(f, "discarded:{r}"),
            ClipStatus::Error(d) => write!(f, "error:{d}"),
        }
    }
}

impl Serialize for ClipStatus {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClipStatus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(match s.split_once(':') {
            _ if s == "ok" => ClipStatus::Ok,
            Some(("discarded", r)) => ClipStatus::Discarded(r.to_string()),
            Some(("error", d)) => ClipStatus::Error(d.to_string()),
            _ => return Err(serde::de::Error::custom(format!("unknown clip status {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub input: PathBuf,
    pub id: Option<String>,
    pub status: ClipStatus,
    pub frames: usize,
    pub output: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub sentinel_collisions: usize,
}

impl ClipEntry {
    fn failed(input: &Path, id: Option<String>, status: ClipStatus) -> Self {
        ClipEntry {
            input: input.to_path_buf(),
            id,
            status,
            frames: 0,
            output: None,
            features: None,
            sentinel_collisions: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub ok: usize,
    pub discarded: usize,
    pub errors: usize,
}

impl Counts {
    pub fn of(entries: &[ClipEntry]) -> Self {
        entries.iter().fold(Counts::default(), |mut c, e| {
            c.total += 1;
            match e.status {
                ClipStatus::Ok => c.ok += 1,
                ClipStatus::Discarded(_) => c.discarded += 1,
                ClipStatus::Error(_) => c.errors += 1,
            }
            c
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub rng_algorithm: String,
    pub config: PipelineConfig,
    pub augmentation_params: Option<AugmentationParams>,
    pub counts: Counts,
    pub wall_time_s: f64,
    pub clips: Vec<ClipEntry>,
}

/// Output basename for a clip id: anything outside `[A-Za-z0-9._-]`
/// becomes `_`.
pub fn output_stem(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("_{s}")
    } else {
        s
    }
}

/// `.pkpf` files under `input` (or `input` itself), sorted by path.
pub fn list_clips(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "pkpf"))
        .collect();
    paths.sort();
    Ok(paths)
}

struct Job {
    input: PathBuf,
    id: std::result::Result<String, ClipStatus>,
}

/// Reads every sidecar id up front so duplicate ids are rejected before any
/// worker writes.
fn plan_jobs(paths: Vec<PathBuf>) -> Vec<Job> {
    let mut seen = HashSet::new();
    paths
        .into_iter()
        .map(|input| {
            let id = match pkpf::read_sidecar(&pkpf::sidecar_path(&input)) {
                Ok(s) if !seen.insert(output_stem(&s.id)) => {
                    Err(ClipStatus::Error(format!("duplicate clip id {:?}", s.id)))
                }
                Ok(s) => Ok(s.id),
                Err(e) => Err(ClipStatus::Error(format!("sidecar: {e}"))),
            };
            Job { input, id }
        })
        .collect()
}

struct Processed {
    clip: Clip,
    sidecar: Sidecar,
    collisions: usize,
}

fn write_outputs(out_dir: &Path, input: &Path, p: Processed, emit_features: bool, sentinel: f64) -> Result<ClipEntry> {
    let stem = output_stem(p.clip.id());
    let mut sidecar = p.sidecar;
    sidecar.coordinate_state = Some(p.clip.state());
    let features = if emit_features {
        let rows: Vec<[f64; FEATURE_DIM]> = p.clip.frames().iter().map(|f| flatten_frame(f, sentinel)).collect();
        sidecar.feature_dims = Some([rows.len(), FEATURE_DIM]);
        let path = out_dir.join(format!("{stem}.f32"));
        write_atomic(&path, &encode_features(&rows))?;
        Some(path)
    } else {
        None
    };
    let output = pkpf::write_clip(out_dir, &stem, &p.clip, &sidecar)?;
    Ok(ClipEntry {
        input: input.to_path_buf(),
        id: Some(p.clip.id().to_string()),
        status: ClipStatus::Ok,
        frames: p.clip.len(),
        output: Some(output),
        features,
        sentinel_collisions: p.collisions,
    })
}

fn run_jobs<F>(jobs: &[Job], out_dir: &Path, mode: Parallelism, emit_features: bool, sentinel: f64, f: F) -> Vec<ClipEntry>
where
    F: Fn(Clip, Sidecar) -> Result<Processed> + Sync + Send,
{
    exec::map(jobs, mode, |job| {
        let id = match &job.id {
            Ok(id) => id.clone(),
            Err(status) => return ClipEntry::failed(&job.input, None, status.clone()),
        };
        let result = pkpf::read_sidecar(&pkpf::sidecar_path(&job.input)).and_then(|sidecar| {
            let clip = pkpf::read_clip(&job.input)?;
            let processed = f(clip, sidecar)?;
            write_outputs(out_dir, &job.input, processed, emit_features, sentinel)
        });
        match result {
            Ok(entry) => entry,
            Err(e) => {
                log::warn!("{}: {e}", job.input.display());
                ClipEntry::failed(&job.input, Some(id), ClipStatus::from_error(&e))
            }
        }
    })
}

fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub struct ProcessedClip {
    pub clip: Clip,
    pub plan: Option<AugmentationPlan>,
    pub collisions: Vec<SentinelCollision>,
}

/// The per-clip chain: interpolate, augment, normalize, fill the sentinel.
/// `params` is the resolved augmentation of `config`.
pub fn process_clip(clip: Clip, config: &PipelineConfig, params: Option<&AugmentationParams>) -> Result<ProcessedClip> {
    clip.require(CoordinateState::RawCrop)?;
    let mut clip = if config.max_gap > 0 { interpolate(clip, config.max_gap)? } else { clip };
    let mut plan = None;
    if let Some(p) = params {
        let (c, pl) = apply_protocol_with_plan(clip, p, config.seed)?;
        clip = c;
        plan = Some(pl);
    }
    let clip = normalize(clip, config.normalization)?;
    let (clip, collisions) = fill_sentinel(clip, config.sentinel)?;
    Ok(ProcessedClip { clip, plan, collisions })
}

/// Runs the full chain over `config.input_dir`. Per-clip failures are
/// recorded in the manifest; only configuration and output-directory
/// problems abort the run.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest> {
    let started = Instant::now();
    config.validate()?;
    let params = config.augmentation.params()?;
    prepare_output(&config.output_dir)?;
    let jobs = plan_jobs(list_clips(&config.input_dir)?);

    let clips = run_jobs(
        &jobs,
        &config.output_dir,
        Parallelism::from_workers(config.workers),
        config.emit_features,
        config.sentinel,
        |clip, mut sidecar| {
            let out = process_clip(clip, config, params.as_ref())?;
            if !out.collisions.is_empty() {
                log::warn!("{}: {} coordinates equal the sentinel", out.clip.id(), out.collisions.len());
            }
            if let Some(plan) = &out.plan {
                sidecar.augmentation = serde_json::to_value(plan).ok();
                sidecar.rng_algorithm = Some(RNG_ALGORITHM.to_string());
                sidecar.seed = Some(config.seed);
            }
            sidecar.normalization = Some(config.normalization.to_string());
            sidecar.sentinel = Some(config.sentinel);
            Ok(Processed { clip: out.clip, sidecar, collisions: out.collisions.len() })
        },
    );

    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        config: config.clone(),
        augmentation_params: params,
        counts: Counts::of(&clips),
        wall_time_s: started.elapsed().as_secs_f64(),
        clips,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&config.output_dir.join(MANIFEST_NAME), &json)?;
    Ok(manifest)
}

/// A single preprocessing step run on its own.
#[derive(Debug, Clone)]
pub enum Stage {
    Normalize(NormalizationMethod),
    Interpolate(usize),
    Augment { params: AugmentationParams, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub counts: Counts,
    pub clips: Vec<ClipEntry>,
}

/// Applies one stage to every clip in `input` (a `.pkpf` file or a
/// directory) and writes the results into the `output` directory.
pub fn run_stage(input: &Path, output: &Path, stage: &Stage, workers: usize) -> Result<StageReport> {
    if let Stage::Augment { params, .. } = stage {
        params.validate()?;
    }
    if let Stage::Interpolate(0) = stage {
        return Err(Error::InvalidMaxGap(0));
    }
    prepare_output(output)?;
    let jobs = plan_jobs(list_clips(input)?);
    let clips = run_jobs(&jobs, output, Parallelism::from_workers(workers), false, 0.0, |clip, mut sidecar| {
        let clip = match stage {
            Stage::Normalize(method) => {
                sidecar.normalization = Some(method.to_string());
                normalize(clip, *method)?
            }
            Stage::Interpolate(max_gap) => interpolate(clip, *max_gap)?,
            Stage::Augment { params, seed } => {
                let (c, plan) = apply_protocol_with_plan(clip, params, *seed)?;
                sidecar.augmentation = serde_json::to_value(&plan).ok();
                sidecar.rng_algorithm = Some(RNG_ALGORITHM.to_string());
                sidecar.seed = Some(*seed);
                c
            }
        };
        Ok(Processed { clip, sidecar, collisions: 0 })
    });
    Ok(StageReport { counts: Counts::of(&clips), clips })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_clip, SynthOptions};
    use rand::SeedableRng;

    fn write_inputs(dir: &Path, n: usize) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for i in 0..n {
            let clip = random_clip(&mut rng, &format!("clip/{i}"), &SynthOptions { frames: 12, ..Default::default() });
            pkpf::write_clip(dir, &format!("c{i}"), &clip, &Sidecar::for_clip(&clip)).unwrap();
        }
    }

    #[test]
    fn stems_are_safe() {
        assert_eq!(output_stem("a/b c"), "a_b_c");
        assert_eq!(output_stem(".."), "_..");
        assert_eq!(output_stem(""), "_");
    }

    #[test]
    fn status_round_trips() {
        for s in [ClipStatus::Ok, ClipStatus::Discarded("x".into()), ClipStatus::Error("a:b".into())] {
            let j = serde_json::to_string(&s).unwrap();
            assert_eq!(serde_json::from_str::<ClipStatus>(&j).unwrap(), s);
        }
    }

    #[test]
    fn pipeline_writes_outputs_and_manifest() {
        let input = tempfile::tempdir().unwrap();
        let output = tempfile::tempdir().unwrap();
        write_inputs(input.path(), 3);
        let mut cfg = PipelineConfig::new(input.path(), output.path());
        cfg.normalization = NormalizationMethod::SignSpace;
        cfg.max_gap = 2;
        cfg.augmentation = "light".parse().unwrap();
        cfg.emit_features = true;
        let m = run_pipeline(&cfg).unwrap();
        assert_eq!(m.counts, Counts { total: 3, ok: 3, discarded: 0, errors: 0 });
        assert!(output.path().join(MANIFEST_NAME).is_file());
        let e = &m.clips[0];
        let clip = pkpf::read_clip(e.output.as_ref().unwrap()).unwrap();
        assert_eq!(clip.state(), CoordinateState::Featurized);
        let sc = pkpf::read_sidecar(&pkpf::sidecar_path(e.output.as_ref().unwrap())).unwrap();
        assert_eq!(sc.feature_dims, Some([12, FEATURE_DIM]));
        assert!(sc.augmentation.is_some());
        assert!(validate_dataset(output.path()).unwrap().is_valid());
    }

    #[test]
    fn duplicates_and_bad_files_are_reported() {
        let input = tempfile::tempdir().unwrap();
        let output = tempfile::tempdir().unwrap();
        write_inputs(input.path(), 1);
        std::fs::copy(input.path().join("c0.pkpf"), input.path().join("d0.pkpf")).unwrap();
        std::fs::copy(input.path().join("c0.json"), input.path().join("d0.json")).unwrap();
        std::fs::write(input.path().join("e0.pkpf"), b"junk").unwrap();
        std::fs::write(input.path().join("e0.json"), br#"{"id":"e0","fps":25,"caption":null}"#).unwrap();
        let m = run_pipeline(&PipelineConfig::new(input.path(), output.path())).unwrap();
        assert_eq!(m.counts, Counts { total: 3, ok: 1, discarded: 0, errors: 2 });
        assert!(m.clips[1].status.to_string().contains("duplicate"));
    }

    #[test]
    fn missing_shoulders_are_discarded() {
        let input = tempfile::tempdir().unwrap();
        let output = tempfile::tempdir().unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut clip = random_clip(&mut rng, "noshoulders", &SynthOptions { frames: 4, ..Default::default() });
        for f in clip.frames_mut() {
            f.keypoints_mut()[crate::layout::LEFT_SHOULDER] = crate::Keypoint2D::MISSING;
        }
        pkpf::write_clip(input.path(), "a", &clip, &Sidecar::for_clip(&clip)).unwrap();
        let mut cfg = PipelineConfig::new(input.path(), output.path());
        cfg.normalization = NormalizationMethod::SignSpace;
        let m = run_pipeline(&cfg).unwrap();
        assert_eq!(m.counts.discarded, 1, "{:?}", m.clips);
    }

    #[test]
    fn stage_runs_single_step() {
        let input = tempfile::tempdir().unwrap();
        let output = tempfile::tempdir().unwrap();
        write_inputs(input.path(), 2);
        let r = run_stage(input.path(), output.path(), &Stage::Interpolate(3), 1).unwrap();
        assert_eq!(r.counts.ok, 2);
        let c = pkpf::read_clip(r.clips[0].output.as_ref().unwrap()).unwrap();
        assert_eq!(c.state(), CoordinateState::RawCrop);
        assert!(run_stage(input.path(), output.path(), &Stage::Interpolate(0), 1).is_err());
    }
}
