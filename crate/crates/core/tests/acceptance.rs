//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p poseprep-core --test acceptance`. Exits non-zero
//! if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use poseprep::attention::{self, AttentionTensor, TensorKind};
use poseprep::augmentation::{
    self, apply_protocol_with_plan, distal_keypoints, Joint, ProtocolPreset, SidePair, Which,
};
use poseprep::formats::pkpf::{self, Sidecar};
use poseprep::layout::{Group, Side, Track, KEYPOINT_COUNT, LEFT_HAND, LEFT_SHOULDER, RIGHT_SHOULDER};
use poseprep::missing::{self, fill_sentinel, GapStatistics};
use poseprep::normalization::{normalize_sign_space, normalize_yasl_clip, normalize_yasl_frame};
use poseprep::pipeline::{run_pipeline, AugmentationChoice, PipelineConfig};
use poseprep::pose::{flatten_frame, BBox};
use poseprep::synth::{random_clip, random_frame, SynthOptions};
use poseprep::{Clip, ClipMeta, CoordinateState, Keypoint2D, NormalizationMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn meta(id: &str) -> ClipMeta {
    ClipMeta { id: id.to_string(), fps: 25.0, caption: None }
}

fn map_points(clip: &Clip, f: impl Fn(Keypoint2D) -> Keypoint2D) -> Clip {
    let frames = clip
        .frames()
        .iter()
        .map(|fr| fr.keypoints().map(|k| if k.is_present() { f(k) } else { k }));
    Clip::from_keypoints(clip.meta().clone(), frames).unwrap()
}

fn with_id(clip: &Clip, id: &str) -> Clip {
    Clip::new(meta(id), clip.frames().to_vec(), clip.state()).unwrap()
}

fn max_abs_diff(a: &Clip, b: &Clip) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for (fa, fb) in a.frames().iter().zip(b.frames()) {
        for (i, (p, q)) in fa.keypoints().iter().zip(fb.keypoints()).enumerate() {
            if p.is_missing() != q.is_missing() {
                return Err(format!("frame {} keypoint {i}: missingness differs", fa.frame_index()));
            }
            if p.is_present() {
                worst = worst.max((p.x - q.x).abs()).max((p.y - q.y).abs());
            }
        }
    }
    Ok(worst)
}

fn normalization_invariance() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let clip = random_clip(&mut rng, &format!("inv-{i}"), &SynthOptions { frames: 30, ..Default::default() });
        let s = rng.random_range(0.1..=10.0);
        let (tx, ty) = (rng.random_range(-1e4..=1e4), rng.random_range(-1e4..=1e4));
        let moved = map_points(&clip, |k| Keypoint2D::new(k.x * s + tx, k.y * s + ty));
        let a = normalize_sign_space(clip).map_err(|e| e.to_string())?;
        let b = normalize_sign_space(moved).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(&a, &b)?);
    }
    let elapsed = started.elapsed();
    ensure(worst <= 1e-5, || format!("max deviation {worst:e} > 1e-5"))?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 clips, max deviation {worst:.2e}, {:.2}s", elapsed.as_secs_f64()))
}

fn extents<'a>(points: impl IntoIterator<Item = &'a Keypoint2D>) -> BBox {
    BBox::of_points(points).expect("present points")
}

fn unit_box_err(b: &BBox) -> f64 {
    [b.min_x, b.min_y, b.max_x - 1.0, b.max_y - 1.0].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn unit_box_postconditions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2b);
    let (mut worst_f, mut worst_c) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let clip = random_clip(&mut rng, &format!("box-{i}"), &SynthOptions { frames: 20, ..Default::default() });
        let f = normalize_yasl_frame(clip.clone()).map_err(|e| e.to_string())?;
        for fr in f.frames() {
            worst_f = worst_f.max(unit_box_err(&extents(fr.keypoints())));
        }
        let c = normalize_yasl_clip(clip).map_err(|e| e.to_string())?;
        worst_c = worst_c.max(unit_box_err(&extents(c.frames().iter().flat_map(|fr| fr.keypoints()))));
    }
    ensure(worst_f <= 1e-6 && worst_c <= 1e-6, || format!("extent error frame {worst_f:e}, clip {worst_c:e}"))?;
    Ok(format!("1000 clips, max extent error yasl-frame {worst_f:.1e}, yasl-clip {worst_c:.1e}"))
}

fn close(p: &Keypoint2D, x: f64, y: f64) -> bool {
    (p.x - x).abs() <= 1e-9 && (p.y - y).abs() <= 1e-9
}

/// Recovers the per-axis affine map `v -> (v - c) * s` from two samples.
fn fit_axis(v0: f64, o0: f64, v1: f64, o1: f64) -> (f64, f64) {
    let s = (o1 - o0) / (v1 - v0);
    (v0 - o0 / s, s)
}

fn sign_space_examples() -> Check {
    let mut body = [Keypoint2D::MISSING; KEYPOINT_COUNT];
    body[LEFT_SHOULDER] = Keypoint2D::new(120.0, 100.0);
    body[RIGHT_SHOULDER] = Keypoint2D::new(160.0, 100.0);
    body[0] = Keypoint2D::new(140.0, 100.0);
    body[1] = Keypoint2D::new(200.0, 160.0);
    body[2] = Keypoint2D::new(80.0, 40.0);
    // square hand bbox [0,10]^2 on the left hand, wide [0,20]x[0,10] on the face
    let hand = LEFT_HAND.start;
    body[LEFT_HAND].fill(Keypoint2D::new(5.0, 5.0));
    body[hand + 1] = Keypoint2D::new(0.0, 0.0);
    body[hand + 2] = Keypoint2D::new(10.0, 10.0);
    let face = Group::Face.range();
    body[face.clone()].fill(Keypoint2D::new(10.0, 5.0));
    body[face.start + 1] = Keypoint2D::new(0.0, 0.0);
    body[face.start + 2] = Keypoint2D::new(20.0, 10.0);

    let out = normalize_sign_space(Clip::from_keypoints(meta("example"), [body]).unwrap()).map_err(|e| e.to_string())?;
    let f = &out.frames()[0];
    ensure(close(f.get(0), 0.0, 0.0), || format!("center -> {:?}", f.get(0)))?;
    ensure(close(f.get(1), 1.0, 1.0), || format!("(200,160) -> {:?}", f.get(1)))?;
    ensure(close(f.get(2), -1.0, -1.0), || format!("(80,40) -> {:?}", f.get(2)))?;

    ensure(close(f.get(hand), 0.0, 0.0), || format!("hand (5,5) -> {:?}", f.get(hand)))?;
    let (p0, p1) = (f.get(hand + 1), f.get(hand + 2));
    let (cx, sx) = fit_axis(0.0, p0.x, 10.0, p1.x);
    let (cy, sy) = fit_axis(0.0, p0.y, 10.0, p1.y);
    let corner = Keypoint2D::new((11.0 - cx) * sx, (11.0 - cy) * sy);
    ensure(close(&corner, 1.0, 1.0), || format!("hand (11,11) -> {corner:?}"))?;

    let (q0, q1) = (f.get(face.start + 1), f.get(face.start + 2));
    let (fcx, fsx) = fit_axis(0.0, q0.x, 20.0, q1.x);
    let (fcy, fsy) = fit_axis(0.0, q0.y, 10.0, q1.y);
    let wide = Keypoint2D::new((22.0 - fcx) * fsx, (11.0 - fcy) * fsy);
    ensure(close(&wide, 1.0, 0.5), || format!("wide (22,11) -> {wide:?}"))?;
    ensure(close(f.get(face.start), 0.0, 0.0), || format!("wide center -> {:?}", f.get(face.start)))?;
    Ok("body, square-hand and wide-group examples exact to 1e-9".into())
}

/// Every keypoint moves linearly in time, so linear interpolation is exact.
fn affine_track_clip(rng: &mut ChaCha8Rng, frames: usize) -> Clip {
    let base = random_frame(rng, 0, 0.0);
    let vel: Vec<(f64, f64)> = (0..KEYPOINT_COUNT).map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))).collect();
    let frames = (0..frames).map(|t| {
        let mut k = *base.keypoints();
        for (p, v) in k.iter_mut().zip(&vel) {
            p.x += v.0 * t as f64;
            p.y += v.1 * t as f64;
        }
        k
    });
    Clip::from_keypoints(meta("affine"), frames).unwrap()
}

fn blank(clip: &Clip, track: Track, start: usize, len: usize) -> Clip {
    let frames = clip.frames().iter().map(|f| {
        let mut k = *f.keypoints();
        if (start..start + len).contains(&f.frame_index()) {
            k[track.range()].fill(Keypoint2D::MISSING);
        }
        k
    });
    Clip::from_keypoints(clip.meta().clone(), frames).unwrap()
}

fn interpolation_oracle() -> Check {
    const T: usize = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(0x3c);
    let truth = affine_track_clip(&mut rng, T);
    let (mut cases, mut worst) = (0usize, 0.0f64);
    for max_gap in [2usize, 3] {
        for len in 1..=6usize {
            for track in Track::all() {
                let start = rng.random_range(1..T - len);
                let placements = [(start, true), (0, false), (T - len, false)];
                for (s, bounded) in placements {
                    let holed = blank(&truth, track, s, len);
                    let out = missing::interpolate(holed, max_gap).map_err(|e| e.to_string())?;
                    let expect_filled = bounded && len <= max_gap;
                    for (t, (f, g)) in out.frames().iter().zip(truth.frames()).enumerate() {
                        let in_gap = (s..s + len).contains(&t);
                        for k in 0..KEYPOINT_COUNT {
                            let (p, q) = (f.get(k), g.get(k));
                            let planted = in_gap && track.range().contains(&k);
                            if planted && !expect_filled {
                                ensure(p.is_missing(), || {
                                    format!("max_gap {max_gap}, len {len}, bounded {bounded}: frame {t} kp {k} was filled")
                                })?;
                                continue;
                            }
                            ensure(p.is_present(), || format!("max_gap {max_gap}, len {len}: frame {t} kp {k} missing"))?;
                            let err = (p.x - q.x).abs().max((p.y - q.y).abs());
                            if !planted {
                                ensure(err == 0.0, || format!("untouched kp {k} frame {t} changed"))?;
                            }
                            worst = worst.max(err);
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    ensure(worst < 1e-6, || format!("max recovery error {worst:e}"))?;
    Ok(format!("{cases} planted gaps, max recovery error {worst:.1e}"))
}

fn sentinel_contract() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4d);
    let mut filled = 0usize;
    for i in 0..200 {
        let opts = SynthOptions { frames: 40, gap_rate: 0.05, body_dropout: 0.05, ..Default::default() };
        let clip = random_clip(&mut rng, &format!("s-{i}"), &opts);
        let norm = normalize_sign_space(clip).map_err(|e| e.to_string())?;
        let (out, collisions) = fill_sentinel(norm.clone(), -10.0).map_err(|e| e.to_string())?;
        ensure(out.state() == CoordinateState::Featurized, || "state not Featurized".into())?;
        ensure(collisions.is_empty(), || format!("{} collisions", collisions.len()))?;
        for (f, g) in out.frames().iter().zip(norm.frames()) {
            let flat = flatten_frame(f, -10.0);
            ensure(flat.iter().all(|v| !v.is_nan()), || "NaN left after fill".into())?;
            for (k, (p, q)) in f.keypoints().iter().zip(g.keypoints()).enumerate() {
                if q.is_missing() {
                    ensure(p.x == -10.0 && p.y == -10.0, || format!("kp {k} filled with {p:?}"))?;
                    filled += 1;
                } else {
                    ensure(p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits(), || format!("kp {k} changed"))?;
                }
            }
        }
    }
    ensure(filled > 0, || "no missing keypoints were generated".into())?;
    Ok(format!("{filled} filled keypoints equal -10 exactly, no markers remain"))
}

fn pairwise_error(a: &[Keypoint2D], b: &[Keypoint2D], idx: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for (n, &i) in idx.iter().enumerate() {
        for &j in &idx[n + 1..] {
            worst = worst.max((a[i].distance(&a[j]) - b[i].distance(&b[j])).abs());
        }
    }
    worst
}

fn augmentation_rigidity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e);
    let all: Vec<usize> = (0..KEYPOINT_COUNT).collect();
    let (mut rot, mut arm, mut shear, mut persp) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let opts = SynthOptions { frames: 8, gap_rate: 0.0, ..Default::default() };
        let clip = random_clip(&mut rng, &format!("r-{i}"), &opts);

        let out = augmentation::rotate_clip(clip.clone(), rng.random_range(-180.0..180.0)).map_err(|e| e.to_string())?;
        for (f, g) in out.frames().iter().zip(clip.frames()) {
            rot = rot.max(pairwise_error(f.keypoints(), g.keypoints(), &all));
        }

        let side = if rng.random_bool(0.5) { Side::Left } else { Side::Right };
        let joint = Joint::ALL[rng.random_range(0..3)];
        let out = augmentation::rotate_arm(clip.clone(), side, joint, rng.random_range(-90.0..90.0)).map_err(|e| e.to_string())?;
        let mut moved = distal_keypoints(side, joint);
        moved.push(joint.index(side));
        for (f, g) in out.frames().iter().zip(clip.frames()) {
            arm = arm.max(pairwise_error(f.keypoints(), g.keypoints(), &moved));
            for k in (0..KEYPOINT_COUNT).filter(|k| !moved.contains(k)) {
                ensure(f.get(k).same_as(g.get(k)), || format!("rotate_arm moved keypoint {k}"))?;
            }
        }

        let (ax, ay) = (rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0));
        let t = augmentation::shear_transform(&clip, ax, ay).map_err(|e| e.to_string())?;
        let inv = t.inverse().ok_or("shear not invertible")?;
        let out = augmentation::shear_clip(clip.clone(), ax, ay).map_err(|e| e.to_string())?;
        shear = shear.max(max_abs_diff(&map_points(&out, |k| inv.apply(k)), &clip)?);

        let portion = rng.random_range(0.0..0.3);
        let pair = if rng.random_bool(0.5) { SidePair::TopBottom } else { SidePair::LeftRight };
        let which = if rng.random_bool(0.5) { Which::First } else { Which::Second };
        let h = augmentation::perspective_transform(&clip, portion, pair, which).map_err(|e| e.to_string())?;
        let inv = h.inverse().ok_or("homography not invertible")?;
        let out = augmentation::perspective_clip(clip.clone(), portion, pair, which).map_err(|e| e.to_string())?;
        persp = persp.max(max_abs_diff(&map_points(&out, |k| inv.apply(k)), &clip)?);
    }
    ensure(rot <= 1e-6 && arm <= 1e-6, || format!("distance drift rotate {rot:e}, arm {arm:e}"))?;
    ensure(shear <= 1e-5 && persp <= 1e-5, || format!("round trip shear {shear:e}, perspective {persp:e}"))?;
    Ok(format!(
        "1000 clips; distance drift rotate {rot:.1e}, arm {arm:.1e}; round trip shear {shear:.1e}, perspective {persp:.1e}"
    ))
}

fn protocol_statistics() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f);
    let base = random_clip(&mut rng, "base", &SynthOptions { frames: 2, gap_rate: 0.0, ..Default::default() });
    let expected = [
        (ProtocolPreset::Heavy, [1.0, 0.75, 0.50, 0.75, 0.75]),
        (ProtocolPreset::Medium, [0.75, 0.56, 0.38, 0.56, 0.56]),
        (ProtocolPreset::Light, [0.50, 0.38, 0.25, 0.38, 0.38]),
    ];
    let mut summary = Vec::new();
    for (preset, probs) in expected {
        let params = preset.params();
        let n = 10_000;
        let mut hits = [0usize; 5];
        let mut arm_trials = 0usize;
        let mut extrema: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        let mut note = |name: &'static str, v: f64| {
            let e = extrema.entry(name).or_insert((f64::INFINITY, f64::NEG_INFINITY));
            *e = (e.0.min(v), e.1.max(v));
        };
        for i in 0..n {
            let clip = with_id(&base, &format!("{preset}-{i}"));
            let (_, plan) = apply_protocol_with_plan(clip, &params, 2024).map_err(|e| e.to_string())?;
            if let Some(a) = plan.rotate {
                hits[0] += 1;
                ensure(params.rotate.angle.contains(a), || format!("rotate {a} out of range"))?;
                note("rotate", a);
            }
            if let Some((ax, ay)) = plan.shear {
                hits[1] += 1;
                let ok = if ay == 0.0 { params.shear.angle_x.contains(ax) } else { params.shear.angle_y.contains(ay) };
                ensure(ok, || format!("shear ({ax},{ay}) out of range"))?;
                note("shear", if ay == 0.0 { ax } else { ay });
            }
            if let Some(p) = plan.perspective {
                hits[2] += 1;
                ensure(params.perspective.portion.contains(p.portion), || format!("portion {} out of range", p.portion))?;
                note("portion", p.portion);
            }
            arm_trials += plan.arm_trials;
            for d in &plan.arms {
                hits[3] += 1;
                ensure(params.arm_rotate.range(d.joint).contains(d.angle), || format!("arm {d:?} out of range"))?;
                note("arm", d.angle);
            }
            if plan.noise.is_some() {
                hits[4] += 1;
            }
        }
        let freq = [
            hits[0] as f64 / n as f64,
            hits[1] as f64 / n as f64,
            hits[2] as f64 / n as f64,
            hits[3] as f64 / arm_trials as f64,
            hits[4] as f64 / n as f64,
        ];
        for (name, (f, p)) in ["rotate", "shear", "perspective", "arm", "noise"].iter().zip(freq.iter().zip(probs)) {
            ensure((f - p).abs() <= 0.02, || format!("{preset} {name}: {f:.4} vs {p}"))?;
        }
        let fmt: Vec<String> = freq.iter().map(|f| format!("{f:.3}")).collect();
        let ext: Vec<String> = extrema.iter().map(|(k, (lo, hi))| format!("{k} [{lo:.2},{hi:.2}]")).collect();
        summary.push(format!("{preset} {} ({})", fmt.join("/"), ext.join(" ")));
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{}; {:.1}s", summary.join("; "), elapsed.as_secs_f64()))
}

fn noise_statistics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x70);
    let clip = random_clip(&mut rng, "noise", &SynthOptions { frames: 4808, gap_rate: 0.0, ..Default::default() });
    let out = augmentation::add_noise(clip.clone(), 1.5, &mut rng).map_err(|e| e.to_string())?;
    let d: Vec<f64> = out
        .frames()
        .iter()
        .zip(clip.frames())
        .flat_map(|(f, g)| f.keypoints().iter().zip(g.keypoints()).flat_map(|(p, q)| [p.x - q.x, p.y - q.y]))
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    ensure(d.len() >= 1_000_000, || format!("only {} coordinates", d.len()))?;
    ensure((sd - 1.5).abs() <= 0.03, || format!("stddev {sd}"))?;
    Ok(format!("{} coordinates, stddev {sd:.4}, mean {mean:.1e}", d.len()))
}

fn write_dataset(dir: &Path, clips: usize, frames: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..clips {
        let clip = random_clip(&mut rng, &format!("clip-{i:04}"), &SynthOptions { frames, ..Default::default() });
        pkpf::write_clip(dir, &format!("clip-{i:04}"), &clip, &Sidecar::for_clip(&clip)).unwrap();
    }
}

fn full_config(input: &Path, output: &Path, workers: usize) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(input, output);
    cfg.normalization = NormalizationMethod::SignSpace;
    cfg.max_gap = 2;
    cfg.augmentation = AugmentationChoice::Preset { preset: ProtocolPreset::Medium, final_only: false };
    cfg.seed = 77;
    cfg.workers = workers;
    cfg.emit_features = true;
    cfg
}

fn output_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pkpf" || x == "f32"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = root.path().join("in");
    std::fs::create_dir(&input).map_err(|e| e.to_string())?;
    write_dataset(&input, 40, 60, 0x81);
    let mut runs = Vec::new();
    for workers in [1usize, 0, 8] {
        let out = root.path().join(format!("out-{workers}"));
        let m = run_pipeline(&full_config(&input, &out, workers)).map_err(|e| e.to_string())?;
        ensure(m.counts.errors == 0, || format!("{} clip errors", m.counts.errors))?;
        runs.push(output_files(&out));
    }
    ensure(runs[0].len() == 80, || format!("{} output files", runs[0].len()))?;
    ensure(runs.iter().all(|r| *r == runs[0]), || "outputs differ between worker counts".into())?;
    Ok(format!("{} PKPF + .f32 files byte-identical for workers 1, max, 8", runs[0].len()))
}

/// Median/MAD z-scores, computed independently of the library.
fn oracle_z(h: &[f64]) -> Vec<f64> {
    let median = |v: &mut Vec<f64>| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
    };
    let med = median(&mut h.to_vec());
    let mad = median(&mut h.iter().map(|v| (v - med).abs()).collect());
    h.iter().map(|v| (v - med) / (1.4826 * mad)).collect()
}

fn random_softmax_tensor(rng: &mut ChaCha8Rng, dims: [usize; 4]) -> AttentionTensor {
    let [l, h, q, k] = dims;
    let mut data = Vec::with_capacity(l * h * q * k);
    for _ in 0..l * h * q {
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0f64).powi(4)).collect();
        let s: f64 = row.iter().sum();
        data.extend(row.iter().map(|v| (v / s) as f32));
    }
    AttentionTensor::new(TensorKind::Cross, dims, data).unwrap()
}

fn attention_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x92);
    let mut worst = 0.0f64;
    for dims in [[12, 12, 64, 256], [3, 5, 7, 11], [1, 1, 1, 4]] {
        let t = random_softmax_tensor(&mut rng, dims);
        let [l, h, q, k] = dims;
        let at = |li: usize, hi: usize, qi: usize, ki: usize| t.data()[((li * h + hi) * q + qi) * k + ki] as f64;
        for li in 0..l {
            let m = attention::mean_over_heads(&t, li).map_err(|e| e.to_string())?;
            for qi in 0..q {
                for ki in 0..k {
                    let mut s = 0.0;
                    for hi in 0..h {
                        s += at(li, hi, qi, ki);
                    }
                    worst = worst.max((m.get(qi, ki) - s / h as f64).abs());
                }
            }
        }
        for hi in 0..h {
            let m = attention::mean_over_layers(&t, hi).map_err(|e| e.to_string())?;
            for qi in 0..q {
                for ki in 0..k {
                    let mut s = 0.0;
                    for li in 0..l {
                        s += at(li, hi, qi, ki);
                    }
                    worst = worst.max((m.get(qi, ki) - s / l as f64).abs());
                }
            }
        }
        let hist = attention::frame_attention_histogram(&t).map_err(|e| e.to_string())?;
        for (ki, v) in hist.iter().enumerate() {
            let mut s = 0.0;
            for li in 0..l {
                for hi in 0..h {
                    for qi in 0..q {
                        s += at(li, hi, qi, ki);
                    }
                }
            }
            worst = worst.max((v - s / (l * h * q) as f64).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e}"))?;

    let (mut planted, mut recovered, mut false_spans) = (0usize, 0usize, 0usize);
    for _ in 0..1000 {
        let n = rng.random_range(60..300);
        let base = rng.random_range(0.001..0.05);
        let delta = 0.1 * base;
        let mut hist: Vec<f64> = (0..n).map(|_| base + rng.random_range(-delta..delta)).collect();
        let mut spans = Vec::new();
        let mut t = rng.random_range(1..10);
        while spans.len() < 3 {
            let len = rng.random_range(1..=4);
            if t + len + 1 >= n {
                break;
            }
            for v in &mut hist[t..t + len] {
                *v = base + delta * rng.random_range(6.0..20.0);
            }
            spans.push((t, t + len - 1));
            t += len + rng.random_range(2..40);
        }
        let z = oracle_z(&hist);
        let strong: Vec<_> = spans.iter().filter(|&&(a, b)| z[a..=b].iter().all(|&v| v >= 3.0)).copied().collect();
        let found = attention::detect_spikes(&hist, 3.0, 1).map_err(|e| e.to_string())?;
        planted += strong.len();
        recovered += strong.iter().filter(|s| found.iter().any(|f| (f.start_frame, f.end_frame) == **s)).count();
        false_spans += found.iter().filter(|f| !spans.contains(&(f.start_frame, f.end_frame))).count();
        let flat = attention::detect_spikes(&vec![base; n], 3.0, 1).map_err(|e| e.to_string())?;
        false_spans += flat.len();
    }
    ensure(planted > 2000, || format!("only {planted} planted spans reach z >= 3"))?;
    ensure(recovered == planted, || format!("recovered {recovered} of {planted} planted spans"))?;
    ensure(false_spans == 0, || format!("{false_spans} false spans"))?;
    Ok(format!("max deviation {worst:.1e} up to 12x12x64x256; {recovered}/{planted} spikes recovered, 0 false spans"))
}

fn gap_statistics() -> Check {
    let stats = GapStatistics::from_lengths([2, 2, 3, 5]);
    ensure(stats.cdf[&2] == 0.5 && stats.cdf[&3] == 0.75, || format!("cdf {:?}", stats.cdf))?;
    let tsv = GapStatistics::from_tsv(&stats.to_tsv()).map_err(|e| e.to_string())?;
    ensure(tsv == stats, || "TSV round trip differs".into())?;
    let json: GapStatistics = serde_json::from_str(&serde_json::to_string(&stats).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(json == stats, || "JSON round trip differs".into())?;
    Ok("cdf[2]=0.5, cdf[3]=0.75; TSV and JSON round trips exact".into())
}

fn throughput() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = root.path().join("in");
    std::fs::create_dir(&input).map_err(|e| e.to_string())?;
    write_dataset(&input, 1000, 300, 0xa3);
    let m = run_pipeline(&full_config(&input, &root.path().join("out"), 8)).map_err(|e| e.to_string())?;
    let frames: usize = m.clips.iter().map(|c| c.frames).sum();
    ensure(m.counts.ok == 1000, || format!("{} clips ok", m.counts.ok))?;
    let rate = frames as f64 / m.wall_time_s;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    ensure(rate >= 20_000.0, || format!("{rate:.0} frames/s over {frames} frames, {cores} cores available"))?;
    Ok(format!("{frames} frames in {:.2}s = {rate:.0} frames/s ({cores} cores available)", m.wall_time_s))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("normalization invariance", normalization_invariance),
        ("unit-box postconditions", unit_box_postconditions),
        ("signspace worked examples", sign_space_examples),
        ("interpolation oracle", interpolation_oracle),
        ("sentinel contract", sentinel_contract),
        ("augmentation rigidity", augmentation_rigidity),
        ("protocol statistics", protocol_statistics),
        ("noise statistics", noise_statistics),
        ("determinism", determinism),
        ("attention analytics oracle", attention_oracle),
        ("gap statistics", gap_statistics),
        ("throughput", throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
