use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use poseprep::attention::{self, Matrix, TensorKind};
use poseprep::augmentation::{AugmentationParams, ProtocolPreset};
use poseprep::formats::{atnt, json_clip, pkpf, write_atomic};
use poseprep::missing::{gap_statistics, GapStatistics};
use poseprep::pipeline::{self, list_clips, run_pipeline, run_stage, validate_dataset, Counts, PipelineConfig, Stage};
use poseprep::signing_space::{clip_crop_space, to_crop_coordinates};
use poseprep::{Clip, Error, NormalizationMethod, Result};

#[derive(Parser)]
#[command(name = "poseprep", version, about = "Sign-language pose preprocessing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check PKPF files, sidecars and feature matrices.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    Normalize {
        #[arg(long)]
        method: NormalizationMethod,
        #[command(flatten)]
        io: StageIo,
    },
    /// Fill gaps of at most `max-gap` frames; 0 copies clips unchanged.
    Interpolate {
        #[arg(long)]
        max_gap: usize,
        #[command(flatten)]
        io: StageIo,
    },
    Augment {
        #[arg(long, conflicts_with = "params", required_unless_present = "params")]
        protocol: Option<ProtocolPreset>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: StageIo,
    },
    /// Dataset statistics.
    Stats {
        #[command(subcommand)]
        what: StatsCommand,
    },
    /// Attention and attribution analytics on ATNT tensors.
    Attn {
        #[command(subcommand)]
        op: AttnCommand,
    },
    /// Print the clip's crop signing space as JSON; optionally write the
    /// clip in crop coordinates.
    Crop {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 256.0)]
        out_size: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Convert a clip between the JSON debug format and PKPF, by extension.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct StageIo {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Gap length histogram and CDF.
    Gaps {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Subcommand)]
enum AttnCommand {
    /// Average over heads, for one layer or all layers.
    Heads {
        #[command(flatten)]
        io: AttnIo,
        #[arg(long)]
        layer: Option<usize>,
    },
    /// Average over layers, for one head or all heads.
    Layers {
        #[command(flatten)]
        io: AttnIo,
        #[arg(long)]
        head: Option<usize>,
    },
    /// Per-frame attention histogram of a cross-attention tensor.
    Hist {
        #[command(flatten)]
        io: AttnIo,
    },
    /// Spike spans in a histogram (or in the histogram of a cross tensor).
    Spikes {
        #[command(flatten)]
        io: AttnIo,
        #[arg(long, default_value_t = 2.0)]
        z_threshold: f64,
        #[arg(long, default_value_t = 1)]
        min_run: usize,
    },
    /// Zero attribution values below a threshold.
    Filter {
        #[command(flatten)]
        io: AttnIo,
        #[arg(long, default_value_t = 0.3)]
        min_value: f64,
    },
    /// Average attribution matrices from a directory of ATNT files.
    Avg {
        #[command(flatten)]
        io: AttnIo,
        #[arg(long)]
        min_bleu1: Option<f64>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
    },
}

#[derive(Args)]
struct AttnIo {
    #[arg(long)]
    input: PathBuf,
    /// `.tsv` writes text, anything else ATNT; stdout TSV when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn exit_for(counts: Counts) -> ExitCode {
    if counts.errors == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn read_any_clip(path: &Path) -> Result<Clip> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => json_clip::read(path),
        _ => pkpf::read_clip(path),
    }
}

fn stage(io: &StageIo, stage: Stage) -> Result<ExitCode> {
    let report = run_stage(&io.input, &io.output, &stage, io.workers)?;
    print_json(&report)?;
    Ok(exit_for(report.counts))
}

fn copy_dataset(io: &StageIo) -> Result<ExitCode> {
    fs::create_dir_all(&io.output).map_err(|e| Error::io(&io.output, e))?;
    for src in list_clips(&io.input)? {
        for p in [src.clone(), pkpf::sidecar_path(&src)] {
            let dst = io.output.join(p.file_name().unwrap_or_default());
            fs::copy(&p, &dst).map_err(|e| Error::io(&p, e))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn emit_matrix(m: &Matrix, kind: TensorKind, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) if p.extension().is_some_and(|e| e == "tsv") => write_atomic(p, m.to_tsv().as_bytes()),
        Some(p) => atnt::write(p, &atnt::AtntFile::from_matrix(kind, m)),
        None => {
            print!("{}", m.to_tsv());
            Ok(())
        }
    }
}

fn emit_vector(v: &[f64], kind: TensorKind, output: Option<&Path>) -> Result<()> {
    match output {
        Some(p) if p.extension().is_some_and(|e| e != "tsv") => atnt::write(p, &atnt::AtntFile::from_vector(kind, v)),
        _ => emit_matrix(&Matrix::new(v.len(), 1, v.to_vec())?, kind, output),
    }
}

fn load_histogram(path: &Path) -> Result<Vec<f64>> {
    let file = atnt::read(path)?;
    if file.dims.len() == 4 {
        return attention::frame_attention_histogram(&file.into_tensor()?);
    }
    Ok(file.into_matrix()?.data)
}

fn load_attribution(path: &Path) -> Result<(attention::AttributionMatrix, atnt::AtntSidecar)> {
    let sidecar = atnt::read_sidecar(path)?;
    let a = atnt::read(path)?.into_attribution(sidecar.tokens.clone().unwrap_or_default())?;
    Ok((a, sidecar))
}

fn attn(op: AttnCommand) -> Result<ExitCode> {
    match op {
        AttnCommand::Heads { io, layer } => {
            let t = atnt::read(&io.input)?.into_tensor()?;
            let m = match layer {
                Some(l) => attention::mean_over_heads(&t, l)?,
                None => attention::grand_mean(&t),
            };
            emit_matrix(&m, t.kind(), io.output.as_deref())?;
        }
        AttnCommand::Layers { io, head } => {
            let t = atnt::read(&io.input)?.into_tensor()?;
            let m = match head {
                Some(h) => attention::mean_over_layers(&t, h)?,
                None => attention::grand_mean(&t),
            };
            emit_matrix(&m, t.kind(), io.output.as_deref())?;
        }
        AttnCommand::Hist { io } => {
            let t = atnt::read(&io.input)?.into_tensor()?;
            emit_vector(&attention::frame_attention_histogram(&t)?, TensorKind::Cross, io.output.as_deref())?;
        }
        AttnCommand::Spikes { io, z_threshold, min_run } => {
            let spans = attention::detect_spikes(&load_histogram(&io.input)?, z_threshold, min_run)?;
            match io.output {
                Some(p) => write_atomic(&p, &serde_json::to_vec_pretty(&spans)?)?,
                None => print_json(&spans)?,
            }
        }
        AttnCommand::Filter { io, min_value } => {
            let (a, _) = load_attribution(&io.input)?;
            let f = attention::threshold_filter(&a, min_value);
            emit_matrix(&f.values, TensorKind::Attribution, io.output.as_deref())?;
        }
        AttnCommand::Avg { io, min_bleu1, rows, cols } => {
            let paths: Vec<PathBuf> = if io.input.is_dir() {
                let mut v: Vec<PathBuf> = fs::read_dir(&io.input)
                    .map_err(|e| Error::io(&io.input, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|e| e == "atnt"))
                    .collect();
                v.sort();
                v
            } else {
                vec![io.input.clone()]
            };
            let mut samples = Vec::new();
            for p in &paths {
                let (a, sc) = load_attribution(p)?;
                match (min_bleu1, sc.bleu1) {
                    (Some(min), Some(b)) if b < min => continue,
                    (Some(_), None) => {
                        log::warn!("{}: no bleu1 score, skipped", p.display());
                        continue;
                    }
                    _ => samples.push(a),
                }
            }
            let first = samples.first().ok_or(Error::EmptyInput)?;
            let r = rows.unwrap_or(first.values.rows);
            let c = cols.unwrap_or(first.values.cols);
            log::info!("averaging {} of {} samples to {r}x{c}", samples.len(), paths.len());
            let avg = attention::average_attributions(&samples, r, c)?;
            emit_matrix(&avg.values, TensorKind::Attribution, io.output.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, workers } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let manifest = run_pipeline(&cfg)?;
            let c = manifest.counts;
            eprintln!(
                "{} clips: {} ok, {} discarded, {} errors in {:.2}s -> {}",
                c.total,
                c.ok,
                c.discarded,
                c.errors,
                manifest.wall_time_s,
                cfg.output_dir.join(pipeline::MANIFEST_NAME).display()
            );
            Ok(exit_for(c))
        }
        Command::Validate { input } => {
            let report = validate_dataset(&input)?;
            print_json(&report)?;
            Ok(if report.is_valid() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Normalize { method, io } => stage(&io, Stage::Normalize(method)),
        Command::Interpolate { max_gap: 0, io } => copy_dataset(&io),
        Command::Interpolate { max_gap, io } => stage(&io, Stage::Interpolate(max_gap)),
        Command::Augment { protocol, params, seed, io } => {
            let params = match (protocol, params) {
                (Some(p), _) => p.params(),
                (None, Some(path)) => {
                    AugmentationParams::from_toml(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)?
                }
                (None, None) => return Err(Error::Config("either --protocol or --params is required".into())),
            };
            stage(&io, Stage::Augment { params, seed })
        }
        Command::Stats { what: StatsCommand::Gaps { input, format } } => {
            let clips = list_clips(&input)?.iter().map(|p| pkpf::read_clip(p)).collect::<Result<Vec<_>>>()?;
            let stats: GapStatistics = gap_statistics(&clips)?;
            match format {
                Format::Json => print_json(&stats)?,
                Format::Tsv => print!("{}", stats.to_tsv()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Attn { op } => attn(op),
        Command::Crop { input, out_size, output } => {
            let clip = read_any_clip(&input)?;
            let space = clip_crop_space(&clip)?;
            if let Some(out) = output {
                let frames = clip
                    .frames()
                    .iter()
                    .map(|f| to_crop_coordinates(&space, f, out_size))
                    .collect::<Result<Vec<_>>>()?;
                let cropped = Clip::new(clip.meta().clone(), frames, clip.state())?;
                json_clip::write(&out, &cropped)?;
            }
            let b = space.bbox();
            print_json(&json!({
                "id": clip.id(),
                "center": [space.center.0, space.center.1],
                "side_length": space.side_length,
                "multiplier": space.multiplier,
                "bbox": [b.min_x, b.min_y, b.max_x, b.max_y],
                "out_size": out_size,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Convert { input, output } => {
            let clip = read_any_clip(&input)?;
            match output.extension().and_then(|e| e.to_str()) {
                Some("json") => json_clip::write(&output, &clip)?,
                _ => {
                    let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
                    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("clip");
                    pkpf::write_clip(dir, stem, &clip, &pkpf::Sidecar::for_clip(&clip))?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
