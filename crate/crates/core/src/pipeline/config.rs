use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augmentation::{AugmentationParams, ProtocolPreset};
use crate::error::{Error, Result};
use crate::missing::DEFAULT_SENTINEL;
use crate::normalization::NormalizationMethod;

/// Which augmentation the pipeline applies.
///
/// Written in TOML as `"off"`, a preset name (`"heavy"`, `"medium"`,
/// `"light"`), a preset restricted to shear, elbow rotation and noise
/// (`"medium-final"` etc.), or a path to a params file ending in `.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum AugmentationChoice {
    #[default]
    Off,
    Preset {
        preset: ProtocolPreset,
        final_only: bool,
    },
    ParamsFile(PathBuf),
}

impl AugmentationChoice {
    pub fn params(&self) -> Result<Option<AugmentationParams>> {
        match self {
            AugmentationChoice::Off => Ok(None),
            AugmentationChoice::Preset { preset, final_only: false } => Ok(Some(preset.params())),
            AugmentationChoice::Preset { preset, final_only: true } => Ok(Some(preset.final_params())),
            AugmentationChoice::ParamsFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                AugmentationParams::from_toml(&text).map(Some)
            }
        }
    }

    /// Resolves a relative params path against `base`.
    pub fn relative_to(self, base: &Path) -> Self {
        match self {
            AugmentationChoice::ParamsFile(p) if p.is_relative() => AugmentationChoice::ParamsFile(base.join(p)),
            other => other,
        }
    }
}

impl FromStr for AugmentationChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "off" || s == "none" {
            return Ok(AugmentationChoice::Off);
        }
        if s.ends_with(".toml") {
            return Ok(AugmentationChoice::ParamsFile(PathBuf::from(s)));
        }
        let (name, final_only) = match s.strip_suffix("-final") {
            Some(n) => (n, true),
            None => (s, false),
        };
        Ok(AugmentationChoice::Preset { preset: name.parse()?, final_only })
    }
}

impl TryFrom<String> for AugmentationChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl fmt::Display for AugmentationChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentationChoice::Off => f.write_str("off"),
            AugmentationChoice::Preset { preset, final_only: false } => write!(f, "{preset}"),
            AugmentationChoice::Preset { preset, final_only: true } => write!(f, "{preset}-final"),
            AugmentationChoice::ParamsFile(p) => write!(f, "{}", p.display()),
        }
    }
}

impl From<AugmentationChoice> for String {
    fn from(c: AugmentationChoice) -> Self {
        c.to_string()
    }
}

fn default_sentinel() -> f64 {
    DEFAULT_SENTINEL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub normalization: NormalizationMethod,
    /// Longest gap to interpolate; 0 disables interpolation.
    #[serde(default)]
    pub max_gap: usize,
    #[serde(default)]
    pub augmentation: AugmentationChoice,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_sentinel")]
    pub sentinel: f64,
    /// 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
    /// Also write `<clip_id>.f32` frames × 208 feature matrices.
    #[serde(default)]
    pub emit_features: bool,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            normalization: NormalizationMethod::None,
            max_gap: 0,
            augmentation: AugmentationChoice::Off,
            seed: 0,
            sentinel: DEFAULT_SENTINEL,
            workers: 0,
            emit_features: false,
        }
    }

    /// Parses TOML. Relative paths resolve against `base` (the config
    /// file's directory).
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut c: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.input_dir.is_relative() {
            c.input_dir = base.join(&c.input_dir);
        }
        if c.output_dir.is_relative() {
            c.output_dir = base.join(&c.output_dir);
        }
        c.augmentation = c.augmentation.relative_to(base);
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.input_dir.is_dir() {
            return Err(Error::Config(format!("input_dir {} is not a directory", self.input_dir.display())));
        }
        if !self.sentinel.is_finite() {
            return Err(Error::Config("sentinel must be finite".into()));
        }
        self.augmentation.params()?;
        Ok(())
    }
}
