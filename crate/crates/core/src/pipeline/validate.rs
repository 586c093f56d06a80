use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::list_clips;
use crate::error::Result;
use crate::formats::pkpf::{self, Sidecar};
use crate::formats::read_file;
use crate::layout::FEATURE_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileReport {
    pub file: PathBuf,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub checked: usize,
    pub invalid: usize,
    pub files: Vec<FileReport>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.invalid == 0
    }
}

fn check_sidecar(pkpf_path: &Path, frames: Option<usize>, out: &mut Vec<String>) -> Option<Sidecar> {
    let path = pkpf::sidecar_path(pkpf_path);
    if !path.is_file() {
        out.push(format!("missing sidecar {}", path.display()));
        return None;
    }
    let sidecar = match pkpf::read_sidecar(&path) {
        Ok(s) => s,
        Err(e) => {
            out.push(format!("unreadable sidecar: {e}"));
            return None;
        }
    };
    if sidecar.id.is_empty() {
        out.push("sidecar id is empty".into());
    }
    if !(sidecar.fps.is_finite() && sidecar.fps > 0.0) {
        out.push(format!("fps {} is not positive", sidecar.fps));
    }
    if let (Some([rows, cols]), Some(n)) = (sidecar.feature_dims, frames) {
        if rows != n || cols != FEATURE_DIM {
            out.push(format!("feature_dims [{rows}, {cols}] != [{n}, {FEATURE_DIM}]"));
        }
    }
    Some(sidecar)
}

fn check_features(pkpf_path: &Path, sidecar: &Sidecar, out: &mut Vec<String>) {
    let Some([rows, cols]) = sidecar.feature_dims else { return };
    let path = pkpf_path.with_extension("f32");
    let bytes = match read_file(&path) {
        Ok(b) => b,
        Err(_) => {
            out.push(format!("missing feature matrix {}", path.display()));
            return;
        }
    };
    if bytes.len() != rows * cols * 4 {
        out.push(format!("feature matrix has {} bytes, expected {}", bytes.len(), rows * cols * 4));
        return;
    }
    let non_finite = bytes
        .chunks_exact(4)
        .filter(|c| !f32::from_le_bytes([c[0], c[1], c[2], c[3]]).is_finite())
        .count();
    if non_finite > 0 {
        out.push(format!("feature matrix holds {non_finite} non-finite values"));
    }
}

/// Checks every `.pkpf` in `dir` (or a single file) against the format
/// invariants, its sidecar, and any declared feature matrix.
pub fn validate_dataset(dir: &Path) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    for path in list_clips(dir)? {
        let mut violations = Vec::new();
        let frames = match read_file(&path) {
            Ok(bytes) => {
                violations.extend(pkpf::violations(&bytes));
                pkpf::read_header(&bytes).ok().map(|h| h.frame_count as usize)
            }
            Err(e) => {
                violations.push(e.to_string());
                None
            }
        };
        if let Some(sidecar) = check_sidecar(&path, frames, &mut violations) {
            check_features(&path, &sidecar, &mut violations);
        }
        report.checked += 1;
        if !violations.is_empty() {
            report.invalid += 1;
        }
        report.files.push(FileReport { file: path, violations });
    }
    Ok(report)
}
