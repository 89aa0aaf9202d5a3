//! Trial loading: manifest parsing and frame-stack assembly.
//!
//! A trial directory holds a `manifest.json` and frames named
//! `frame_<ordinal>.pgm` or `frame_<ordinal>.png`. Ordinals must use a
//! uniform zero-pad width and be consecutive; they may start anywhere.
//! Other files in the directory are ignored.

pub mod codec;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no manifest.json in {dir}")]
    MissingManifest { dir: String },
    #[error("manifest is missing a trial_id")]
    MissingTrialId,
    #[error("invalid manifest field {field}: {detail}")]
    InvalidField { field: &'static str, detail: String },
    #[error("frame ordinals are not a consecutive run: {detail}")]
    NonMonotonicOrdinals { detail: String },
    #[error("{path} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    InconsistentDimensions {
        path: String,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },
    #[error("unsupported pixel format in {path}: {detail}")]
    UnsupportedPixelFormat { path: String, detail: String },
    #[error("no frames found in {dir}")]
    NoFrames { dir: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest {path} failed to parse: {detail}")]
    ManifestSyntax { path: String, detail: String },
}

/// What kind of expiratory event the trial recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Speech,
    Cough,
    Sneeze,
    Spray,
}

fn default_fps() -> f64 {
    240.0
}

fn default_frame_height_um() -> f64 {
    1.0e5
}

/// Per-trial recording metadata, read from `manifest.json`.
/// Unknown keys in the file are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub trial_id: String,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_frame_height_um")]
    pub frame_height_um: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub um_per_pixel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_kind: Option<EventKind>,
}

impl Manifest {
    /// A manifest with default camera geometry and no optional metadata.
    pub fn bare(trial_id: impl Into<String>) -> Self {
        Self {
            trial_id: trial_id.into(),
            fps: default_fps(),
            frame_height_um: default_frame_height_um(),
            um_per_pixel: None,
            loudness_db: None,
            mask_label: None,
            event_kind: None,
        }
    }

    /// Check field constraints. Labels that later land in CSV cells must
    /// not contain commas or newlines, so those bytes are rejected here.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.trial_id.is_empty() {
            return Err(IngestError::MissingTrialId);
        }
        check_label("trial_id", &self.trial_id)?;
        if let Some(label) = &self.mask_label {
            check_label("mask_label", label)?;
        }
        check_positive("fps", self.fps)?;
        check_positive("frame_height_um", self.frame_height_um)?;
        if let Some(upp) = self.um_per_pixel {
            check_positive("um_per_pixel", upp)?;
        }
        if let Some(db) = self.loudness_db {
            if !db.is_finite() {
                return Err(IngestError::InvalidField {
                    field: "loudness_db",
                    detail: format!("must be finite, got {db}"),
                });
            }
        }
        Ok(())
    }
}

fn check_label(field: &'static str, value: &str) -> Result<(), IngestError> {
    if value.contains(',') || value.contains('\n') || value.contains('\r') {
        return Err(IngestError::InvalidField {
            field,
            detail: "must not contain commas or newlines".into(),
        });
    }
    Ok(())
}

fn check_positive(field: &'static str, value: f64) -> Result<(), IngestError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(IngestError::InvalidField {
            field,
            detail: format!("must be positive and finite, got {value}"),
        });
    }
    Ok(())
}

/// Pixel/world scaling for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    pub width_px: u32,
    pub height_px: u32,
    pub um_per_pixel: f64,
    pub fps: f64,
}

/// A loaded trial: manifest plus frames in time order.
#[derive(Debug, Clone)]
pub struct FrameStack {
    pub manifest: Manifest,
    pub frames: Vec<Frame>,
}

impl FrameStack {
    pub fn new(manifest: Manifest, frames: Vec<Frame>) -> Result<Self, IngestError> {
        manifest.validate()?;
        if frames.is_empty() {
            return Err(IngestError::NoFrames {
                dir: "<in memory>".into(),
            });
        }
        let (w, h) = frames[0].dimensions();
        for (i, f) in frames.iter().enumerate() {
            if f.dimensions() != (w, h) {
                return Err(IngestError::InconsistentDimensions {
                    path: format!("frame index {i}"),
                    expected_w: w,
                    expected_h: h,
                    found_w: f.width(),
                    found_h: f.height(),
                });
            }
        }
        Ok(Self { manifest, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Time of frame `i` in seconds from the start of the stack.
    pub fn time_s(&self, frame_index: usize) -> f64 {
        frame_index as f64 / self.manifest.fps
    }

    /// Scaling derived from the manifest and the frame dimensions. When
    /// the manifest gives no explicit scale, the frame height is assumed
    /// to span `frame_height_um`.
    pub fn geometry(&self) -> Geometry {
        let (w, h) = self.frames[0].dimensions();
        let um_per_pixel = self
            .manifest
            .um_per_pixel
            .unwrap_or(self.manifest.frame_height_um / h as f64);
        Geometry {
            width_px: w,
            height_px: h,
            um_per_pixel,
            fps: self.manifest.fps,
        }
    }
}

/// Parse `frame_<digits>.<ext>` and return (digit string, ordinal, path).
/// Returns Ok(None) for names that are not frame files at all.
fn parse_frame_name(path: &Path) -> Result<Option<(String, u64, PathBuf)>, IngestError> {
    let name = match path.file_name().and_then(|n| n.to_str()) {
        Some(n) => n,
        None => return Ok(None),
    };
    let rest = match name.strip_prefix("frame_") {
        Some(r) => r,
        None => return Ok(None),
    };
    let (digits, ext) = match rest.split_once('.') {
        Some((d, e)) => (d, e),
        None => return Ok(None),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Ok(None);
    }
    match ext {
        "pgm" | "png" => {}
        _ => {
            return Err(IngestError::UnsupportedPixelFormat {
                path: path.display().to_string(),
                detail: format!("extension .{ext} is not a supported frame format"),
            })
        }
    }
    let ordinal: u64 = digits.parse().map_err(|_| IngestError::NonMonotonicOrdinals {
        detail: format!("ordinal in {name} out of range"),
    })?;
    Ok(Some((digits.to_string(), ordinal, path.to_path_buf())))
}

/// Load a trial directory: manifest plus every frame, decoded in parallel
/// and ordered by ordinal. Frame index `i` in the result is the i-th frame
/// of the run regardless of where the ordinals start.
pub fn load_stack(dir: &Path) -> Result<FrameStack, IngestError> {
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        return Err(IngestError::MissingManifest {
            dir: dir.display().to_string(),
        });
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| IngestError::Io {
        path: manifest_path.display().to_string(),
        source: e,
    })?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| IngestError::ManifestSyntax {
            path: manifest_path.display().to_string(),
            detail: e.to_string(),
        })?;
    manifest.validate()?;

    let entries = fs::read_dir(dir).map_err(|e| IngestError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut found: Vec<(String, u64, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| IngestError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        if let Some(hit) = parse_frame_name(&entry.path())? {
            found.push(hit);
        }
    }
    if found.is_empty() {
        return Err(IngestError::NoFrames {
            dir: dir.display().to_string(),
        });
    }

    let pad = found[0].0.len();
    if let Some((digits, _, path)) = found.iter().find(|(d, _, _)| d.len() != pad) {
        return Err(IngestError::NonMonotonicOrdinals {
            detail: format!(
                "inconsistent zero padding: {} has width {}, expected {}",
                path.display(),
                digits.len(),
                pad
            ),
        });
    }

    found.sort_by_key(|(_, ordinal, _)| *ordinal);
    for pair in found.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if b.1 == a.1 {
            return Err(IngestError::NonMonotonicOrdinals {
                detail: format!(
                    "duplicate ordinal {} ({} and {})",
                    a.1,
                    a.2.display(),
                    b.2.display()
                ),
            });
        }
        if b.1 != a.1 + 1 {
            return Err(IngestError::NonMonotonicOrdinals {
                detail: format!("gap between ordinals {} and {}", a.1, b.1),
            });
        }
    }

    let frames: Vec<Frame> = found
        .par_iter()
        .map(|(_, _, path)| match path.extension().and_then(|e| e.to_str()) {
            Some("png") => codec::read_png(path),
            _ => codec::read_pgm(path),
        })
        .collect::<Result<_, _>>()?;

    let (w, h) = frames[0].dimensions();
    for (frame, (_, _, path)) in frames.iter().zip(&found) {
        if frame.dimensions() != (w, h) {
            return Err(IngestError::InconsistentDimensions {
                path: path.display().to_string(),
                expected_w: w,
                expected_h: h,
                found_w: frame.width(),
                found_h: frame.height(),
            });
        }
    }

    Ok(FrameStack { manifest, frames })
}

/// Write a stack to `dir` as canonical PGM frames (`frame_000001.pgm`
/// onward) plus a `manifest.json`.
pub fn save_stack(dir: &Path, stack: &FrameStack) -> Result<(), IngestError> {
    fs::create_dir_all(dir).map_err(|e| IngestError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&stack.manifest).expect("manifest serializes");
    fs::write(&manifest_path, text).map_err(|e| IngestError::Io {
        path: manifest_path.display().to_string(),
        source: e,
    })?;
    for (i, frame) in stack.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{:06}.pgm", i + 1));
        codec::write_pgm(&path, frame)?;
    }
    Ok(())
}
