pub mod masks;
pub mod montage;
pub mod physics;
pub mod series;
pub mod synth;
pub mod track;

use std::collections::BTreeSet;
use std::path::PathBuf;

use dropscope_core::{load_stack, Connectivity, FrameStack, Region};

use crate::error::CliError;

/// Load every input stack, rejecting repeated trial ids so per-trial CSV
/// rows stay unambiguous.
pub fn load_trials(dirs: &[PathBuf]) -> Result<Vec<FrameStack>, CliError> {
    let mut stacks = Vec::with_capacity(dirs.len());
    let mut seen = BTreeSet::new();
    for dir in dirs {
        let stack = load_stack(dir)?;
        if !seen.insert(stack.manifest.trial_id.clone()) {
            return Err(CliError::DuplicateTrialId(stack.manifest.trial_id.clone()));
        }
        stacks.push(stack);
    }
    Ok(stacks)
}

/// Row selection exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum RegionArg {
    /// All rows.
    Full,
    /// Upper half of the frame.
    Top,
    /// Lower half of the frame.
    Bottom,
}

impl RegionArg {
    pub fn to_region(self) -> Region {
        match self {
            RegionArg::Full => Region::Full,
            RegionArg::Top => Region::TopHalf,
            RegionArg::Bottom => Region::BottomHalf,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegionArg::Full => "full",
            RegionArg::Top => "top",
            RegionArg::Bottom => "bottom",
        }
    }
}

/// Foreground threshold choice: `otsu` or `fixed:<level>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdArg {
    Otsu,
    Fixed(u8),
}

impl ThresholdArg {
    pub fn parse(s: &str) -> Result<ThresholdArg, CliError> {
        if s == "otsu" {
            return Ok(ThresholdArg::Otsu);
        }
        if let Some(level) = s.strip_prefix("fixed:") {
            return level
                .parse::<u8>()
                .map(ThresholdArg::Fixed)
                .map_err(|_| {
                    CliError::InvalidFlag(format!(
                        "--threshold fixed level must be 0..=255, got {level:?}"
                    ))
                });
        }
        Err(CliError::InvalidFlag(format!(
            "--threshold must be `otsu` or `fixed:<level>`, got {s:?}"
        )))
    }

    /// Canonical spelling for the config echo.
    pub fn describe(&self) -> String {
        match self {
            ThresholdArg::Otsu => "otsu".to_string(),
            ThresholdArg::Fixed(level) => format!("fixed:{level}"),
        }
    }
}

pub fn parse_connectivity(n: u8) -> Result<Connectivity, CliError> {
    match n {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        other => Err(CliError::InvalidFlag(format!(
            "--connectivity must be 4 or 8, got {other}"
        ))),
    }
}

pub fn require_positive(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CliError::InvalidFlag(format!(
            "{name} must be a positive number, got {value}"
        )))
    }
}

pub fn require_non_negative(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CliError::InvalidFlag(format!(
            "{name} must be zero or more, got {value}"
        )))
    }
}

pub fn require_unit_fraction(name: &str, value: f64) -> Result<(), CliError> {
    if value.is_finite() && (0.0..1.0).contains(&value) {
        Ok(())
    } else {
        Err(CliError::InvalidFlag(format!(
            "{name} must lie in [0, 1), got {value}"
        )))
    }
}
