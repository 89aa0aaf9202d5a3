use dropscope_core::{
    EfficacyError, ImageProcError, IngestError, PhotometryError, PhysicsError, SynthError,
    TrackingError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Image(#[from] ImageProcError),
    #[error(transparent)]
    Photometry(#[from] PhotometryError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Tracking(#[from] TrackingError),
    #[error(transparent)]
    Efficacy(#[from] EfficacyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("cannot write output: {0}")]
    UnwritableOutput(String),
    #[error("montage stride {stride} exceeds the {frames}-frame stack")]
    StrideExceedsStack { stride: usize, frames: usize },
    #[error("invalid flag: {0}")]
    InvalidFlag(String),
    #[error("trial id {0:?} appears in more than one input directory")]
    DuplicateTrialId(String),
    #[error("trial {0:?} has no mask_label in its manifest")]
    MissingMaskLabel(String),
}

impl CliError {
    /// Stable process exit code for scripting; also listed in the help
    /// text.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Ingest(_) | CliError::DuplicateTrialId(_) => 10,
            CliError::Image(_) => 11,
            CliError::Photometry(_) => 12,
            CliError::Physics(_) => 13,
            CliError::Tracking(_) => 14,
            CliError::Efficacy(_) | CliError::MissingMaskLabel(_) => 15,
            CliError::Synth(_) => 16,
            CliError::UnwritableOutput(_) => 17,
            CliError::StrideExceedsStack { .. } => 18,
            CliError::InvalidFlag(_) => 19,
        }
    }
}
