//! Analysis of slow-motion frame stacks from fluorescence droplet
//! recordings: per-frame brightness series, droplet segmentation and
//! tracking, settling-based radius estimation, and mask efficacy reports,
//! plus a synthetic scene renderer for end-to-end verification against
//! known ground truth.

pub mod efficacy;
pub mod frame;
pub mod imageproc;
pub mod ingest;
pub mod photometry;
pub mod physics;
pub mod synth;
pub mod tracking;

pub use efficacy::{build_report, EfficacyError, EfficacyReport, EfficacyRow, EfficacyTrial};
pub use frame::{quantize_u8, round_half_up, Frame, Mask};
pub use imageproc::{
    estimate_illumination, fixed_threshold, flat_field, histogram_stretch, otsu_threshold,
    segment, Connectivity, Detection, IlluminationProfile, ImageProcError, SegmentConfig,
    ThresholdResult,
};
pub use ingest::{
    load_stack, save_stack, EventKind, FrameStack, Geometry, IngestError, Manifest,
};
pub use photometry::{
    baseline, brightness_series, compare_conditions, loudness_response, normalize_series,
    series_metrics, uniformity_ratio, BrightnessSeries, ConditionComparison, GroupStats,
    LoudnessResponse, NormalizedSeries, PairRatio, PhotometryError, Region, SeriesMetrics,
};
pub use physics::{PhysicsError, SedimentationModel};
pub use synth::{
    falling_scene, render_scene, CentroidSample, DropletSpec, ExitKind, FallingSceneParams,
    Lcg64, SceneSpec, SceneTruth, SynthError, TruthRecord,
};
pub use tracking::{
    link_detections, measure_track, LinkConfig, MeasureConfig, Track, TrackMeasurement,
    TrackStatus, TrackingError,
};
