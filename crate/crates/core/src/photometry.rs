//! Brightness time series and their summary statistics.
//!
//! The central signal is the mean pixel value of a region per frame. Peaks
//! measure how much fluorescent material an event released; the decay back
//! toward baseline measures how long it stayed suspended.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::frame::Frame;
use crate::ingest::FrameStack;

#[derive(Debug, Error, PartialEq)]
pub enum PhotometryError {
    #[error("series is constant, cannot normalize")]
    ConstantSeries,
    #[error("no trials supplied")]
    EmptyGroup,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Number of leading samples averaged into the baseline (fewer when the
/// series is shorter).
pub const BASELINE_SAMPLES: usize = 5;

/// Fraction of the peak excursion at which the signal counts as dissipated.
pub const DEFAULT_DECAY_FRACTION: f64 = 0.1;

/// Which rows of the frame contribute to the series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Full,
    TopHalf,
    BottomHalf,
}

impl Region {
    /// Half-open row range for a frame of the given height. The top half
    /// is rows `[0, h/2)`; the bottom half gets the extra row when the
    /// height is odd.
    pub fn rows(&self, height: u32) -> (u32, u32) {
        match self {
            Region::Full => (0, height),
            Region::TopHalf => (0, height / 2),
            Region::BottomHalf => (height / 2, height),
        }
    }

    fn mean(&self, frame: &Frame) -> f64 {
        let (y0, y1) = self.rows(frame.height());
        if y0 >= y1 {
            // A one-row frame has an empty top half; read it as dark.
            return 0.0;
        }
        frame.mean_rows(y0, y1)
    }
}

/// Mean region brightness per frame for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct BrightnessSeries {
    pub trial_id: String,
    pub region: Region,
    pub fps: f64,
    pub values: Vec<f64>,
}

impl BrightnessSeries {
    pub fn time_s(&self, frame_index: usize) -> f64 {
        frame_index as f64 / self.fps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Mean brightness of `region` in every frame of the stack.
pub fn brightness_series(stack: &FrameStack, region: Region) -> BrightnessSeries {
    let values = stack.frames.par_iter().map(|f| region.mean(f)).collect();
    BrightnessSeries {
        trial_id: stack.manifest.trial_id.clone(),
        region,
        fps: stack.manifest.fps,
        values,
    }
}

/// Mean of the first [`BASELINE_SAMPLES`] values (all of them when the
/// series is shorter), plus how many samples went in.
pub fn baseline(values: &[f64]) -> (f64, usize) {
    let k = values.len().min(BASELINE_SAMPLES);
    let mean = values[..k].iter().sum::<f64>() / k as f64;
    (mean, k)
}

/// Peak and decay summary of one brightness series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesMetrics {
    pub peak_value: f64,
    pub peak_frame: usize,
    pub peak_time_s: f64,
    pub baseline: f64,
    pub baseline_samples: usize,
    /// Time from the peak until the signal first returns to within
    /// `decay_fraction` of the peak excursion above baseline. `None` when
    /// it never does within the recording.
    pub dissipation_s: Option<f64>,
    pub flags: Vec<String>,
}

/// Summarize a series: earliest maximum, baseline from the leading
/// samples, and the decay time to `baseline + decay_fraction * excursion`.
/// A constant series is flagged `degenerate` and dissipates immediately;
/// a series that never decays within the recording is flagged
/// `unresolved`.
pub fn series_metrics(series: &BrightnessSeries, decay_fraction: f64) -> SeriesMetrics {
    let values = &series.values;
    assert!(!values.is_empty(), "series must have at least one sample");
    let (base, baseline_samples) = baseline(values);

    let mut peak_frame = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if v > values[peak_frame] {
            peak_frame = i;
        }
    }
    let peak_value = values[peak_frame];

    let mut flags = Vec::new();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if peak_value == min {
        flags.push("degenerate".to_string());
    }

    let threshold = base + decay_fraction * (peak_value - base);
    let decay_frame = values[peak_frame..]
        .iter()
        .position(|&v| v <= threshold)
        .map(|offset| peak_frame + offset);
    let dissipation_s = match decay_frame {
        Some(j) => Some(series.time_s(j) - series.time_s(peak_frame)),
        None => {
            flags.push("unresolved".to_string());
            None
        }
    };

    SeriesMetrics {
        peak_value,
        peak_frame,
        peak_time_s: series.time_s(peak_frame),
        baseline: base,
        baseline_samples,
        dissipation_s,
        flags,
    }
}

/// A series rescaled to the unit interval, with its baseline carried
/// through the same affine map.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub series: BrightnessSeries,
    pub baseline: f64,
}

/// Affinely rescale so the minimum maps to 0 and the maximum to 1.
pub fn normalize_series(series: &BrightnessSeries) -> Result<NormalizedSeries, PhotometryError> {
    let min = series.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = series
        .values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(PhotometryError::ConstantSeries);
    }
    let span = max - min;
    let values = series.values.iter().map(|&v| (v - min) / span).collect();
    let (raw_base, _) = baseline(&series.values);
    Ok(NormalizedSeries {
        series: BrightnessSeries {
            trial_id: series.trial_id.clone(),
            region: series.region,
            fps: series.fps,
            values,
        },
        baseline: (raw_base - min) / span,
    })
}

/// Ratio of time-averaged bottom-half brightness to top-half brightness.
/// The denominator is floored at 1e-6 so a dark top half reads as a large
/// finite ratio instead of dividing by zero.
pub fn uniformity_ratio(stack: &FrameStack) -> f64 {
    let top = brightness_series(stack, Region::TopHalf);
    let bottom = brightness_series(stack, Region::BottomHalf);
    let top_mean = top.values.iter().sum::<f64>() / top.values.len() as f64;
    let bottom_mean = bottom.values.iter().sum::<f64>() / bottom.values.len() as f64;
    bottom_mean / top_mean.max(1e-6)
}

/// Per-label peak statistics across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub label: String,
    pub count: usize,
    pub mean_peak: f64,
    /// Population standard deviation of the peaks.
    pub std_peak: f64,
    /// Coefficient of variation; 0 when the mean is indistinguishable
    /// from zero.
    pub cv: f64,
}

/// Mean-peak ratio between two labels, later label over earlier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRatio {
    pub numerator_label: String,
    pub denominator_label: String,
    /// `None` when the denominator group mean is indistinguishable from
    /// zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionComparison {
    /// Sorted by label.
    pub groups: Vec<GroupStats>,
    /// One entry per unordered label pair, alphabetically later label in
    /// the numerator.
    pub ratios: Vec<PairRatio>,
}

/// Group trial peaks by label and compare the groups.
pub fn compare_conditions(trials: &[(String, f64)]) -> Result<ConditionComparison, PhotometryError> {
    if trials.is_empty() {
        return Err(PhotometryError::EmptyGroup);
    }
    let mut by_label: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (label, peak) in trials {
        by_label.entry(label).or_default().push(*peak);
    }
    let groups: Vec<GroupStats> = by_label
        .iter()
        .map(|(label, peaks)| {
            let n = peaks.len() as f64;
            let mean = peaks.iter().sum::<f64>() / n;
            let var = peaks.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            let cv = if mean.abs() < 1e-12 { 0.0 } else { std / mean };
            GroupStats {
                label: label.to_string(),
                count: peaks.len(),
                mean_peak: mean,
                std_peak: std,
                cv,
            }
        })
        .collect();
    let mut ratios = Vec::new();
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let ratio = if groups[i].mean_peak.abs() < 1e-12 {
                None
            } else {
                Some(groups[j].mean_peak / groups[i].mean_peak)
            };
            ratios.push(PairRatio {
                numerator_label: groups[j].label.clone(),
                denominator_label: groups[i].label.clone(),
                ratio,
            });
        }
    }
    Ok(ConditionComparison { groups, ratios })
}

/// How peak brightness responds to event loudness across trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoudnessResponse {
    /// Pearson correlation between loudness and peak; 0 when the peaks
    /// have no variance.
    pub pearson_r: f64,
    /// Whether peaks are non-decreasing when trials are ordered by
    /// loudness (ties ordered by peak).
    pub monotone_non_decreasing: bool,
}

/// Correlate (loudness, peak) pairs. Needs at least three trials covering
/// at least two distinct loudness levels.
pub fn loudness_response(samples: &[(f64, f64)]) -> Result<LoudnessResponse, PhotometryError> {
    if samples.len() < 3 {
        return Err(PhotometryError::InsufficientData(format!(
            "need at least 3 trials, got {}",
            samples.len()
        )));
    }
    let mut loudness: Vec<f64> = samples.iter().map(|&(l, _)| l).collect();
    loudness.sort_by(|a, b| a.partial_cmp(b).expect("finite loudness"));
    loudness.dedup();
    if loudness.len() < 2 {
        return Err(PhotometryError::InsufficientData(
            "need at least 2 distinct loudness levels".into(),
        ));
    }

    let xs: Vec<f64> = samples.iter().map(|&(l, _)| l).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, p)| p).collect();
    let pearson_r = pearson(&xs, &ys);

    let mut ordered: Vec<(f64, f64)> = samples.to_vec();
    ordered.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let monotone_non_decreasing = ordered.windows(2).all(|w| w[1].1 >= w[0].1);

    Ok(LoudnessResponse {
        pearson_r,
        monotone_non_decreasing,
    })
}

/// Two-pass centered Pearson correlation; 0 when either side is constant.
fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
