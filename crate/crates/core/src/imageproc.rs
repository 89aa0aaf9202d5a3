//! Frame-level processing: thresholding, contrast stretch, flat-field
//! correction and blob extraction.

use std::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::frame::{quantize_u8, Frame, Mask};

#[derive(Debug, Error, PartialEq)]
pub enum ImageProcError {
    #[error("background frames carry no light, cannot estimate illumination")]
    AllDarkBackground,
    #[error("dimension mismatch: {detail}")]
    DimensionMismatch { detail: String },
    #[error("saturation fraction must lie in [0, 0.5), got {0}")]
    InvalidSaturationFraction(f64),
    #[error("background count must be in 1..=frame count, got {requested} of {available}")]
    InvalidBackgroundCount { requested: usize, available: usize },
}

/// Outcome of automatic thresholding.
#[derive(Debug, Clone)]
pub struct ThresholdResult {
    /// Chosen level; pixels strictly above it are foreground.
    pub level: u8,
    pub mask: Mask,
    /// Set when the frame has a single distinct value and no split exists.
    /// The mask is then all background and `level` is that value.
    pub degenerate: bool,
}

/// Otsu's method over the 256-bin histogram, computed in exact integer
/// arithmetic. The between-class variance at split `t` is proportional to
/// `a^2 / (w0 * w1)` with `a = s0 * n - s * w0`; candidates are compared as
/// exact fractions so the argmax never depends on float rounding, and ties
/// resolve to the lowest level.
pub fn otsu_threshold(frame: &Frame) -> ThresholdResult {
    let mut hist = [0u64; 256];
    for &v in frame.data() {
        hist[v as usize] += 1;
    }
    let n = frame.data().len() as i128;
    let total: i128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as i128 * c as i128)
        .sum();

    let mut best: Option<(u8, u128, u128)> = None;
    let mut w0: i128 = 0;
    let mut s0: i128 = 0;
    for t in 0u16..=255 {
        w0 += hist[t as usize] as i128;
        s0 += t as i128 * hist[t as usize] as i128;
        let w1 = n - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let a = s0 * n - total * w0;
        let num = a.unsigned_abs() * a.unsigned_abs();
        let den = (w0 as u128) * (w1 as u128);
        let better = match &best {
            None => true,
            Some((_, bn, bd)) => cmp_frac(num, den, *bn, *bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }

    match best {
        Some((level, _, _)) => {
            let mask = fixed_threshold(frame, level);
            ThresholdResult {
                level,
                mask,
                degenerate: false,
            }
        }
        None => {
            // Every pixel shares one value; no split separates two classes.
            let level = frame.data()[0];
            ThresholdResult {
                level,
                mask: Mask::empty(frame.width(), frame.height()),
                degenerate: true,
            }
        }
    }
}

/// Compare p1/q1 with p2/q2 exactly via continued-fraction descent,
/// avoiding the overflow a direct cross-multiplication could hit.
fn cmp_frac(mut p1: u128, mut q1: u128, mut p2: u128, mut q2: u128) -> Ordering {
    loop {
        let (i1, r1) = (p1 / q1, p1 % q1);
        let (i2, r2) = (p2 / q2, p2 % q2);
        if i1 != i2 {
            return i1.cmp(&i2);
        }
        match (r1 == 0, r2 == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            // Both have fractional parts r/q; comparing them flips under
            // the reciprocal, so swap the fractions as well as inverting.
            (false, false) => (p1, q1, p2, q2) = (q2, r2, q1, r1),
        }
    }
}

/// Binary mask of pixels strictly above `level`.
pub fn fixed_threshold(frame: &Frame, level: u8) -> Mask {
    let data = frame.data().iter().map(|&v| v > level).collect();
    Mask::new(frame.width(), frame.height(), data)
}

/// Linear contrast stretch with symmetric quantile saturation.
///
/// The low and high anchors are the pixel values at sorted ranks
/// `floor(q * (n - 1))` and `floor((1 - q) * (n - 1))`; everything outside
/// maps to 0 or 255. A frame whose anchors coincide comes back all zero.
pub fn histogram_stretch(frame: &Frame, saturation: f64) -> Result<Frame, ImageProcError> {
    if !(saturation >= 0.0 && saturation < 0.5) {
        return Err(ImageProcError::InvalidSaturationFraction(saturation));
    }
    let mut hist = [0u64; 256];
    for &v in frame.data() {
        hist[v as usize] += 1;
    }
    let n = frame.data().len() as u64;
    let rank_lo = (saturation * (n - 1) as f64).floor() as u64;
    let rank_hi = ((1.0 - saturation) * (n - 1) as f64).floor() as u64;
    let lo = value_at_rank(&hist, rank_lo);
    let hi = value_at_rank(&hist, rank_hi);
    if hi <= lo {
        return Ok(Frame::filled(frame.width(), frame.height(), 0));
    }
    let scale = 255.0 / (hi - lo) as f64;
    let mut lut = [0u8; 256];
    for (v, out) in lut.iter_mut().enumerate() {
        *out = quantize_u8((v as f64 - lo as f64) * scale);
    }
    let data = frame.data().iter().map(|&v| lut[v as usize]).collect();
    Ok(Frame::new(frame.width(), frame.height(), data))
}

/// Value of the k-th smallest pixel (0-based) read off the cumulative
/// histogram: the least value whose running count covers rank + 1.
fn value_at_rank(hist: &[u64; 256], rank: u64) -> u16 {
    let mut cum = 0u64;
    for (v, &c) in hist.iter().enumerate() {
        cum += c;
        if cum >= rank + 1 {
            return v as u16;
        }
    }
    255
}

/// Row-wise illumination gains, normalized so the brightest row is 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlluminationProfile {
    pub gains: Vec<f64>,
}

/// Rows measuring this fraction of the brightest row or less are clamped,
/// so flat-field division never blows dark rows up by more than 50x.
pub const GAIN_FLOOR: f64 = 0.02;

impl IlluminationProfile {
    pub fn uniform(height: u32) -> Self {
        Self {
            gains: vec![1.0; height as usize],
        }
    }

    #[inline]
    pub fn gain(&self, y: u32) -> f64 {
        self.gains[y as usize]
    }
}

/// Estimate the illumination profile from the first `background_count`
/// frames of a stack: per-pixel temporal median (mean of the middle pair
/// when the count is even), then row means, normalized to the brightest
/// row and clamped at [`GAIN_FLOOR`].
pub fn estimate_illumination(
    frames: &[Frame],
    background_count: usize,
) -> Result<IlluminationProfile, ImageProcError> {
    if background_count == 0 || background_count > frames.len() {
        return Err(ImageProcError::InvalidBackgroundCount {
            requested: background_count,
            available: frames.len(),
        });
    }
    let (w, h) = frames[0].dimensions();
    for f in &frames[..background_count] {
        if f.dimensions() != (w, h) {
            return Err(ImageProcError::DimensionMismatch {
                detail: format!(
                    "background frame is {}x{}, expected {}x{}",
                    f.width(),
                    f.height(),
                    w,
                    h
                ),
            });
        }
    }

    let k = background_count;
    let mut row_means = Vec::with_capacity(h as usize);
    let mut samples = vec![0u8; k];
    for y in 0..h {
        let mut sum = 0.0;
        for x in 0..w {
            for (s, f) in samples.iter_mut().zip(&frames[..k]) {
                *s = f.get(x, y);
            }
            samples.sort_unstable();
            let median = if k % 2 == 1 {
                samples[k / 2] as f64
            } else {
                (samples[k / 2 - 1] as f64 + samples[k / 2] as f64) / 2.0
            };
            sum += median;
        }
        row_means.push(sum / w as f64);
    }

    let max = row_means.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Err(ImageProcError::AllDarkBackground);
    }
    let gains = row_means
        .iter()
        .map(|&m| (m / max).max(GAIN_FLOOR))
        .collect();
    Ok(IlluminationProfile { gains })
}

/// Divide out the row gains: `out(x, y) = round(in(x, y) / gain(y))`,
/// clamped to the 8-bit range.
pub fn flat_field(frame: &Frame, profile: &IlluminationProfile) -> Result<Frame, ImageProcError> {
    if profile.gains.len() != frame.height() as usize {
        return Err(ImageProcError::DimensionMismatch {
            detail: format!(
                "profile has {} rows, frame has {}",
                profile.gains.len(),
                frame.height()
            ),
        });
    }
    let out = Frame::from_fn(frame.width(), frame.height(), |x, y| {
        quantize_u8(frame.get(x, y) as f64 / profile.gain(y))
    });
    Ok(out)
}

/// Neighbor rule for component extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Blob extraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentConfig {
    pub connectivity: Connectivity,
    /// Components smaller than this many pixels are dropped.
    pub min_area: u32,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            connectivity: Connectivity::Eight,
            min_area: 3,
        }
    }
}

/// One blob in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame_index: usize,
    /// Intensity-weighted centroid column, sub-pixel.
    pub x_px: f64,
    /// Intensity-weighted centroid row, sub-pixel.
    pub y_px: f64,
    pub area_px: u32,
    pub mean_intensity: f64,
    pub peak_intensity: u8,
}

/// Extract connected foreground components as detections.
///
/// Centroids are weighted by the original frame intensities; a component
/// whose intensities sum to zero falls back to the unweighted pixel mean.
/// The result is sorted by (y, x) so it does not depend on scan order.
pub fn segment(
    frame: &Frame,
    mask: &Mask,
    frame_index: usize,
    config: &SegmentConfig,
) -> Result<Vec<Detection>, ImageProcError> {
    if mask.width() != frame.width() || mask.height() != frame.height() {
        return Err(ImageProcError::DimensionMismatch {
            detail: format!(
                "mask is {}x{}, frame is {}x{}",
                mask.width(),
                mask.height(),
                frame.width(),
                frame.height()
            ),
        });
    }
    let (w, h) = frame.dimensions();
    let mut visited = vec![false; (w as usize) * (h as usize)];
    let idx = |x: u32, y: u32| (y as usize) * (w as usize) + (x as usize);
    let mut detections = Vec::new();
    let mut queue: Vec<(u32, u32)> = Vec::new();

    for start_y in 0..h {
        for start_x in 0..w {
            if !mask.get(start_x, start_y) || visited[idx(start_x, start_y)] {
                continue;
            }
            visited[idx(start_x, start_y)] = true;
            queue.clear();
            queue.push((start_x, start_y));
            let mut area = 0u32;
            let mut sum_i = 0u64;
            let mut sum_ix = 0f64;
            let mut sum_iy = 0f64;
            let mut sum_x = 0u64;
            let mut sum_y = 0u64;
            let mut peak = 0u8;
            while let Some((x, y)) = queue.pop() {
                let v = frame.get(x, y);
                area += 1;
                sum_i += v as u64;
                sum_ix += v as f64 * x as f64;
                sum_iy += v as f64 * y as f64;
                sum_x += x as u64;
                sum_y += y as u64;
                peak = peak.max(v);
                let x = x as i64;
                let y = y as i64;
                let neighbors: &[(i64, i64)] = match config.connectivity {
                    Connectivity::Four => &[(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)],
                    Connectivity::Eight => &[
                        (x - 1, y - 1),
                        (x, y - 1),
                        (x + 1, y - 1),
                        (x - 1, y),
                        (x + 1, y),
                        (x - 1, y + 1),
                        (x, y + 1),
                        (x + 1, y + 1),
                    ],
                };
                for &(nx, ny) in neighbors {
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as u32, ny as u32);
                    if mask.get(nx, ny) && !visited[idx(nx, ny)] {
                        visited[idx(nx, ny)] = true;
                        queue.push((nx, ny));
                    }
                }
            }
            if area < config.min_area {
                continue;
            }
            let (x_px, y_px) = if sum_i > 0 {
                (sum_ix / sum_i as f64, sum_iy / sum_i as f64)
            } else {
                (sum_x as f64 / area as f64, sum_y as f64 / area as f64)
            };
            detections.push(Detection {
                frame_index,
                x_px,
                y_px,
                area_px: area,
                mean_intensity: sum_i as f64 / area as f64,
                peak_intensity: peak,
            });
        }
    }
    detections.sort_by(|a, b| {
        (a.y_px, a.x_px)
            .partial_cmp(&(b.y_px, b.x_px))
            .expect("finite centroids")
    });
    Ok(detections)
}
