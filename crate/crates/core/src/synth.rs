//! Synthetic scene rendering with exact ground truth.
//!
//! Droplets are Gaussian blobs whose brightness scales with the square of
//! the radius and whose fall speed follows the settling model, so every
//! analysis stage can be verified against a known answer. Rendering is
//! fully deterministic: the only randomness is a seeded linear
//! congruential generator, and each frame derives its own stream from the
//! scene seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{quantize_u8, round_half_up, Frame};
use crate::ingest::{FrameStack, Manifest};
use crate::physics::SedimentationModel;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid scene: {0}")]
    SpecViolation(String),
}

/// Peak brightness per squared micrometer of radius: a 100 um droplet at
/// full transmission under unit gain renders at 255.
pub const BRIGHTNESS_COEFF: f64 = 255.0 / 1.0e4;

/// Gaussian blobs are cut off beyond this many standard deviations.
pub const TRUNCATION_SIGMA: f64 = 3.0;

/// Stream selector for scene-level draws (droplet radii), kept distinct
/// from the per-frame noise streams which use `seed ^ frame_index`.
const SCENE_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

const LCG_MUL: u64 = 6_364_136_223_846_793_005;
const LCG_INC: u64 = 1_442_695_040_888_963_407;

/// Minimal 64-bit linear congruential generator. Portable and stable:
/// identical seeds produce identical streams on every platform.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    /// Seed the generator. One step is consumed up front so that nearby
    /// seeds diverge from the first output.
    pub fn new(seed: u64) -> Self {
        let mut rng = Self { state: seed };
        rng.next_u64();
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(LCG_MUL).wrapping_add(LCG_INC);
        self.state
    }

    pub fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    /// Uniform draw in `[0, n)`.
    pub fn bounded(&mut self, n: u32) -> u32 {
        assert!(n > 0, "bounded(0) is meaningless");
        self.next_u32() % n
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

fn default_transmission() -> f64 {
    1.0
}

/// One droplet to render.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropletSpec {
    pub radius_um: f64,
    /// Center column at spawn.
    pub x0_px: f64,
    /// Center row at spawn.
    pub y0_px: f64,
    #[serde(default)]
    pub spawn_frame: usize,
    /// Horizontal drift; vertical motion always follows the settling
    /// model.
    #[serde(default)]
    pub vx_px_per_frame: f64,
    /// Fraction of the droplet's light that gets through, 1 for an
    /// uncovered event.
    #[serde(default = "default_transmission")]
    pub transmission: f64,
}

fn default_scene_fps() -> f64 {
    240.0
}

fn default_scene_frame_height() -> f64 {
    1.0e5
}

fn default_scene_seed() -> u64 {
    42
}

/// Full description of a synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub trial_id: String,
    pub width_px: u32,
    pub height_px: u32,
    pub frame_count: usize,
    #[serde(default = "default_scene_fps")]
    pub fps: f64,
    #[serde(default = "default_scene_frame_height")]
    pub frame_height_um: f64,
    /// Flat background added to every pixel before the illumination gain.
    #[serde(default)]
    pub background_level: u8,
    /// Per-pixel additive noise is drawn uniformly from
    /// `[0, noise_amplitude]`.
    #[serde(default)]
    pub noise_amplitude: u8,
    /// Row gains; omitted means uniform illumination.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub illumination: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loudness_db: Option<f64>,
    #[serde(default = "default_scene_seed")]
    pub seed: u64,
    pub droplets: Vec<DropletSpec>,
}

impl SceneSpec {
    pub fn um_per_pixel(&self) -> f64 {
        self.frame_height_um / self.height_px as f64
    }
}

/// Why a droplet stopped being rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    /// Settled past the bottom row.
    Bottom,
    /// Drifted out through a side edge.
    Side,
    /// The recording ended first.
    EndOfStack,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidSample {
    pub frame_index: usize,
    pub x_px: f64,
    pub y_px: f64,
}

/// Ground truth for one droplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub droplet_index: usize,
    pub radius_um: f64,
    pub spawn_frame: usize,
    /// First frame in which the droplet is no longer rendered.
    pub exit_frame: usize,
    pub exit: ExitKind,
    /// True center per rendered frame.
    pub centroids: Vec<CentroidSample>,
}

/// Ground truth for a whole scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub um_per_pixel: f64,
    pub brightness_coeff: f64,
    pub truncation_sigma: f64,
    pub droplets: Vec<TruthRecord>,
}

fn validate_scene(spec: &SceneSpec) -> Result<(), SynthError> {
    let bad = |msg: String| Err(SynthError::SpecViolation(msg));
    if spec.width_px == 0 || spec.height_px == 0 {
        return bad("frame dimensions must be nonzero".into());
    }
    if spec.frame_count == 0 {
        return bad("frame_count must be at least 1".into());
    }
    if !(spec.fps.is_finite() && spec.fps > 0.0) {
        return bad(format!("fps must be positive, got {}", spec.fps));
    }
    if !(spec.frame_height_um.is_finite() && spec.frame_height_um > 0.0) {
        return bad(format!(
            "frame_height_um must be positive, got {}",
            spec.frame_height_um
        ));
    }
    if let Some(gains) = &spec.illumination {
        if gains.len() != spec.height_px as usize {
            return bad(format!(
                "illumination has {} rows, frame has {}",
                gains.len(),
                spec.height_px
            ));
        }
        if let Some(g) = gains.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return bad(format!("illumination gains must be positive, got {g}"));
        }
    }
    for (i, d) in spec.droplets.iter().enumerate() {
        if !(d.radius_um.is_finite() && d.radius_um > 0.0) {
            return bad(format!("droplet {i}: radius must be positive, got {}", d.radius_um));
        }
        if !(0.0..=1.0).contains(&d.transmission) {
            return bad(format!(
                "droplet {i}: transmission must be in [0, 1], got {}",
                d.transmission
            ));
        }
        if !(d.x0_px.is_finite() && d.y0_px.is_finite() && d.vx_px_per_frame.is_finite()) {
            return bad(format!("droplet {i}: position and drift must be finite"));
        }
    }
    Ok(())
}

struct DropletPath {
    x0: f64,
    y0: f64,
    vx: f64,
    vy: f64,
    spawn: usize,
    exit_frame: usize,
    amp_base: f64,
    sigma: f64,
}

/// Render a scene into a frame stack and its ground truth.
pub fn render_scene(
    spec: &SceneSpec,
    model: &SedimentationModel,
) -> Result<(FrameStack, SceneTruth), SynthError> {
    validate_scene(spec)?;
    let manifest = Manifest {
        trial_id: spec.trial_id.clone(),
        fps: spec.fps,
        frame_height_um: spec.frame_height_um,
        um_per_pixel: None,
        loudness_db: spec.loudness_db,
        mask_label: spec.mask_label.clone(),
        event_kind: None,
    };
    manifest
        .validate()
        .map_err(|e| SynthError::SpecViolation(e.to_string()))?;

    let (w, h) = (spec.width_px, spec.height_px);
    let upp = spec.um_per_pixel();
    let gains: Vec<f64> = match &spec.illumination {
        Some(g) => g.clone(),
        None => vec![1.0; h as usize],
    };

    let mut paths = Vec::with_capacity(spec.droplets.len());
    let mut truth_records = Vec::with_capacity(spec.droplets.len());
    for (di, d) in spec.droplets.iter().enumerate() {
        let vy = model
            .terminal_velocity(d.radius_um)
            .expect("radius validated")
            / (upp * spec.fps);
        let fall_um = ((h - 1) as f64 - d.y0_px) * upp;
        let bottom_exit = if fall_um <= 0.0 {
            d.spawn_frame
        } else {
            let t = model
                .sedimentation_time(d.radius_um, fall_um)
                .expect("inputs positive");
            d.spawn_frame + (spec.fps * t).ceil() as usize
        };

        let mut centroids = Vec::new();
        let mut exit_frame = spec.frame_count;
        let mut exit = ExitKind::EndOfStack;
        for f in d.spawn_frame..spec.frame_count {
            if f >= bottom_exit {
                exit_frame = f;
                exit = ExitKind::Bottom;
                break;
            }
            let step = (f - d.spawn_frame) as f64;
            let xc = d.x0_px + d.vx_px_per_frame * step;
            if xc < 0.0 || xc > (w - 1) as f64 {
                exit_frame = f;
                exit = ExitKind::Side;
                break;
            }
            centroids.push(CentroidSample {
                frame_index: f,
                x_px: xc,
                y_px: d.y0_px + vy * step,
            });
        }
        // A fall that finishes exactly at the end of the stack still
        // counts as a bottom exit.
        if exit == ExitKind::EndOfStack
            && d.spawn_frame < spec.frame_count
            && bottom_exit == spec.frame_count
        {
            exit = ExitKind::Bottom;
        }

        paths.push(DropletPath {
            x0: d.x0_px,
            y0: d.y0_px,
            vx: d.vx_px_per_frame,
            vy,
            spawn: d.spawn_frame,
            exit_frame,
            amp_base: BRIGHTNESS_COEFF * d.radius_um * d.radius_um * d.transmission,
            sigma: (d.radius_um / upp).max(1.0),
        });
        truth_records.push(TruthRecord {
            droplet_index: di,
            radius_um: d.radius_um,
            spawn_frame: d.spawn_frame,
            exit_frame,
            exit,
            centroids,
        });
    }

    let frames: Vec<Frame> = (0..spec.frame_count)
        .into_par_iter()
        .map(|f| render_frame(spec, &gains, &paths, f))
        .collect();

    let stack = FrameStack::new(manifest, frames)
        .map_err(|e| SynthError::SpecViolation(e.to_string()))?;
    let truth = SceneTruth {
        um_per_pixel: upp,
        brightness_coeff: BRIGHTNESS_COEFF,
        truncation_sigma: TRUNCATION_SIGMA,
        droplets: truth_records,
    };
    Ok((stack, truth))
}

fn render_frame(spec: &SceneSpec, gains: &[f64], paths: &[DropletPath], f: usize) -> Frame {
    let (w, h) = (spec.width_px as usize, spec.height_px as usize);
    let mut acc = vec![0.0f64; w * h];
    for y in 0..h {
        let base = spec.background_level as f64 * gains[y];
        for v in &mut acc[y * w..(y + 1) * w] {
            *v = base;
        }
    }

    for p in paths {
        if f < p.spawn || f >= p.exit_frame {
            continue;
        }
        let step = (f - p.spawn) as f64;
        let xc = p.x0 + p.vx * step;
        let yc = p.y0 + p.vy * step;
        // The gain is sampled once, at the row nearest the center, so the
        // blob keeps its Gaussian shape under nonuniform light.
        let gain_row = (round_half_up(yc) as i64).clamp(0, h as i64 - 1) as usize;
        let amp = round_half_up(p.amp_base * gains[gain_row]).clamp(0.0, 255.0);
        let reach = TRUNCATION_SIGMA * p.sigma;
        let r2_cut = reach * reach;
        let inv_two_sigma2 = 1.0 / (2.0 * p.sigma * p.sigma);
        let y_lo = ((yc - reach).ceil() as i64).max(0) as usize;
        let y_hi = ((yc + reach).floor() as i64).min(h as i64 - 1);
        let x_lo = ((xc - reach).ceil() as i64).max(0) as usize;
        let x_hi = ((xc + reach).floor() as i64).min(w as i64 - 1);
        if y_hi < 0 || x_hi < 0 {
            continue;
        }
        for y in y_lo..=(y_hi as usize) {
            let dy = y as f64 - yc;
            for x in x_lo..=(x_hi as usize) {
                let dx = x as f64 - xc;
                let r2 = dx * dx + dy * dy;
                if r2 <= r2_cut {
                    acc[y * w + x] += amp * (-r2 * inv_two_sigma2).exp();
                }
            }
        }
    }

    let mut data: Vec<u8> = acc.into_iter().map(quantize_u8).collect();
    if spec.noise_amplitude > 0 {
        let mut rng = Lcg64::new(spec.seed ^ f as u64);
        let span = spec.noise_amplitude as u32 + 1;
        for px in &mut data {
            let n = rng.bounded(span) as u16;
            *px = (*px as u16 + n).min(255) as u8;
        }
    }
    Frame::new(spec.width_px, spec.height_px, data)
}

/// Parameters for [`falling_scene`], a stock scene in which every droplet
/// completes its fall within the stack.
#[derive(Debug, Clone, PartialEq)]
pub struct FallingSceneParams {
    pub trial_id: String,
    pub width_px: u32,
    pub height_px: u32,
    pub frame_count: usize,
    pub fps: f64,
    pub frame_height_um: f64,
    pub droplet_count: usize,
    pub radius_range_um: (f64, f64),
    pub background_level: u8,
    pub noise_amplitude: u8,
    pub transmission: f64,
    pub mask_label: Option<String>,
    pub loudness_db: Option<f64>,
    pub spawn_frame: usize,
    pub seed: u64,
}

impl Default for FallingSceneParams {
    fn default() -> Self {
        Self {
            trial_id: "synthetic".into(),
            width_px: 640,
            height_px: 480,
            frame_count: 240,
            fps: 240.0,
            frame_height_um: 1.0e5,
            droplet_count: 10,
            radius_range_um: (20.0, 100.0),
            background_level: 0,
            noise_amplitude: 10,
            transmission: 1.0,
            mask_label: None,
            loudness_db: None,
            spawn_frame: 4,
            seed: 42,
        }
    }
}

/// Lay out droplets in evenly spaced columns with radii drawn uniformly
/// from the requested range, each spawned high enough (or low enough)
/// to settle out of the frame a few frames before the stack ends.
pub fn falling_scene(
    params: &FallingSceneParams,
    model: &SedimentationModel,
) -> Result<SceneSpec, SynthError> {
    let bad = |msg: String| Err(SynthError::SpecViolation(msg));
    if params.droplet_count == 0 {
        return bad("droplet_count must be at least 1".into());
    }
    let (r_lo, r_hi) = params.radius_range_um;
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo > 0.0 && r_lo <= r_hi) {
        return bad(format!("radius range ({r_lo}, {r_hi}) is not usable"));
    }
    if params.height_px < 8 {
        return bad("height_px must be at least 8".into());
    }
    let usable = params.frame_count as i64 - params.spawn_frame as i64 - 3;
    if usable < 2 {
        return bad(format!(
            "frame_count {} leaves no room after spawn_frame {}",
            params.frame_count, params.spawn_frame
        ));
    }

    let upp = params.frame_height_um / params.height_px as f64;
    let mut rng = Lcg64::new(params.seed ^ SCENE_STREAM);
    let n = params.droplet_count;
    let mut droplets = Vec::with_capacity(n);
    for i in 0..n {
        let radius_um = rng.uniform(r_lo, r_hi);
        let vy = model.terminal_velocity(radius_um).expect("radius positive") / (upp * params.fps);
        let y0_px = ((params.height_px - 1) as f64 - vy * (usable as f64 - 2.0)).max(2.0);
        let x0_px = (i + 1) as f64 * params.width_px as f64 / (n + 1) as f64;
        droplets.push(DropletSpec {
            radius_um,
            x0_px,
            y0_px,
            spawn_frame: params.spawn_frame,
            vx_px_per_frame: 0.0,
            transmission: params.transmission,
        });
    }

    Ok(SceneSpec {
        trial_id: params.trial_id.clone(),
        width_px: params.width_px,
        height_px: params.height_px,
        frame_count: params.frame_count,
        fps: params.fps,
        frame_height_um: params.frame_height_um,
        background_level: params.background_level,
        noise_amplitude: params.noise_amplitude,
        illumination: None,
        mask_label: params.mask_label.clone(),
        loudness_db: params.loudness_db,
        seed: params.seed,
        droplets,
    })
}
