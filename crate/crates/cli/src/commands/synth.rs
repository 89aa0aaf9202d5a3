use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use dropscope_core::{
    falling_scene, render_scene, save_stack, FallingSceneParams, SceneSpec, SedimentationModel,
    SynthError,
};

use crate::error::CliError;
use crate::output::{prepare_out_dir, write_json};

/// Render a synthetic recording with known ground truth.
///
/// Writes the frame stack under `<out>/stack/`, the resolved scene as
/// `scene.json` and the per-droplet ground truth as `truth.json`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene description JSON; overrides the generated layout.
    #[arg(long, value_name = "FILE")]
    pub scene: Option<PathBuf>,
    #[arg(long, default_value = "synthetic")]
    pub trial_id: String,
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    #[arg(long, default_value_t = 240)]
    pub frames: usize,
    #[arg(long, default_value_t = 240.0)]
    pub fps: f64,
    /// Physical height of the imaged field in micrometers.
    #[arg(long, default_value_t = 1.0e5)]
    pub frame_height_um: f64,
    #[arg(long, default_value_t = 10)]
    pub droplets: usize,
    /// Smallest generated droplet radius in micrometers.
    #[arg(long, default_value_t = 20.0)]
    pub radius_min: f64,
    /// Largest generated droplet radius in micrometers.
    #[arg(long, default_value_t = 100.0)]
    pub radius_max: f64,
    /// Flat background level added to every pixel.
    #[arg(long, default_value_t = 0)]
    pub background: u8,
    /// Upper bound of the uniform per-pixel noise.
    #[arg(long, default_value_t = 10)]
    pub noise: u8,
    /// Fraction of droplet light that gets through, 1 for uncovered.
    #[arg(long, default_value_t = 1.0)]
    pub transmission: f64,
    /// Mask label recorded in the generated manifest.
    #[arg(long)]
    pub mask_label: Option<String>,
    /// Loudness recorded in the generated manifest.
    #[arg(long)]
    pub loudness_db: Option<f64>,
    /// First frame in which droplets appear.
    #[arg(long, default_value_t = 4)]
    pub spawn_frame: usize,
}

fn load_scene_file(path: &Path) -> Result<SceneSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| SynthError::SpecViolation(format!("scene file {}: {e}", path.display())))?;
    let spec: SceneSpec = serde_json::from_str(&text)
        .map_err(|e| SynthError::SpecViolation(format!("scene file {}: {e}", path.display())))?;
    Ok(spec)
}

pub fn run(args: &SynthArgs, out: &Path, seed: u64) -> Result<(), CliError> {
    let model = SedimentationModel::default();
    let spec = match &args.scene {
        Some(path) => load_scene_file(path)?,
        None => falling_scene(
            &FallingSceneParams {
                trial_id: args.trial_id.clone(),
                width_px: args.width,
                height_px: args.height,
                frame_count: args.frames,
                fps: args.fps,
                frame_height_um: args.frame_height_um,
                droplet_count: args.droplets,
                radius_range_um: (args.radius_min, args.radius_max),
                background_level: args.background,
                noise_amplitude: args.noise,
                transmission: args.transmission,
                mask_label: args.mask_label.clone(),
                loudness_db: args.loudness_db,
                spawn_frame: args.spawn_frame,
                seed,
            },
            &model,
        )?,
    };

    let (stack, truth) = render_scene(&spec, &model)?;
    let out = prepare_out_dir(out)?;
    save_stack(&out.join("stack"), &stack)
        .map_err(|e| CliError::UnwritableOutput(e.to_string()))?;

    let scene_value = serde_json::to_value(&spec).expect("scene specs serialize");
    write_json(
        &out.join("scene.json"),
        &serde_json::json!({"command": "synth"}),
        scene_value.clone(),
    )?;
    let config = serde_json::json!({"command": "synth", "scene": scene_value});
    write_json(
        &out.join("truth.json"),
        &config,
        serde_json::to_value(&truth).expect("scene truth serializes"),
    )?;
    println!(
        "rendered {} frame(s) of {} droplet(s) into stack/, with scene.json and truth.json",
        stack.len(),
        truth.droplets.len()
    );
    Ok(())
}
