use std::path::{Path, PathBuf};

use clap::Args;
use dropscope_core::{
    fixed_threshold, link_detections, measure_track, otsu_threshold, segment, Detection,
    FrameStack, LinkConfig, MeasureConfig, SedimentationModel, SegmentConfig, TrackingError,
};
use rayon::prelude::*;

use crate::commands::{
    load_trials, parse_connectivity, require_non_negative, require_positive, ThresholdArg,
};
use crate::error::CliError;
use crate::output::{format_opt, format_sig, prepare_out_dir, write_csv};
use crate::render::{track_overlay, write_rgb_png};

/// Segment droplets, link them across frames and estimate radii from
/// their falls.
#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Stack directories, one per trial.
    #[arg(required = true, value_name = "STACK_DIR")]
    pub stacks: Vec<PathBuf>,
    /// Foreground threshold: `otsu` or `fixed:<level>`.
    #[arg(long, default_value = "otsu")]
    pub threshold: String,
    /// Drop components smaller than this many pixels.
    #[arg(long, default_value_t = 3)]
    pub min_area: u32,
    /// Pixel connectivity for components: 4 or 8.
    #[arg(long, default_value_t = 8)]
    pub connectivity: u8,
    /// Maximum frame-to-frame centroid jump in pixels.
    #[arg(long, default_value_t = 25.0)]
    pub gate_px: f64,
    /// Frames a droplet may go undetected before its track closes.
    #[arg(long, default_value_t = 2)]
    pub max_gap: usize,
    /// Tracks ending within this many pixels of the bottom edge count as
    /// complete falls.
    #[arg(long, default_value_t = 3.0)]
    pub bottom_margin_px: f64,
    /// Tracks ending within this many pixels of a side edge count as
    /// side exits.
    #[arg(long, default_value_t = 3.0)]
    pub side_margin_px: f64,
    /// Also write one trajectory overlay image per trial.
    #[arg(long)]
    pub overlay: bool,
    /// Contrast stretch saturation for overlay backgrounds.
    #[arg(long, default_value_t = 0.005)]
    pub saturation: f64,
}

fn detect_stack(
    stack: &FrameStack,
    threshold: ThresholdArg,
    config: &SegmentConfig,
) -> Result<Vec<Detection>, CliError> {
    let per_frame: Vec<Vec<Detection>> = stack
        .frames
        .par_iter()
        .enumerate()
        .map(|(i, frame)| {
            let mask = match threshold {
                ThresholdArg::Otsu => otsu_threshold(frame).mask,
                ThresholdArg::Fixed(level) => fixed_threshold(frame, level),
            };
            segment(frame, &mask, i, config)
        })
        .collect::<Result<_, _>>()?;
    Ok(per_frame.into_iter().flatten().collect())
}

pub fn run(args: &TrackArgs, out: &Path) -> Result<(), CliError> {
    let threshold = ThresholdArg::parse(&args.threshold)?;
    let connectivity = parse_connectivity(args.connectivity)?;
    require_positive("--gate-px", args.gate_px)?;
    require_non_negative("--bottom-margin-px", args.bottom_margin_px)?;
    require_non_negative("--side-margin-px", args.side_margin_px)?;

    let stacks = load_trials(&args.stacks)?;
    let out = prepare_out_dir(out)?;
    let segment_config = SegmentConfig {
        connectivity,
        min_area: args.min_area,
    };
    let link_config = LinkConfig {
        gate_px: args.gate_px,
        max_gap_frames: args.max_gap,
    };
    let measure_config = MeasureConfig {
        bottom_margin_px: args.bottom_margin_px,
        side_margin_px: args.side_margin_px,
    };
    let model = SedimentationModel::default();

    let trial_ids: Vec<&str> = stacks
        .iter()
        .map(|s| s.manifest.trial_id.as_str())
        .collect();
    let config = serde_json::json!({
        "command": "track",
        "threshold": threshold.describe(),
        "min_area": args.min_area,
        "connectivity": args.connectivity,
        "gate_px": args.gate_px,
        "max_gap": args.max_gap,
        "bottom_margin_px": args.bottom_margin_px,
        "side_margin_px": args.side_margin_px,
        "overlay": args.overlay,
        "saturation": args.saturation,
        "trials": trial_ids,
    });

    let mut detection_rows = Vec::new();
    let mut track_rows = Vec::new();
    let mut track_count = 0usize;
    for (stack_index, stack) in stacks.iter().enumerate() {
        let trial_id = &stack.manifest.trial_id;
        let detections = detect_stack(stack, threshold, &segment_config)?;
        for d in &detections {
            detection_rows.push(vec![
                trial_id.clone(),
                d.frame_index.to_string(),
                format_sig(d.x_px),
                format_sig(d.y_px),
                d.area_px.to_string(),
                format_sig(d.mean_intensity),
                d.peak_intensity.to_string(),
            ]);
        }
        let tracks = link_detections(&detections, &link_config);
        track_count += tracks.len();
        let geometry = stack.geometry();
        for track in &tracks {
            match measure_track(track, &geometry, &model, &measure_config) {
                Ok(m) => track_rows.push(vec![
                    trial_id.clone(),
                    m.track_id.to_string(),
                    m.start_frame.to_string(),
                    m.end_frame.to_string(),
                    format_sig(m.fall_px),
                    format_sig(m.fall_um),
                    format_sig(m.duration_s),
                    format_opt(m.radius_um_est),
                    m.status.flag().to_string(),
                ]),
                Err(TrackingError::TooShort(_)) => track_rows.push(vec![
                    trial_id.clone(),
                    track.track_id.to_string(),
                    track.first().frame_index.to_string(),
                    track.last().frame_index.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "too_short".to_string(),
                ]),
            }
        }
        if args.overlay {
            let (w, h, rgb) = track_overlay(&stack.frames, &tracks, args.saturation)?;
            let name = format!("overlay_{stack_index:03}.png");
            let overlay_config = serde_json::json!({
                "command": "track",
                "trial": trial_id,
                "threshold": threshold.describe(),
                "saturation": args.saturation,
            });
            write_rgb_png(&out.join(name), w, h, &rgb, &overlay_config)?;
        }
    }

    write_csv(
        &out.join("detections.csv"),
        &config,
        "trial_id,frame_index,x_px,y_px,area_px,mean_intensity,peak_intensity",
        &detection_rows,
    )?;
    write_csv(
        &out.join("tracks.csv"),
        &config,
        "trial_id,track_id,start_frame,end_frame,fall_px,fall_um,duration_s,radius_um_est,flags",
        &track_rows,
    )?;
    println!(
        "wrote detections.csv ({} detections) and tracks.csv ({} tracks) for {} trial(s)",
        detection_rows.len(),
        track_count,
        stacks.len()
    );
    Ok(())
}
