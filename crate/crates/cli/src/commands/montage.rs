use std::path::{Path, PathBuf};

use clap::Args;
use dropscope_core::load_stack;

use crate::commands::require_positive;
use crate::error::CliError;
use crate::output::prepare_out_dir;
use crate::render::{build_montage, compute_stride, panel_count, write_gray_png};

/// Contact sheet of evenly sampled, contrast-stretched frames.
#[derive(Debug, Args)]
pub struct MontageArgs {
    /// Stack directory for one trial.
    #[arg(value_name = "STACK_DIR")]
    pub stack: PathBuf,
    /// Time between panels in milliseconds; rounded to whole frames.
    #[arg(long, default_value_t = 38.0)]
    pub interval_ms: f64,
    /// Fraction of pixels saturated at each end of the per-panel stretch.
    #[arg(long, default_value_t = 0.005)]
    pub saturation: f64,
}

pub fn run(args: &MontageArgs, out: &Path) -> Result<(), CliError> {
    require_positive("--interval-ms", args.interval_ms)?;
    let stack = load_stack(&args.stack)?;
    let stride = compute_stride(args.interval_ms, stack.manifest.fps);
    let out = prepare_out_dir(out)?;

    let config = serde_json::json!({
        "command": "montage",
        "trial": stack.manifest.trial_id,
        "interval_ms": args.interval_ms,
        "stride": stride,
        "saturation": args.saturation,
        "fps": stack.manifest.fps,
    });

    let montage = build_montage(&stack.frames, stride, args.saturation)?;
    let (w, h) = montage.dimensions();
    write_gray_png(&out.join("montage.png"), &montage, &config)?;
    println!(
        "wrote montage.png: {} panels every {} frame(s), {w}x{h}",
        panel_count(stack.len(), stride),
        stride
    );
    Ok(())
}
