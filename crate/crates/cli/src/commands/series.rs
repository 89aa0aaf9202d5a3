use std::path::{Path, PathBuf};

use clap::Args;
use dropscope_core::{brightness_series, photometry::DEFAULT_DECAY_FRACTION, series_metrics};

use crate::commands::{load_trials, require_unit_fraction, RegionArg};
use crate::error::CliError;
use crate::output::{atomic_write, format_opt, format_sig, join_flags, prepare_out_dir, write_csv};
use crate::svg::{line_plot, LineSeries};

/// Per-frame brightness and pulse metrics for one or more trials.
#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Stack directories, one per trial.
    #[arg(required = true, value_name = "STACK_DIR")]
    pub stacks: Vec<PathBuf>,
    /// Frame rows included in the per-frame mean.
    #[arg(long, value_enum, default_value = "full")]
    pub region: RegionArg,
    /// Fraction of the peak excursion at which the pulse counts as
    /// dissipated.
    #[arg(long, default_value_t = DEFAULT_DECAY_FRACTION)]
    pub decay_fraction: f64,
}

pub fn run(args: &SeriesArgs, out: &Path) -> Result<(), CliError> {
    require_unit_fraction("--decay-fraction", args.decay_fraction)?;
    let stacks = load_trials(&args.stacks)?;
    let out = prepare_out_dir(out)?;

    let trial_ids: Vec<&str> = stacks
        .iter()
        .map(|s| s.manifest.trial_id.as_str())
        .collect();
    let config = serde_json::json!({
        "command": "series",
        "region": args.region.name(),
        "decay_fraction": args.decay_fraction,
        "trials": trial_ids,
    });

    let mut series_rows = Vec::new();
    let mut metrics_rows = Vec::new();
    let mut lines = Vec::new();
    for stack in &stacks {
        let series = brightness_series(stack, args.region.to_region());
        for (i, &v) in series.values.iter().enumerate() {
            series_rows.push(vec![
                series.trial_id.clone(),
                i.to_string(),
                format_sig(series.time_s(i)),
                format_sig(v),
            ]);
        }
        let metrics = series_metrics(&series, args.decay_fraction);
        metrics_rows.push(vec![
            series.trial_id.clone(),
            format_sig(metrics.peak_value),
            metrics.peak_frame.to_string(),
            format_sig(metrics.peak_time_s),
            format_opt(metrics.dissipation_s),
            format_sig(metrics.baseline),
            join_flags(&metrics.flags),
        ]);
        lines.push(LineSeries {
            label: series.trial_id.clone(),
            points: series
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| (series.time_s(i), v))
                .collect(),
        });
    }

    write_csv(
        &out.join("series.csv"),
        &config,
        "trial_id,frame_index,time_s,mean_brightness",
        &series_rows,
    )?;
    write_csv(
        &out.join("metrics.csv"),
        &config,
        "trial_id,peak_value,peak_frame,peak_time_s,dissipation_s,baseline,flags",
        &metrics_rows,
    )?;
    let svg = line_plot(
        &config,
        "region brightness over time",
        "time (s)",
        "mean brightness",
        &lines,
    );
    atomic_write(&out.join("series.svg"), svg.as_bytes())?;
    println!(
        "wrote series.csv, metrics.csv, series.svg for {} trial(s)",
        stacks.len()
    );
    Ok(())
}
