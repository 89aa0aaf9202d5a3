use std::path::{Path, PathBuf};

use clap::Args;
use dropscope_core::{
    brightness_series, build_report, efficacy::CONTROL_LABEL,
    photometry::DEFAULT_DECAY_FRACTION, series_metrics, EfficacyTrial,
};

use crate::commands::{load_trials, require_unit_fraction, RegionArg};
use crate::error::CliError;
use crate::output::{atomic_write, format_opt, format_sig, join_flags, prepare_out_dir, write_csv};
use crate::svg::bar_chart;

/// Compare mask conditions by the brightness pulses they let through.
#[derive(Debug, Args)]
pub struct MasksArgs {
    /// Stack directories, one per trial; every manifest needs a
    /// mask_label.
    #[arg(required = true, value_name = "STACK_DIR")]
    pub stacks: Vec<PathBuf>,
    /// Label of the uncovered reference group.
    #[arg(long, default_value = CONTROL_LABEL)]
    pub control: String,
    /// Frame rows included in the per-frame mean.
    #[arg(long, value_enum, default_value = "full")]
    pub region: RegionArg,
    /// Fraction of the peak excursion at which the pulse counts as
    /// dissipated.
    #[arg(long, default_value_t = DEFAULT_DECAY_FRACTION)]
    pub decay_fraction: f64,
}

pub fn run(args: &MasksArgs, out: &Path) -> Result<(), CliError> {
    require_unit_fraction("--decay-fraction", args.decay_fraction)?;
    let stacks = load_trials(&args.stacks)?;
    let out = prepare_out_dir(out)?;

    let mut trials = Vec::with_capacity(stacks.len());
    for stack in &stacks {
        let label = stack
            .manifest
            .mask_label
            .clone()
            .ok_or_else(|| CliError::MissingMaskLabel(stack.manifest.trial_id.clone()))?;
        let series = brightness_series(stack, args.region.to_region());
        let metrics = series_metrics(&series, args.decay_fraction);
        trials.push(EfficacyTrial {
            label,
            peak_value: metrics.peak_value,
            baseline: metrics.baseline,
        });
    }

    let trial_ids: Vec<&str> = stacks
        .iter()
        .map(|s| s.manifest.trial_id.as_str())
        .collect();
    let config = serde_json::json!({
        "command": "masks",
        "control": args.control,
        "region": args.region.name(),
        "decay_fraction": args.decay_fraction,
        "trials": trial_ids,
    });

    let report = build_report(&trials, Some(&args.control))?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                r.trial_count.to_string(),
                format_sig(r.mean_peak),
                format_sig(r.std_peak),
                format_sig(r.cv),
                format_opt(r.blocking_efficiency),
                r.rank.to_string(),
                join_flags(&r.flags),
            ]
        })
        .collect();
    write_csv(
        &out.join("report.csv"),
        &config,
        "mask_label,trial_count,mean_peak,std_peak,cv,blocking_efficiency,rank,flags",
        &rows,
    )?;

    let bars: Vec<(String, f64)> = report
        .rows
        .iter()
        .map(|r| (r.label.clone(), r.mean_peak))
        .collect();
    let svg = bar_chart(&config, "mean peak brightness by condition", "mean peak", &bars);
    atomic_write(&out.join("efficacy.svg"), svg.as_bytes())?;
    println!(
        "wrote report.csv and efficacy.svg: {} condition(s), control {:?}",
        report.rows.len(),
        report.control_label
    );
    Ok(())
}
