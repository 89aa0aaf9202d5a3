mod commands;
mod error;
mod output;
mod render;
mod svg;

use clap::{Parser, Subcommand};
use std::path::PathBuf;

use crate::error::CliError;

const EXIT_CODES_HELP: &str = "Exit codes:
  0   success
  2   command line usage error
  10  unreadable or inconsistent input stack, or duplicate trial ids
  11  image processing error
  12  photometry error
  13  physics parameter error
  14  tracking error
  15  efficacy report error, or a trial without a mask label
  16  scene synthesis error
  17  unwritable output
  18  montage stride exceeds the stack
  19  invalid flag value";

/// Analyze slow-motion recordings of fluorescent droplet events: brightness
/// pulses, droplet tracks, settling-based radius estimates, mask efficacy
/// reports and synthetic test scenes.
#[derive(Parser)]
#[command(name = "dropscope", version, after_long_help = EXIT_CODES_HELP)]
struct Cli {
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 0 picks the library default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed for generated scenes.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean brightness per frame plus pulse metrics per trial.
    Series(commands::series::SeriesArgs),
    /// Contact sheet of evenly sampled frames.
    Montage(commands::montage::MontageArgs),
    /// Segment droplets, link them across frames and estimate radii.
    Track(commands::track::TrackArgs),
    /// Compare mask conditions by their brightness pulses.
    Masks(commands::masks::MasksArgs),
    /// Tabulate settling times for chosen radii.
    Physics(commands::physics::PhysicsArgs),
    /// Render a synthetic recording with known ground truth.
    Synth(commands::synth::SynthArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Series(args) => commands::series::run(args, &cli.out),
        Command::Montage(args) => commands::montage::run(args, &cli.out),
        Command::Track(args) => commands::track::run(args, &cli.out),
        Command::Masks(args) => commands::masks::run(args, &cli.out),
        Command::Physics(args) => commands::physics::run(args, &cli.out),
        Command::Synth(args) => commands::synth::run(args, &cli.out, cli.seed),
    }
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
