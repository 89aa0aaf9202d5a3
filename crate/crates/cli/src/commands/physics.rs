use std::path::Path;

use clap::Args;
use dropscope_core::SedimentationModel;

use crate::commands::require_positive;
use crate::error::CliError;
use crate::output::{format_sig, prepare_out_dir, write_csv};

fn default_model() -> SedimentationModel {
    SedimentationModel::default()
}

/// Tabulate settling times for chosen droplet radii.
#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Droplet radius in micrometers; repeat for several rows.
    #[arg(long = "radius", value_name = "UM", default_values_t = [1.0, 10.0, 100.0])]
    pub radii: Vec<f64>,
    /// Fall height in micrometers.
    #[arg(long, default_value_t = 1.5e6)]
    pub height_um: f64,
    /// Air viscosity in g/(um*s).
    #[arg(long, default_value_t = default_model().viscosity)]
    pub viscosity: f64,
    /// Droplet density in g/um^3.
    #[arg(long, default_value_t = default_model().density)]
    pub density: f64,
    /// Gravitational acceleration in um/s^2.
    #[arg(long, default_value_t = default_model().gravity)]
    pub gravity: f64,
}

pub fn run(args: &PhysicsArgs, out: &Path) -> Result<(), CliError> {
    require_positive("--viscosity", args.viscosity)?;
    require_positive("--density", args.density)?;
    require_positive("--gravity", args.gravity)?;
    let model = SedimentationModel {
        viscosity: args.viscosity,
        density: args.density,
        gravity: args.gravity,
    };
    let out = prepare_out_dir(out)?;

    let config = serde_json::json!({
        "command": "physics",
        "radii": args.radii,
        "height_um": args.height_um,
        "viscosity": args.viscosity,
        "density": args.density,
        "gravity": args.gravity,
    });

    let mut rows = Vec::with_capacity(args.radii.len());
    for &radius in &args.radii {
        let time = model.sedimentation_time(radius, args.height_um)?;
        println!(
            "radius {} um settles {} um in {} s",
            format_sig(radius),
            format_sig(args.height_um),
            format_sig(time)
        );
        rows.push(vec![
            format_sig(radius),
            format_sig(args.height_um),
            format_sig(time),
        ]);
    }
    write_csv(
        &out.join("physics.csv"),
        &config,
        "radius_um,height_um,sedimentation_time_s",
        &rows,
    )?;
    println!("wrote physics.csv ({} row(s))", rows.len());
    Ok(())
}
