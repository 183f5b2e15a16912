use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use photocorr::cli::{self, exit, Command, Overrides};

#[derive(Parser)]
#[command(
    name = "photocorr",
    version,
    about = "Spectra and frequency-filtered photon correlations"
)]
struct Args {
    #[command(subcommand)]
    command: Sub,

    /// Configuration file (`[section]` / `key = value`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    rabi: Option<f64>,
    #[arg(long, global = true)]
    gamma_filter: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    grid_max: Option<f64>,
    #[arg(long, global = true)]
    grid_count: Option<usize>,
    /// `gamma` or `omega_plus`.
    #[arg(long, global = true)]
    units: Option<String>,
    /// Photon number of the bundle resonance.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    tau_max: Option<f64>,
    #[arg(long, global = true)]
    tau_count: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Emission spectrum, unfiltered or seen through a sensor.
    Spectrum,
    /// Two-photon correlation map over a square frequency grid.
    G2map,
    /// Delayed second-order correlation.
    G2tau,
    /// Emitter coupled to a cavity at the n-photon resonance.
    Bundle,
    /// Sample the three leapfrog antidiagonals off the peaks.
    LeapfrogCheck,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::G2map => Command::G2Map,
        Sub::G2tau => Command::G2Tau,
        Sub::Bundle => Command::Bundle,
        Sub::LeapfrogCheck => Command::LeapfrogCheck,
    };

    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(exit::CONFIG as u8);
            }
        },
        None => None,
    };

    let mut o = Overrides::new();
    o.set_opt("physics", "rabi", args.rabi)
        .set_opt("filter", "gamma_filter", args.gamma_filter)
        .set_opt("grid", "min", args.grid_min)
        .set_opt("grid", "max", args.grid_max)
        .set_opt("grid", "count", args.grid_count)
        .set_opt("grid", "units", args.units)
        .set_opt("bundle", "n", args.n)
        .set_opt("tau", "tau_max", args.tau_max)
        .set_opt("tau", "tau_count", args.tau_count)
        .set_opt("run", "workers", args.workers)
        .set_opt(
            "run",
            "output_dir",
            args.out.map(|p| p.display().to_string()),
        );

    let config = match cli::parse_config(command, text.as_deref(), &o) {
        Ok(c) => c,
        Err(errors) => {
            eprintln!("configuration errors:\n{errors}");
            return ExitCode::from(exit::CONFIG as u8);
        }
    };

    match cli::run(&config) {
        Ok(summary) => {
            print!("{}", summary.report);
            println!(
                "wrote {} ({:.2} s)",
                config.output_dir.display(),
                summary.wall_time
            );
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if failure.code == exit::CHECK_FAILED {
                print!("{}", failure.message);
                println!();
            } else {
                eprintln!("error: {}", failure.message);
            }
            ExitCode::from(failure.code as u8)
        }
    }
}
