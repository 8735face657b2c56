use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use walsh_recon_cli::config::OrderingName;
use walsh_recon_cli::runner::{
    run_bound, run_comparison, run_reconstruct, run_scenario, run_transform, RunOverrides,
};
use walsh_recon_cli::CliError;

/// Walsh reconstruction of time-varying fields with a decoupled qubit sensor.
#[derive(Parser)]
#[command(name = "walsh-recon", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed for all Monte-Carlo streams (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Quadrature points per dyadic cell; a power of two (default 64).
    #[arg(long, global = true)]
    grid_multiplier: Option<usize>,

    /// Spectrum output ordering: sequency, paley, or hadamard.
    #[arg(long, global = true)]
    ordering: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Walsh-transform a sampled waveform CSV into a spectrum file.
    Transform {
        /// Two-column CSV `time_us,field_nT` with header.
        #[arg(long)]
        input: PathBuf,
        /// Transform order n; the spectrum has 2^n coefficients.
        #[arg(long)]
        order: u32,
        /// Acquisition period; defaults to the trace length.
        #[arg(long)]
        period_us: Option<f64>,
    },
    /// Inverse-transform a spectrum file into a piecewise-constant trace.
    Reconstruct {
        /// Spectrum JSON produced by `transform` or `simulate`.
        #[arg(long)]
        spectrum: PathBuf,
    },
    /// Run a full simulated acquisition scenario from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare Walsh reconstruction against sequential acquisition.
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Truncation-error bound for a waveform at a given order.
    Bound {
        /// Scenario config supplying the waveform (and default order/period).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sampled waveform CSV instead of a config.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        order: Option<u32>,
        #[arg(long)]
        period_us: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ordering = cli.ordering.as_deref().map(OrderingName::parse).transpose()?;
    let overrides = RunOverrides {
        seed: cli.seed,
        out_dir: cli.out_dir,
        grid_multiplier: cli.grid_multiplier,
        ordering,
    };
    match cli.command {
        Command::Transform { input, order, period_us } => {
            let path = run_transform(&input, order, period_us, &overrides)?;
            println!("wrote {}", path.display());
        }
        Command::Reconstruct { spectrum } => {
            let path = run_reconstruct(&spectrum, &overrides)?;
            println!("wrote {}", path.display());
        }
        Command::Simulate { config } => {
            let artifacts = run_scenario(&config, &overrides)?;
            println!(
                "wrote {} (l2 error {:.6e} nT, bound {:.6e} nT)",
                artifacts.out_dir.display(),
                artifacts.l2_error_nt,
                artifacts.truncation_bound_nt,
            );
        }
        Command::Compare { config } => {
            let artifacts = run_comparison(&config, &overrides)?;
            for cmp in &artifacts.sequential {
                println!(
                    "N={}: measured sensitivity ratio {:.3} (analytic {:.3}), \
                     time ratio {:.3} (analytic {:.3})",
                    cmp.n_points,
                    cmp.measured_sensitivity_ratio,
                    cmp.analytic_sensitivity_ratio,
                    cmp.measured_time_ratio,
                    cmp.analytic_time_ratio,
                );
            }
            println!("wrote {}", artifacts.out_dir.join("comparison.json").display());
        }
        Command::Bound { config, input, order, period_us } => {
            let report = run_bound(config.as_deref(), input.as_deref(), order, period_us)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("valid json"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("walsh-recon: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
