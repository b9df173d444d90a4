use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cachejt_cli::config::Profile;
use cachejt_cli::{load_config, plots, runner};

/// STP experiments for cache-enabled cellular networks with BS joint
/// transmission: analytic curves, Monte Carlo validation, optimal
/// probabilistic placement, and baseline comparisons.
#[derive(Parser)]
#[command(name = "cachejt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct RunArgs {
    /// Config file path or preset name (fig2, fig3, fig5, fig6a..fig6e).
    #[arg(long)]
    config: String,
    /// Output directory for CSV tables and auxiliary files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's simulation profile.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic STP versus the sweep axis, with Monte Carlo validation.
    Curve(RunArgs),
    /// Optimal placement probabilities per sweep point.
    Optimize(RunArgs),
    /// Optimized placement against the MPC, IIDC, and UDC baselines.
    Compare(RunArgs),
    /// Gnuplot script generation from a runner CSV.
    Plots {
        /// CSV produced by curve, optimize, or compare.
        #[arg(long)]
        csv: PathBuf,
        /// Output directory for the script (defaults to the CSV's).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn apply_overrides(args: &RunArgs) -> Result<cachejt_cli::config::ExperimentConfig> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.run.master_seed = seed;
    }
    if let Some(profile) = args.profile {
        cfg.run.profile = match profile {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Curve(args) => {
            let cfg = apply_overrides(&args)?;
            let csv = runner::run_curve(&cfg, &args.out)?;
            println!("{}", csv.display());
        }
        Command::Optimize(args) => {
            let cfg = apply_overrides(&args)?;
            let csv = runner::run_optimize(&cfg, &args.out)?;
            println!("{}", csv.display());
        }
        Command::Compare(args) => {
            let cfg = apply_overrides(&args)?;
            let csv = runner::run_compare(&cfg, &args.out)?;
            println!("{}", csv.display());
        }
        Command::Plots { csv, out } => {
            let out_dir = out.unwrap_or_else(|| {
                csv.parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let script = plots::emit_plots(&csv, &out_dir)?;
            println!("{}", script.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
