//! `qmupl` — scenario runner for the free-particle collapse model.
//!
//! Subcommands: constants, single, double, grid, master, hitting, ensemble,
//! verify. Every run writes CSV (optionally SVG) artifacts plus a manifest
//! listing each file with its content hash.
//!
//! Exit codes: 0 success, 2 configuration/schema violation, 3 numeric
//! failure, 4 verification failure.

mod commands;
mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(name = "qmupl", version, about = "Free-particle collapse-model simulator")]
struct Cli {
    /// Flat key-value configuration file (see README for the schema).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for all stochastic runs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (default `out/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, global = true, value_parser = ["csv", "svg", "both"])]
    format: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ParticleArgs {
    /// Particle preset: electron | nucleon | gram | earth | custom.
    #[arg(long)]
    preset: Option<String>,

    /// Mass in kg (with --preset custom).
    #[arg(long)]
    mass_kg: Option<f64>,

    /// Number of nucleon masses (alternative to --mass-kg).
    #[arg(long)]
    nucleons: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived constants table for a particle preset.
    Constants(ParticleArgs),

    /// Single-Gaussian spread curves (collapse vs free Schrödinger) and one
    /// sampled stochastic trajectory.
    Single {
        #[command(flatten)]
        particle: ParticleArgs,
        /// Initial position spread in metres.
        #[arg(long)]
        sigma0: Option<f64>,
        /// Comma-separated family of initial spreads (metres) for the
        /// localization-threshold sweep.
        #[arg(long)]
        sigma0_list: Option<String>,
        /// Horizon in units of 1/ω.
        #[arg(long)]
        horizon: Option<f64>,
        /// Euler–Maruyama step (dimensionless) for the sampled path.
        #[arg(long)]
        dt: Option<f64>,
    },

    /// Fully coupled double-Gaussian trajectories.
    Double {
        /// Initial peak separation in units of ℓ.
        #[arg(long)]
        x0: Option<f64>,
        /// Initial wavenumber separation (units 1/ℓ).
        #[arg(long)]
        k0: Option<f64>,
        /// Initial log weight ratio Γ₀.
        #[arg(long)]
        gamma0: Option<f64>,
        /// Suppression threshold b.
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
    },

    /// Direct grid solution of the nonlinear equation.
    Grid {
        /// Initial state: single | double.
        #[arg(long)]
        scenario: Option<String>,
        /// Grid points (power of two).
        #[arg(long)]
        n: Option<usize>,
        /// Domain length in units of ℓ.
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        /// Separation for the double scenario (units of ℓ).
        #[arg(long)]
        x0: Option<f64>,
        /// Comma-separated snapshot times (dimensionless).
        #[arg(long)]
        snapshots: Option<String>,
    },

    /// Master-equation density against the pure Schrödinger density.
    Master {
        /// Evaluation time (dimensionless).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        length: Option<f64>,
    },

    /// Reduced-equation hitting-time Monte Carlo with closed-form scoring.
    Hitting {
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        b0: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        dt_s: Option<f64>,
        #[arg(long)]
        s_max: Option<f64>,
        #[arg(long, short = 'n')]
        n_paths: Option<usize>,
    },

    /// Moment statistics of a registered scenario against its oracle.
    Ensemble {
        /// Scenario name (single-means, linear-martingale,
        /// grid-linear-martingale, grid-double-delta-a, grid-mean-density).
        #[arg(long)]
        scenario: Option<String>,
        #[arg(long, short = 'n')]
        n_paths: Option<usize>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
    },

    /// Run a verification suite (closed-forms, monte-carlo, grid-vs-gauss,
    /// grid-ensembles, magnitudes, bounds, all).
    Verify {
        /// Suite name.
        suite: Option<String>,
        /// Path-count override for the Monte Carlo criteria.
        #[arg(long, short = 'n')]
        n_paths: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match Config::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    let ctx = commands::Context {
        config,
        seed: cli.seed,
        out: cli.out.clone(),
        format: cli.format.clone(),
    };
    let result = match &cli.command {
        Command::Constants(p) => commands::constants(&ctx, p),
        Command::Single {
            particle,
            sigma0,
            sigma0_list,
            horizon,
            dt,
        } => commands::single(&ctx, particle, *sigma0, sigma0_list.as_deref(), *horizon, *dt),
        Command::Double {
            x0,
            k0,
            gamma0,
            b,
            dt,
            horizon,
            n_paths,
        } => commands::double(&ctx, *x0, *k0, *gamma0, *b, *dt, *horizon, *n_paths),
        Command::Grid {
            scenario,
            n,
            length,
            dt,
            horizon,
            x0,
            snapshots,
        } => commands::grid(
            &ctx,
            scenario.as_deref(),
            *n,
            *length,
            *dt,
            *horizon,
            *x0,
            snapshots.as_deref(),
        ),
        Command::Master { t, n, length } => commands::master(&ctx, *t, *n, *length),
        Command::Hitting {
            b,
            b0,
            eta,
            dt_s,
            s_max,
            n_paths,
        } => commands::hitting(&ctx, *b, *b0, *eta, *dt_s, *s_max, *n_paths),
        Command::Ensemble {
            scenario,
            n_paths,
            dt,
            steps,
            record_every,
        } => commands::ensemble(
            &ctx,
            scenario.as_deref(),
            *n_paths,
            *dt,
            *steps,
            *record_every,
        ),
        Command::Verify { suite, n_paths } => commands::verify(&ctx, suite.as_deref(), *n_paths),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
