//! Command-line surface of the photon-pair source toolkit: every computation
//! is a subcommand reading one TOML config file and writing CSV/JSON under an
//! output directory. Flags override individual config values.
//!
//! Exit codes: 0 success, 2 no numerical solution, 64 usage error,
//! 65 domain error (material windows, resonance bands, bad config).

mod commands;
mod output;

use clap::{Parser, Subcommand};

use biphoton_core::fiber::Variant;
use biphoton_core::Error as CoreError;

use std::path::PathBuf;
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO_SOLUTION: u8 = 2;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_DOMAIN: u8 = 65;

#[derive(Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Gas-filled single-ring PCF photon-pair source: dispersion, phase matching, \
             joint spectra and counting statistics"
)]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "config/default.toml")]
    config: PathBuf,
    /// Output directory (overrides the config's `output.directory`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the signal/idler wavelengths over a pressure range.
    TuningCurve {
        /// Lowest pressure, bar.
        #[arg(long, default_value_t = 0.79)]
        pmin: f64,
        /// Highest pressure, bar.
        #[arg(long, default_value_t = 1.32)]
        pmax: f64,
        /// Pressure step, bar.
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Dispersion model variant.
        #[arg(long, value_enum, default_value_t = VariantArg::Resonant)]
        variant: VariantArg,
    },
    /// Joint spectral intensity grid with marginals.
    Jsi {
        /// Gas pressure, bar (defaults to the config value).
        #[arg(long)]
        pressure: Option<f64>,
        /// Grid points per axis.
        #[arg(long)]
        n: Option<usize>,
        /// Signal window, nm, as `lo:hi`.
        #[arg(long, value_parser = parse_window)]
        signal_window: Option<(f64, f64)>,
        /// Idler window, nm, as `lo:hi`.
        #[arg(long, value_parser = parse_window)]
        idler_window: Option<(f64, f64)>,
    },
    /// Coincidence and singles integrals versus idler filter bandwidth.
    FilteredRates {
        /// Comma-separated idler bandwidths, nm.
        #[arg(long, value_delimiter = ',')]
        bandwidths: Option<Vec<f64>>,
    },
    /// Fiber transmittance spectrum with resonance dips.
    Transmittance {
        #[arg(long, default_value_t = 280.0)]
        lmin: f64,
        #[arg(long, default_value_t = 850.0)]
        lmax: f64,
        #[arg(long, default_value_t = 1141)]
        points: usize,
    },
    /// Zero-dispersion wavelength at one pressure.
    Zdw {
        /// Gas pressure, bar (defaults to the config value).
        #[arg(long)]
        pressure: Option<f64>,
    },
    /// Monte Carlo time-tag run: histogram, g2 and CAR.
    Montecarlo {
        /// Number of pump pulses.
        #[arg(long)]
        pulses: Option<u64>,
        /// Average pump power, mW (defaults to the pump config).
        #[arg(long)]
        power: Option<f64>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Coincidence rate and CAR versus pump power with fitted exponents.
    PowerSweep {
        /// Comma-separated pump powers, mW.
        #[arg(long, value_delimiter = ',')]
        powers: Option<Vec<f64>>,
        /// Number of pump pulses per power.
        #[arg(long)]
        pulses: Option<u64>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Resonant,
    Baseline,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Resonant => Variant::Resonant,
            VariantArg::Baseline => Variant::Baseline,
        }
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `lo:hi`, got `{s}`"))?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("bad `{a}`: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("bad `{b}`: {e}"))?;
    Ok((lo, hi))
}

fn exit_for(err: &CoreError) -> u8 {
    match err {
        CoreError::NoRoot { .. }
        | CoreError::NoPhaseMatching { .. }
        | CoreError::NonConvergence { .. } => EXIT_NO_SOLUTION,
        _ => EXIT_DOMAIN,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let ctx = match commands::Context::load(&cli.config, cli.out_dir.as_deref()) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };

    let outcome = match cli.command {
        Command::TuningCurve {
            pmin,
            pmax,
            step,
            variant,
        } => {
            if pmin > pmax || step <= 0.0 {
                eprintln!("error: need pmin <= pmax and step > 0");
                return ExitCode::from(EXIT_USAGE);
            }
            commands::tuning_curve(&ctx, pmin, pmax, step, variant.into())
        }
        Command::Jsi {
            pressure,
            n,
            signal_window,
            idler_window,
        } => commands::jsi(&ctx, pressure, n, signal_window, idler_window),
        Command::FilteredRates { bandwidths } => commands::filtered_rates(&ctx, bandwidths),
        Command::Transmittance { lmin, lmax, points } => {
            if lmin >= lmax || points < 2 {
                eprintln!("error: need lmin < lmax and points >= 2");
                return ExitCode::from(EXIT_USAGE);
            }
            commands::transmittance(&ctx, lmin, lmax, points)
        }
        Command::Zdw { pressure } => commands::zdw(&ctx, pressure),
        Command::Montecarlo {
            pulses,
            power,
            seed,
        } => commands::montecarlo(&ctx, pulses, power, seed),
        Command::PowerSweep {
            powers,
            pulses,
            seed,
        } => commands::power_sweep(&ctx, powers, pulses, seed),
    };

    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
