use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use squeezelab_cli::commands::{self, Figure, PredictOverrides, Target};
use squeezelab_cli::{CliError, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

/// Squeezed-light source design: OPO threshold, escape efficiency,
/// squeezing levels and external-cavity SHG.
#[derive(Debug, Parser)]
#[command(name = "squeezelab", version)]
struct Cli {
    /// JSON configuration file (defaults to the bundled PPMgLN parameters).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Focusing factor, single-pass E_NL and d_eff inversion.
    Enl,
    /// Write the CSV data behind one or more figures.
    Reproduce {
        #[arg(value_enum, required = true)]
        figures: Vec<Figure>,
    },
    /// Locate an optimum and print a +/-10% sensitivity table.
    Optimize {
        #[arg(value_enum)]
        target: Target,
        /// Focusing parameter for `sigma` (defaults to the configured geometry).
        #[arg(long)]
        xi: Option<f64>,
    },
    /// Best squeezing over the normalized-pump grid with modified parameters.
    Predict {
        /// Pump-independent round-trip loss
        #[arg(long)]
        l0: Option<f64>,
        /// Pump-induced loss per watt of pump
        #[arg(long = "a-per-w")]
        a_per_w: Option<f64>,
        /// RMS local-oscillator phase error [deg]
        #[arg(long = "theta-deg")]
        theta_deg: Option<f64>,
        /// Output-coupler transmittance
        #[arg(long = "coupler-t")]
        coupler_t: Option<f64>,
        #[arg(long = "eta-homodyne")]
        eta_homodyne: Option<f64>,
        /// Analysis frequency [MHz]
        #[arg(long = "analysis-mhz")]
        analysis_mhz: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let Format::Csv = cli.format;
    let config = RunConfig::load(cli.config.as_deref())?;
    let model = config.resolve()?;
    let hash = config.content_hash();
    match cli.command {
        Command::Enl => {
            let report = commands::enl(&model)?;
            print!("{report}");
            if let Some(dir) = &cli.out {
                let path = report.to_csv(&hash).write_to(dir)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Reproduce { figures } => {
            let dir = cli.out.unwrap_or_else(|| PathBuf::from("."));
            // compute everything before touching the filesystem
            let artifacts = figures
                .iter()
                .map(|&f| commands::reproduce(f, &model, &hash))
                .collect::<Result<Vec<_>, _>>()?;
            for a in &artifacts {
                let path = a.write_to(&dir)?;
                println!("wrote {} ({} rows)", path.display(), a.rows.len());
            }
            if figures.contains(&Figure::Fig3a) {
                for gap in commands::threshold_gaps(&model)? {
                    println!(
                        "T = {}: model threshold {:.1} mW, measured {:.1} mW ({:+.1}%)",
                        gap.coupler,
                        gap.model * 1e3,
                        gap.measured * 1e3,
                        gap.relative() * 100.0
                    );
                }
            }
        }
        Command::Optimize { target, xi } => {
            let report = commands::optimize(target, &model, xi)?;
            print!("{report}");
            if let Some(dir) = &cli.out {
                let path = report.to_csv(&hash).write_to(dir)?;
                println!("wrote {}", path.display());
            }
        }
        Command::Predict {
            l0,
            a_per_w,
            theta_deg,
            coupler_t,
            eta_homodyne,
            analysis_mhz,
        } => {
            let overrides = PredictOverrides {
                l0,
                a_per_w,
                theta_deg,
                coupler: coupler_t,
                eta_homodyne,
                analysis_mhz,
            };
            let report = commands::predict(&model, overrides)?;
            print!("{report}");
            if let Some(w) = report.warning() {
                eprintln!("{w}");
            }
            if let Some(dir) = &cli.out {
                let path = report.to_csv(&hash).write_to(dir)?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("squeezelab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
