use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use difftomo::cli::{self, ReconstructInputs};
use difftomo::config::ExperimentConfig;
use difftomo::{Error, Result};

#[derive(Parser)]
#[command(name = "difftomo", version, about = "Diffraction tomography pipeline")]
struct Cli {
    /// Upper bound on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured phantom.
    Phantom(Common),
    /// Simulate a sinogram.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Phantom file; generated from the config when absent.
        #[arg(long)]
        phantom: Option<PathBuf>,
        /// Use direct quadrature of the Born integral instead of the NDFT.
        #[arg(long)]
        oracle: bool,
    },
    /// Estimate the Banach indicatrix.
    Indicatrix(Common),
    /// Rasterize the Fourier coverage.
    Coverage(Common),
    /// Reconstruct with the configured method.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sinogram: Option<PathBuf>,
        #[arg(long)]
        indicatrix: Option<PathBuf>,
        /// Ground truth phantom for metrics.json.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Rank volumes by PSNR against a reference.
    Compare {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        volumes: Vec<PathBuf>,
    },
    /// Check the Fourier diffraction theorem on simulated detector data.
    FdtCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_json(out: Option<&PathBuf>, name: &str, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), &text)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let load = |c: &Common| ExperimentConfig::load(&c.config);
    match cli.command {
        Command::Phantom(c) => println!("{}", cli::cmd_phantom(&load(&c)?, &c.out)?.display()),
        Command::Simulate { common, phantom, oracle } => {
            let file = cli::cmd_simulate(&load(&common)?, phantom.as_deref(), &common.out, oracle)?;
            println!("{}", file.display());
        }
        Command::Indicatrix(c) => println!("{}", cli::cmd_indicatrix(&load(&c)?, &c.out)?.display()),
        Command::Coverage(c) => println!("{}", cli::cmd_coverage(&load(&c)?, &c.out)?.display()),
        Command::Reconstruct { common, sinogram, indicatrix, truth } => {
            let inputs = ReconstructInputs {
                sinogram: sinogram.as_deref(),
                indicatrix: indicatrix.as_deref(),
                truth: truth.as_deref(),
            };
            for f in cli::cmd_reconstruct(&load(&common)?, inputs, &common.out)? {
                println!("{}", f.display());
            }
        }
        Command::Compare { reference, out, volumes } => {
            let table = cli::cmd_compare(&volumes, &reference)?;
            write_json(out.as_ref(), "compare.json", &table)?;
            println!("{}", serde_json::to_string_pretty(&table)?);
        }
        Command::FdtCheck { config, out } => {
            let reports = cli::cmd_fdt_check(&ExperimentConfig::load(&config)?)?;
            write_json(out.as_ref(), "fdt.json", &reports)?;
            println!("{:>10} {:>8} {:>14}", "t", "rows", "relative_l2");
            for r in &reports {
                println!("{:>10.4} {:>8} {:>14.3e}", r.t, r.rows.len(), r.relative_l2);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("difftomo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
