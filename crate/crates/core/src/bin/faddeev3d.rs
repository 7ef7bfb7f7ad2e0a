use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use faddeev3d::io::{parse_config, run, Mode};
use faddeev3d::{Error, Result};

#[derive(Parser)]
#[command(name = "faddeev3d", version, about = "Three-dimensional Faddeev solver for three-body systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Three-body binding energy, Faddeev components and wave-function surfaces.
    Bound {
        #[command(flatten)]
        common: Common,
    },
    /// Two-body bound states of every pair.
    Twobody {
        #[command(flatten)]
        common: Common,
    },
    /// Boundary curves of the logarithmic-singularity region.
    SingularityMap {
        #[command(flatten)]
        common: Common,
        /// Scattering energy in MeV.
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
        /// Green-function variant 1..=6.
        #[arg(long)]
        variant: Option<u8>,
    },
    /// Driving terms and iterated solution of the inhomogeneous system.
    ScatterDrive {
        #[command(flatten)]
        common: Common,
        /// Three-body energy in MeV.
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
        /// Beam momentum in MeV.
        #[arg(long)]
        q0: Option<f64>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    let (mode, common) = match &cli.command {
        Command::Bound { common } => (Mode::Bound, common),
        Command::Twobody { common } => (Mode::Twobody, common),
        Command::SingularityMap { common, .. } => (Mode::SingularityMap, common),
        Command::ScatterDrive { common, .. } => (Mode::ScatterDrive, common),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let mut config = parse_config(&common.config, Some(mode))?;
    if let Some(out) = &common.out {
        config.output = out.clone();
    }
    match cli.command {
        Command::SingularityMap { energy, variant, .. } => {
            if let Some(e) = energy {
                config.singularity.energy = e;
            }
            if let Some(v) = variant {
                if !(1..=6).contains(&v) {
                    return Err(Error::config("--variant", format!("{v} not in 1..=6")));
                }
                config.singularity.variant = v;
            }
        }
        Command::ScatterDrive { energy, q0, .. } => {
            if let Some(e) = energy {
                config.scatter.energy = e;
            }
            if let Some(q) = q0 {
                if !(q >= 0.0) {
                    return Err(Error::config("--q0", "must be non-negative"));
                }
                config.scatter.q0 = q;
            }
        }
        _ => {}
    }
    let manifest = run(&config)?;
    for f in &manifest.files {
        println!("{}  {}", f.sha256, config.output.join(&f.path).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
