//! `sfwm`: design and simulate heralded single-photon sources based on
//! spontaneous four-wave mixing in birefringent waveguides.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sfwm::commands;
use sfwm::config::RunConfig;
use sfwm::SfwmError;

#[derive(Parser)]
#[command(
    name = "sfwm",
    version,
    about = "Heralded single-photon source design via four-wave mixing in birefringent waveguides"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON config file; omitted fields fall back to the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named baseline configuration.
    #[arg(long, default_value = "paper")]
    preset: String,
    /// Output directory for CSV/JSON results.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the RNG seed used by stochastic commands.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Phase-matched signal/idler wavelengths versus pump wavelength.
    PhasematchCurve(CommonArgs),
    /// Joint spectral amplitude, Schmidt decomposition, optional filter.
    Jsa(CommonArgs),
    /// Heralded-state purity versus pump bandwidth.
    SweepPumpBandwidth(CommonArgs),
    /// Purity under linear and random birefringence inhomogeneity.
    SweepInhomogeneity(CommonArgs),
    /// Monte Carlo click counting (single gain or pump-power sweep).
    CountSim(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PhasematchCurve(_) => "phasematch-curve",
            Command::Jsa(_) => "jsa",
            Command::SweepPumpBandwidth(_) => "sweep-pump-bandwidth",
            Command::SweepInhomogeneity(_) => "sweep-inhomogeneity",
            Command::CountSim(_) => "count-sim",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::PhasematchCurve(a)
            | Command::Jsa(a)
            | Command::SweepPumpBandwidth(a)
            | Command::SweepInhomogeneity(a)
            | Command::CountSim(a) => a,
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, SfwmError> {
    // The preset supplies every default; a config file overrides the fields
    // it names.
    RunConfig::preset(&args.preset)?;
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::preset(&args.preset)?,
    };
    if let Some(seed) = args.seed {
        cfg.counting.seed = seed;
        cfg.inhomogeneity_sweep.seed_base = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), SfwmError> {
    let args = cli.command.args();
    if let Some(threads) = args.threads {
        // Ignore failure if a global pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let cfg = load_config(args)?;
    let files = commands::run_command(cli.command.name(), &cfg, &args.out)?;
    for path in files.paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
