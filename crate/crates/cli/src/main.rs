use std::path::PathBuf;
use std::process::ExitCode;

use bhet_cli::{run_mode, ExperimentConfig, Mode};
use clap::{Args, Parser, Subcommand};

/// Balanced-heterodyne squeezing spectra, Monte-Carlo checks and phase-lock
/// simulation.
#[derive(Parser)]
#[command(name = "bhet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic normalised heterodyne spectrum.
    Spectrum(Common),
    /// Monte-Carlo estimate of the heterodyne spectrum.
    Montecarlo(Common),
    /// Time-averaged intensity correlation table.
    Correlation(Common),
    /// Closed-loop phase-lock simulation.
    Lock(Common),
    /// The four spectra of the squeezing figure plus an overlay plot.
    Figure3(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: config `output`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Spectrum(a) => (Mode::Spectrum, a),
        Command::Montecarlo(a) => (Mode::Montecarlo, a),
        Command::Correlation(a) => (Mode::Correlation, a),
        Command::Lock(a) => (Mode::Lock, a),
        Command::Figure3(a) => (Mode::Figure3, a),
    };
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default_for(mode)),
    };
    let result = cfg.and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        let out = args
            .out
            .clone()
            .or_else(|| cfg.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        run_mode(&cfg, mode, &out, args.svg || mode == Mode::Figure3)
    });
    match result {
        Ok(artifacts) => {
            for f in artifacts.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("bhet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
