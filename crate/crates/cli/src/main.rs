use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod report;

use config::{Format, RunConfig};
use report::Failure;

/// Normal modes, frequency sweeps and damped dynamics of a star network of
/// oscillators. All physics settings come from the config file.
#[derive(Parser)]
#[command(name = "starsync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Perturbative and exact spectrum, mixing angle and regime parameter.
    Modes,
    /// Spectrum as a function of the common coupling.
    Sweep,
    /// Gaussian evolution of the configured initial state.
    Evolve,
    /// Compare the Gaussian engine with the Fock-space oracle.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Sweep => "sweep",
            Command::Evolve => "evolve",
            Command::Oracle => "oracle",
        }
    }

    fn run(self, cfg: &RunConfig, out: &Path) -> Result<serde_json::Value, Failure> {
        match self {
            Command::Modes => commands::modes(cfg, out),
            Command::Sweep => commands::sweep(cfg, out),
            Command::Evolve => commands::evolve(cfg, out),
            Command::Oracle => commands::oracle(cfg, out),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();

    let loaded = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Err(Failure::Config("no configuration given, pass --config <file>".into())),
    };
    let (cfg, outcome, out) = match loaded {
        Ok(cfg) => {
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
            let outcome = cli.command.run(&cfg, &out);
            (Some(cfg), outcome, Some(out))
        }
        Err(e) => (None, Err(e), cli.out.clone()),
    };

    let wants_json = cfg.as_ref().map_or(true, |c| c.wants(Format::Json));
    if let (Some(dir), true) = (&out, wants_json) {
        let report = report::build(name, cfg.as_ref(), &outcome);
        if let Err(e) = report::write(dir, &report) {
            eprintln!("starsync: cannot write report: {e}");
            return ExitCode::from(2);
        }
    }
    match outcome {
        Ok(_) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("starsync {name}: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
