use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mikerr::experiment::{execute, resolve, ConfigError, ExperimentKind, PRESETS};

/// Measurement-induced Kerr experiments: sweeps, state preparation and checks.
#[derive(Parser)]
#[command(name = "mikerr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generalized Fisher information for the ancilla angle over an n̄ grid.
    QfiSweep(Common),
    /// Fisher information for the two-stage displacement parameter κ.
    KappaSweep(Common),
    /// Monte-Carlo cat/compass preparation and average fidelity.
    Stateprep(Common),
    /// Wigner function of one prepared state.
    Wigner(Common),
    /// Spin-ensemble realization against the bosonic channel.
    EnsembleCheck(Common),
    /// SQL, Heisenberg and Kerr reference Fisher information.
    Baselines(Common),
    /// Kerr and decay strength against ancilla angle.
    DesignCurves(Common),
}

#[derive(Args)]
struct Common {
    /// Flat TOML file with experiment parameters.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
    /// Named recipe applied before the config file.
    #[arg(long, value_name = "NAME", help = format!("Named recipe applied before the config file ({})", PRESETS.join(", ")))]
    preset: Option<String>,
    /// Override one key, e.g. --set g=[0.3,0.8] (applied last).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, Common) {
        match self {
            Command::QfiSweep(c) => (ExperimentKind::QfiSweep, c),
            Command::KappaSweep(c) => (ExperimentKind::KappaSweep, c),
            Command::Stateprep(c) => (ExperimentKind::Stateprep, c),
            Command::Wigner(c) => (ExperimentKind::Wigner, c),
            Command::EnsembleCheck(c) => (ExperimentKind::EnsembleCheck, c),
            Command::Baselines(c) => (ExperimentKind::Baselines, c),
            Command::DesignCurves(c) => (ExperimentKind::DesignCurves, c),
        }
    }
}

fn run(kind: ExperimentKind, args: Common) -> Result<Vec<PathBuf>, ConfigError> {
    let file = match &args.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| {
            ConfigError::Validation(format!("cannot read {}: {e}", p.display()))
        })?),
        None => None,
    };
    let mut sets = args.sets;
    if let Some(s) = args.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(t) = args.threads {
        sets.push(format!("threads={t}"));
    }
    let mut cfg = resolve(kind, args.preset.as_deref(), file.as_deref(), &sets)?;
    if let Some(out) = args.out {
        cfg.out = out;
    }
    execute(&cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MIKERR_LOG", "warn")).init();
    let (kind, args) = Cli::parse().command.split();
    match run(kind, args) {
        Ok(paths) => {
            for p in paths {
                log::info!("wrote {}", p.display());
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mikerr {}: {e}", kind.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
