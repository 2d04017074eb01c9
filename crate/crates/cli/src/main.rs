use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ergoscope::{run_scenario, CliError, Command, ScenarioConfig};

#[derive(Parser)]
#[command(name = "ergoscope", version, about = "Ergotropy bounds for lattice spin models")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Minimum-energy curve against the pair-family curve.
    Fig1(Common),
    /// Finite-size bound chain for every configured channel.
    Bound(Common),
    /// CNOT work-extraction protocol on the pair family.
    Protocol(Common),
    /// Eigenstate scan of block athermality.
    EthScan(Common),
    /// Trotterized evolution and entropy-rate diagnostics.
    Dynamics(Common),
    /// Canonical thermodynamic curve.
    ThermoCurve(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, common) = match cli.command {
        Sub::Fig1(c) => (Command::Fig1, c),
        Sub::Bound(c) => (Command::Bound, c),
        Sub::Protocol(c) => (Command::Protocol, c),
        Sub::EthScan(c) => (Command::EthScan, c),
        Sub::Dynamics(c) => (Command::Dynamics, c),
        Sub::ThermoCurve(c) => (Command::ThermoCurve, c),
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let mut config = ScenarioConfig::load(&common.config)?;
    if let Some(out) = common.out {
        config.output = out;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let path = common.config.display().to_string();
    let summary = run_scenario(&config, command).map_err(|e| match e {
        CliError::Validation(msg) => CliError::Validation(format!("config {path}: {msg}")),
        other => other,
    })?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
