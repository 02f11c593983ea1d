//! `kerrcat`: sweeps and diagnostics for driven Kerr-cat qubit gates.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use output::Output;

#[derive(Parser)]
#[command(name = "kerrcat", version, about = "Kerr-cat qubit gate sweeps and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file, or a preset name (fig2bc, fig2ef, fig3cd, figS1, figS2).
    #[arg(long, global = true)]
    config: Option<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the config Fock dimension.
    #[arg(long, global = true)]
    fock_dim: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Gap and gap-derivative landscape plus the robust line.
    Spectrum,
    /// Optimize every (cat size, duration) point of the configured sweeps.
    GateSweep,
    /// Tabulate the robust line.
    RobustLine,
    /// Filter function, spectral estimate and Monte-Carlo check for one Z gate.
    Noise,
    /// Effective two-qubit coupling, echo sequence and invariants.
    Twoqubit,
    /// Rerun sampled sweep points at doubled dimension and halved step.
    Convergence,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(src) => RunConfig::load(src)?,
        None => RunConfig::from_toml("")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dim) = cli.fock_dim {
        cfg.fock_dim = dim;
    }
    cfg.validate()?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = Output::new(&cli.out, cfg.hash())?;
    out.json("config.json", serde_json::to_value(&cfg).expect("config serializes"))?;
    match cli.command {
        Command::Spectrum => commands::spectrum(&cfg, &out),
        Command::GateSweep => commands::gate_sweep(&cfg, &out),
        Command::RobustLine => commands::robust_line_cmd(&cfg, &out),
        Command::Noise => commands::noise(&cfg, &out),
        Command::Twoqubit => commands::twoqubit(&cfg, &out),
        Command::Convergence => commands::convergence(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kerrcat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
