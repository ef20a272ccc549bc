mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CommandError, Context};

#[derive(Parser)]
#[command(name = "stratwave", version, about = "Hamiltonian long-wave models for stratified fluids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured model and write diagnostics and snapshots.
    Run(Common),
    /// Compare analytic variational derivatives with the finite-difference oracle.
    CheckGradients(Common),
    /// Residual-order, Dirac-reduction and round-trip studies.
    CheckEquivalence(Common),
    /// Air-water and deep-water limit sweeps.
    LimitStudy(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random-state suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suppress progress and summary output.
    #[arg(long)]
    quiet: bool,
}

fn execute(cmd: Command) -> Result<(), CommandError> {
    let (common, which) = match cmd {
        Command::Run(c) => (c, 0),
        Command::CheckGradients(c) => (c, 1),
        Command::CheckEquivalence(c) => (c, 2),
        Command::LimitStudy(c) => (c, 3),
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CommandError::Fatal(format!("{}: {e}", common.config.display())))?;
    let cfg = config::parse_config(&text)
        .map_err(|e| CommandError::Fatal(format!("{}: {e}", common.config.display())))?;
    let config_dir = common.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let ctx = Context { out: common.out, seed: common.seed, quiet: common.quiet };
    match which {
        0 => commands::cmd_run(&cfg, &config_dir, &ctx),
        1 => commands::cmd_check_gradients(&cfg, &ctx),
        2 => commands::cmd_check_equivalence(&cfg, &ctx),
        _ => commands::cmd_limit_study(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
