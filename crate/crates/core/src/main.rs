use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use powerlloyd::app::{
    cmd_analyze, cmd_diagram, cmd_lloyd, cmd_rate, cmd_sweep, read_generators, AppError,
    ProblemConfig, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(
    version,
    about = "Centroidal power diagrams and the generalized Lloyd algorithm"
)]
struct Cli {
    /// Problem configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for multistart and sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (default: the config's `out`, else `./out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the power diagram of explicit generators; writes JSON and SVG.
    Diagram {
        /// State file with the generators.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Run the Lloyd iteration (multistart when init.restarts > 1).
    Lloyd,
    /// Final cell count against λ, with a log-log slope.
    Sweep,
    /// Linear convergence rates for several generator counts.
    Rate,
    /// Derivatives, finite-difference checks and fixed-point test of a state.
    Analyze {
        /// State file with the generators.
        state: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), AppError> {
    let path = cli
        .config
        .ok_or_else(|| AppError::Config("--config is required".into()))?;
    let mut cfg = ProblemConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers.or(cfg.workers) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| AppError::Config(format!("--workers: {e}")))?;
    }
    let out = cli.out.unwrap_or_else(|| cfg.output_dir());
    if let Command::Diagram { state: Some(path) } | Command::Analyze { state: Some(path) } =
        &cli.command
    {
        cfg.generators = Some(read_generators(path)?);
    }
    match cli.command {
        Command::Diagram { .. } => cmd_diagram(&cfg, &out).map(drop),
        Command::Lloyd => cmd_lloyd(&cfg, &out).map(drop),
        Command::Sweep => cmd_sweep(&cfg, &out).map(drop),
        Command::Rate => cmd_rate(&cfg, &out).map(drop),
        Command::Analyze { .. } => cmd_analyze(&cfg, &out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
