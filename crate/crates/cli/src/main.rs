use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slipinv_cli::config::keys_help;
use slipinv_cli::files::load_config;
use slipinv_cli::{run, CliError, Command};

#[derive(Parser)]
#[command(name = "slipinv", version, about = "Bayesian fault-slip inversion", after_long_help = keys_help())]
struct Cli {
    /// Config file (key = value), or a previous run's run_manifest.json.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides sampler.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides paths.out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for chains and grid cells.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Draw a synthetic slip from the prior and noisy observations.
    Simulate,
    /// Sample the posterior and write point estimates, maps and summaries.
    Invert,
    /// DIC over a grid of correlation lengths (dic.grid).
    DicScan,
    /// Minimize the marginal objective for the variance hyperparameters.
    Hyperopt,
    /// Moment-magnitude posterior from saved draws.
    Mw,
    /// Per-coordinate statistics and maps from saved draws.
    Summarize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Invert => Command::Invert,
            Cmd::DicScan => Command::DicScan,
            Cmd::Hyperopt => Command::Hyperopt,
            Cmd::Mw => Command::Mw,
            Cmd::Summarize => Command::Summarize,
        }
    }
}

fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(cli.config.as_deref())?.with_overrides(cli.seed, cli.out.as_deref());
    run(cli.command.into(), &cfg, cli.threads)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e)
            if e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .to_string();
            eprintln!(
                "{}",
                CliError::Usage(first.trim_start_matches("error: ").to_string()).line()
            );
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{f}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
