use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracbs_cli::{run, CliError, Mode, RunConfig};

/// Spectral solvers for fractional Black-Scholes semigroups.
///
/// Exit codes: 0 success, 1 failed checks, 2 config or I/O error, 3 numerical error.
/// Set FRACBS_THREADS to cap the worker pool.
#[derive(Parser)]
#[command(name = "fracbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured datum and export the trajectory.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run verification suites and write one JSON report per suite.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Run only this suite, overriding `verify_suites`.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Export Hille densities of the semigroup symbol at each configured time.
    Kernel {
        #[arg(long)]
        config: PathBuf,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("FRACBS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FRACBS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (mode, path, suite) = match cli.command {
        Command::Solve { config } => (Mode::Solve, config, None),
        Command::Verify { config, suite } => (Mode::Verify, config, suite),
        Command::Kernel { config } => (Mode::Kernel, config, None),
    };
    let mut cfg = RunConfig::load(&path)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            log::warn!(
                "config mode '{}' overridden by subcommand '{}'",
                m.as_str(),
                mode.as_str()
            );
        }
    }
    cfg.mode = Some(mode);
    if let Some(s) = suite {
        cfg.verify_suites = vec![s];
    }
    let outcome = run(mode, &cfg)?;
    for (suite, reports) in &outcome.reports {
        for r in reports {
            println!(
                "{} {suite}/{} constant={:e}",
                if r.pass { "PASS" } else { "FAIL" },
                r.name,
                r.constant
            );
        }
    }
    for a in &outcome.artifacts {
        log::info!("wrote {}", a.display());
    }
    match outcome.check_failure() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracbs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
