use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stwave_cli::commands::{self, exit_code, Run};
use stwave_cli::verify::{self, Suite};

/// Multilayer viscous traveling-wave solver.
#[derive(Parser)]
#[command(name = "stwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; the reference two-layer setup when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the per-frequency solves.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for generated test data (overrides `output.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the normal-stress symbol and check its asymptotics.
    Symbol,
    /// Invert the linearized system for data read from CSV tables.
    SolveLinear,
    /// Compute a small traveling wave for the configured forcing.
    SolveWave,
    /// Run seeded property suites.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
    },
}

fn run(cli: Cli) -> stwave::Result<u8> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| stwave::Error::InvalidConfig(format!("--threads {k}: {e}")))?;
    }
    let (rc, bytes) = commands::load_config(cli.config.as_deref())?;
    let run = Run::new(rc, bytes, cli.out, cli.seed)?;
    match cli.command {
        Command::Symbol => commands::symbol(&run),
        Command::SolveLinear => commands::solve_linear(&run),
        Command::SolveWave => commands::solve_wave(&run),
        Command::Verify { suite } => verify::verify(&run, suite),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
