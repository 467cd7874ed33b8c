use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fracdelay_cli::{execute, load_config, CliError, Command};

/// Fractional variational and optimal control problems with a delayed state.
///
/// Exit codes: 0 success, 1 I/O or numerical failure, 2 invalid
/// configuration, 3 solver did not converge, 4 refinement study flagged.
#[derive(Parser)]
#[command(name = "fracdelay", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Number of grids in a refinement study (`ibp`, `convergence`).
    #[arg(long)]
    levels: Option<usize>,
}

/// Sizes the global pool from `FRACDELAY_THREADS`; unset means all cores.
fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FRACDELAY_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            return Err(CliError::config(
                "FRACDELAY_THREADS",
                format!("expected a positive integer, got `{raw}`"),
            ))
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config("FRACDELAY_THREADS", e))
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    init_threads()?;
    let cfg = load_config(&cli.config)?;
    let report = execute(cli.command, &cfg, cli.levels)?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let paths = report.write(&dir)?;
    print!("{}", report.summary);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(report.status.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
