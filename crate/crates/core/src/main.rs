use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relfix::workbench::{cmd_check, cmd_karoubi, cmd_relate, cmd_solve, write_dots, Method, Overrides, RunReport, Suite};

#[derive(Parser)]
#[command(name = "relfix", version, about = "Relational fixed points over recursive domain equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Depth of the approximation chain.
    #[arg(long)]
    depth: Option<usize>,
    /// Largest admissible carrier size.
    #[arg(long)]
    max_size: Option<usize>,
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { depth: self.depth, max_size: self.max_size, seed: self.seed }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the approximation chain and check its projections.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        /// Write one DOT file per level into this directory.
        #[arg(long)]
        emit_dot: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Compute the invariant relation with one engine or compare all of them.
    Relate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::All)]
        method: Method,
        #[command(flatten)]
        common: Common,
    },
    /// Inspect the idempotents and splittings of a finite poset.
    Karoubi {
        /// A poset literal such as `chain(3)`.
        #[arg(long)]
        poset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in law suite.
    Check {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
}

fn read_spec(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("relfix: cannot read {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn emit(report: &RunReport, target: Option<&PathBuf>) -> ExitCode {
    let json = report.to_json();
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &json) {
                eprintln!("relfix: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{json}"),
    }
    if let Some(err) = &report.error {
        eprintln!("relfix: {}: {}", err.kind, err.message);
    }
    ExitCode::from(report.exit_code() as u8)
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    Ok(match cli.command {
        Command::Solve { spec, emit_dot, common } => {
            let text = read_spec(&spec)?;
            let (report, dots) = cmd_solve(&text, &common.overrides());
            if let Some(dir) = emit_dot {
                write_dots(&dir, &dots).map_err(|e| {
                    eprintln!("relfix: cannot write DOT files to {}: {e}", dir.display());
                    ExitCode::from(1)
                })?;
            }
            emit(&report, common.report.as_ref())
        }
        Command::Relate { spec, method, common } => {
            let text = read_spec(&spec)?;
            emit(&cmd_relate(&text, method, &common.overrides()), common.report.as_ref())
        }
        Command::Karoubi { poset, common } => emit(&cmd_karoubi(&poset, &common.overrides()), common.report.as_ref()),
        Command::Check { suite, common } => emit(&cmd_check(suite, &common.overrides()), common.report.as_ref()),
    })
}

fn main() -> ExitCode {
    run(Cli::parse()).unwrap_or_else(|code| code)
}
