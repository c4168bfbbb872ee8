use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use measurable_bundles::cli::{self, CliError, CommonOptions, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "mbundle", version, about = "Measurable bundles of C*-dynamical systems over atomic measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration (defaults apply when omitted)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the configured system and sweep its ergodic averages
    Run(Common),
    /// Run the seeded property suites
    CheckAxioms(Common),
    /// Recover fiberwise bundles from a global probe table
    Localize {
        #[command(flatten)]
        common: Common,
        /// Probe table (JSON); tabulates the configured system when omitted
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

fn options(c: Common) -> CommonOptions {
    CommonOptions {
        config: c.config,
        seed: c.seed,
        out: c.out,
        quiet: c.quiet,
    }
}

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let result: Result<i32, CliError> = match parsed.command {
        Command::Run(c) => cli::run::cmd_run(&options(c)).map(|o| o.exit_code),
        Command::CheckAxioms(c) => cli::axioms::cmd_check_axioms(&options(c)).map(|o| o.exit_code),
        Command::Localize { common, input } => {
            cli::localize::cmd_localize(&options(common), input.as_ref()).map(|o| o.exit_code)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("mbundle: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
