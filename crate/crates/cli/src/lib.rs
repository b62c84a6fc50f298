//! Command-line front end for `pesvlab-core`: bound curves, training runs,
//! oracle verification suites and trained-network width sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Common;
use crate::error::CliError;
use crate::suites::Suite;

#[derive(Debug, Parser)]
#[command(
    name = "pesvlab",
    version,
    about = "PeSV-regularized networks: bounds, training and verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file (bound, verify, sweep) or directory (train).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Omit the `# generated_unix=...` first line of CSV outputs.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the encompassing generalization bound over a width grid.
    Bound {
        #[command(flatten)]
        common: CommonArgs,
        /// Width grid such as `1..1024` or `2,4,8`; overrides the config.
        #[arg(long, value_name = "SPEC")]
        widths: Option<String>,
    },
    /// Train one network by penalized ERM.
    Train {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run numerical verification suites.
    Verify {
        #[arg(value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train across the width grid and seeds, alongside the bound.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Seeds per width; overrides the config.
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn common(a: &CommonArgs) -> Common {
    Common {
        config: a.config.clone(),
        out: a.out.clone(),
        timestamp: !a.no_timestamp,
    }
}

fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Bound { common: c, widths } => commands::cmd_bound(&common(c), widths.as_deref()),
        Command::Train { common: c } => commands::cmd_train(&common(c)),
        Command::Verify { suite, common: c } => commands::cmd_verify(&common(c), *suite),
        Command::Sweep { common: c, trials } => commands::cmd_sweep(&common(c), *trials),
    }
}

fn jobs(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::Bound { common, .. }
        | Command::Train { common }
        | Command::Verify { common, .. }
        | Command::Sweep { common, .. } => common.jobs,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match jobs(&cli.command) {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} workers: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
