//! Command-line driver: episode generation, evaluation runs, the prompting
//! ablation and the statistics suite, each writing a self-describing run
//! directory.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

pub use args::{BackendKind, Cli, Command};
pub use commands::{Outcome, ModeSummary};
pub use error::CliError;

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Gen(args) => commands::cmd_gen(args),
        Command::Eval(args) => commands::cmd_eval(args),
        Command::Ablate(args) => commands::cmd_ablate(args),
        Command::Stats(args) => commands::cmd_stats(args),
    }
}
