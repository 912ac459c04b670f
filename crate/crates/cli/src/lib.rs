//! Command-line front end and review service.

pub mod case;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod server;

use clap::Parser;

use cli::{Cli, Command};
use error::{exit, CliError, CliResult};

fn dispatch(command: &Command) -> CliResult<()> {
    match command {
        Command::Phantom(a) => commands::phantom(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::TrainEnsemble(a) => commands::train_ensemble_cmd(a),
        Command::Segment(a) => commands::segment(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Suggest(a) => commands::suggest(a),
        Command::Serve(a) => server::serve(a.case.clone(), &a.host, a.port),
    }
}

/// Runs the command line and returns the process exit code. Failures are
/// reported as one JSON line on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return exit::OK;
            }
            let text = e.to_string();
            let first = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).to_line());
            return exit::USAGE;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.exit_code()
        }
    }
}
