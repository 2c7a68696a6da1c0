//! Command-line front end and HTTP session service for `svmenum`.
//!
//! The binary exposes four subcommands:
//!
//! * `enumerate` streams the top-K models of a dataset as JSON lines;
//! * `cv` picks `C` by k-fold cross-validation;
//! * `verify` cross-checks the enumerator against the brute-force oracle;
//! * `serve` runs the JSON API used by the browser console.
//!
//! Model records written by `enumerate` and returned by the API go through
//! the same serializer ([`svmenum::ModelRecord`]), so a session and a CLI run
//! with the same configuration produce identical model JSON.

pub mod cli;
pub mod commands;
pub mod load;
pub mod server;

use std::process::ExitCode;

pub use cli::Cli;

/// Exit status for a failed command.
pub fn exit_code(err: &svmenum::Error) -> u8 {
    use svmenum::Error::*;
    match err {
        InvalidKernel(_) | InvalidParameter(_) | OracleTooLarge { .. } => 2,
        NotConverged { .. } => 4,
        HeapOverflow(_) | OracleIterationCap(_) => 1,
        _ => 3,
    }
}

/// Runs a parsed command line and maps the outcome to a process exit code.
pub fn run(cli: Cli) -> ExitCode {
    let outcome = match cli.command {
        cli::Command::Enumerate(args) => commands::enumerate(&args).map(|()| 0),
        cli::Command::Cv(args) => commands::cv(&args).map(|()| 0),
        cli::Command::Verify(args) => commands::verify(&args).map(|ok| if ok { 0 } else { 1 }),
        cli::Command::Serve(args) => return serve_blocking(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(commands::CommandError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(commands::CommandError::Output(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn serve_blocking(args: cli::ServeArgs) -> ExitCode {
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(server::serve(args)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
