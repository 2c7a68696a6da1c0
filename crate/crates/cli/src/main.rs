use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    svmenum_app::run(svmenum_app::Cli::parse())
}
