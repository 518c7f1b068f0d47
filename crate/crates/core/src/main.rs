use std::process::ExitCode;

use clap::Parser;
use igtkit::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
