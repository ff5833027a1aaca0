use std::process::ExitCode;

use clap::Parser;
use two_photon_rabi::cli::{main_with, Cli};

fn main() -> ExitCode {
    main_with(Cli::parse())
}
