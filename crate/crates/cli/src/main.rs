use std::process::ExitCode;

use clap::Parser;
use dctree_cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let stdout = std::io::stdout();
    match run(config, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dctree: {e:#}");
            ExitCode::FAILURE
        }
    }
}
