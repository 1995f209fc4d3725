use std::process::ExitCode;

use clap::Parser;
use moa_cg::cli::{self, CliConfig};

fn main() -> ExitCode {
    let config = match CliConfig::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let code = cli::run(&config, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
