// SPDX-License-Identifier: Apache-2.0

use clap::Parser;
use floqopt_cli::config::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = floqopt_cli::run(cli) {
        eprintln!("floqopt: {e}");
        std::process::exit(e.exit_code());
    }
}
