use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use swcodes_cli::Cli;

/// Prints a usage error with the usage line and exits with status 2. Help
/// and version requests go through clap unchanged.
fn usage_error(e: clap::Error) -> ! {
    if !e.use_stderr() {
        e.exit();
    }
    let text = e.render().to_string();
    eprint!("{text}");
    if !text.contains("Usage:") {
        eprintln!("\n{}", Cli::command().render_usage());
    }
    std::process::exit(2);
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| usage_error(e));
    if let Err(e) = cli.check() {
        usage_error(e);
    }
    match swcodes_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
