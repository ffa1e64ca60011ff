//! `intersect`: generate chains, compute exact and spectral quantities, run
//! Monte Carlo estimators and the check harness.

mod commands;

use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let style = if std::env::var_os("NO_COLOR").is_some() || !std::io::stderr().is_terminal() {
        env_logger::WriteStyle::Never
    } else {
        env_logger::WriteStyle::Auto
    };
    env_logger::Builder::new()
        .filter_level(level)
        .write_style(style)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match commands::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
