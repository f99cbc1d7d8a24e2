//! `ionsync` command-line entry point.

use std::process::ExitCode;

mod config;
mod emit;
mod runs;

use config::UsageError;

const EXIT_USAGE: u8 = 1;
const EXIT_FAILURE: u8 = 2;

fn main() -> ExitCode {
    let cfg = match config::parse_config(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(e) => {
            if let Some(clap_err) = e.downcast_ref::<clap::Error>() {
                let _ = clap_err.print();
                return if clap_err.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
            }
            eprintln!("ionsync: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match runs::run(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ionsync: some points failed or did not converge; see {}", cfg.output.join("meta.json").display());
            ExitCode::from(EXIT_FAILURE)
        }
        Err(e) => {
            eprintln!("ionsync: {e:#}");
            if is_usage(&e) {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.downcast_ref::<UsageError>().is_some()
        || matches!(e.downcast_ref::<ionsync::Error>(), Some(ionsync::Error::InvalidParams(_) | ionsync::Error::InvalidCutoff(_)))
}
