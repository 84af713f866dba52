//! `seedprior` command-line driver. [`run`] parses arguments, executes a
//! subcommand and maps failures onto exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error (unknown or inconsistent flags) |
//! | 2 | data validation error (bad seeds, corrupt or mismatched files) |
//! | 3 | I/O error |

mod args;
mod commands;
mod log;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) => m,
        }
    }
}

impl From<seedprior::Error> for CliError {
    fn from(e: seedprior::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Runs one invocation, writing results to `out` and logs/errors to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    let mut log = log::Log::new(cli.json, cli.verbose, err);
    if cli.dump_config {
        let config = serde_json::to_value(&cli).expect("config serializes");
        log.event_always("config", config);
    }
    match commands::execute(&cli, out, &mut log) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log.error(e.code(), e.message());
            e.code()
        }
    }
}
