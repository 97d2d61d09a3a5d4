//! Batch front end for `brwx`: limit constants, Monte Carlo estimates,
//! estimate-versus-limit checks and exact oracles, written as CSV or JSON.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod params;
pub mod report;
pub mod run;

use clap::Parser;

pub use error::CliError;
pub use params::{Cli, Command, Parameters};
pub use report::{from_csv, to_csv, Manifest, Report, Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Parses `args`, runs the command, writes the report and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (report, partial) = match run::run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("brwx: {e}");
            return e.exit_code();
        }
    };
    let params = &report.manifest.parameters;
    let format = params.format.unwrap_or(params::Format::Csv);
    if let Err(e) = report::emit(&report, format, params.out.as_deref()) {
        eprintln!("brwx: {e}");
        return e.exit_code();
    }
    if let Some(e) = partial {
        eprintln!("brwx: stopped early: {e}");
        return EXIT_RESOURCE;
    }
    let failures = report.failures();
    if failures > 0 {
        eprintln!("brwx: {failures} verification row(s) failed");
        return EXIT_VERIFY;
    }
    EXIT_OK
}
