//! `authcap`: region sweeps, code simulations and property batteries.
//!
//! Exit codes: 0 ok, 1 property failure, 2 usage or validation error,
//! 3 search budget exhausted under `--strict`, 4 enumeration cap exceeded.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use authcap::error::Error;
use clap::{Parser, Subcommand};

mod region;
mod simulate;
mod verify;

#[derive(Parser)]
#[command(
    name = "authcap",
    version,
    about = "Typical-authentication regions and desk-scale authentication codes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the boundary of the rate region.
    Region(region::RegionArgs),
    /// Build a code, attack it and bracket its authentication rate.
    Simulate(simulate::SimulateArgs),
    /// Run the property batteries.
    Verify(verify::VerifyArgs),
}

pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_CAP: u8 = 4;

/// Text to emit and the exit code to finish with.
pub struct Outcome {
    pub text: String,
    pub code: u8,
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. } => EXIT_CAP,
        Error::NoConvergence { .. } => EXIT_BUDGET,
        Error::Consistency(_) => EXIT_PROPERTY,
        _ => EXIT_USAGE,
    }
}

/// Writes to `out` when given, stdout otherwise.
pub fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => authcap::io::write_text(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    message: e.to_string(),
                })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let (result, out) = match &cli.command {
        Command::Region(a) => (region::run(a), a.out.as_ref()),
        Command::Simulate(a) => (simulate::run(a), a.out.as_ref()),
        Command::Verify(a) => (verify::run(a), a.out.as_ref()),
    };
    match result.and_then(|o| emit(&o.text, out).map(|_| o.code)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
