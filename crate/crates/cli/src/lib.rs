//! Command-line front end: configuration, the `response`, `evolve`, `shear`,
//! `sweep` and `selftest` commands, and their output files.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod sweep;

use spinwave_core::Error;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_PARTIAL_SWEEP: i32 = 3;

/// Process exit code for a failed command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Singularity { .. } | Error::UndefinedPhase { .. } | Error::Identity(_) => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}
