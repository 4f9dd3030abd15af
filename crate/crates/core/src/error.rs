use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The cavity propagator has an exact real-axis pole on a grid point.
    #[error("real-axis pole of the cavity propagator at omega = {omega}")]
    Singularity { omega: f64 },

    #[error("phase undefined at omega = {omega}: gamma_c and delta_c both vanish")]
    UndefinedPhase { omega: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("identity check failed: {0}")]
    Identity(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal diagnostics attached to a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// The initial packet still overlaps the coupling region.
    NotAsymptotic { support_max: f64, threshold: f64 },
    /// The fidelity maximum sits on the edge of the shift window.
    WindowEdge { dt: f64, window: f64 },
    /// The asymptotic fidelity moved by more than the allowed amount
    /// between the two evaluation times.
    NotConverged { delta_f: f64, t_asym: f64, t_check: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::NotAsymptotic { support_max, threshold } => write!(
                f,
                "initial packet extends to tau = {support_max}, above the asymptotic-past threshold {threshold}"
            ),
            Warning::WindowEdge { dt, window } => write!(
                f,
                "fidelity maximum at dt = {dt} lies on the edge of the +/-{window} search window"
            ),
            Warning::NotConverged { delta_f, t_asym, t_check } => write!(
                f,
                "fidelity changed by {delta_f} between t = {t_asym} and t = {t_check}"
            ),
        }
    }
}

/// A value together with the warnings produced while computing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn clean(value: T) -> Self {
        Self { value, warnings: Vec::new() }
    }

    pub fn into_value(self) -> T {
        self.value
    }
}
