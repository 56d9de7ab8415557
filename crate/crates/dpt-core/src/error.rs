//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A tensor axis has the wrong extent. Names the operation and axis.
    Dim {
        op: &'static str,
        axis: usize,
        expected: usize,
        got: usize,
    },
    /// Shapes are structurally incompatible beyond a single axis.
    Shape { op: &'static str, detail: String },
    /// Invalid configuration value (bad eps, window size, divisibility, ...).
    Config(String),
    /// API misuse (backward on a non-scalar, mismatched graphs, ...).
    Usage(String),
    /// Degenerate polygon input (fewer than 3 vertices, zero perimeter, ...).
    Geometry(String),
    /// A shrink offset collapsed the polygon to nothing. Callers skip the
    /// instance rather than abort.
    EmptyPolygon,
    /// Non-finite value where a finite one is required (loss abort path).
    NonFinite(String),
    /// Checkpoint/model mismatch; carries the first offending tensor name.
    Checkpoint(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dim {
                op,
                axis,
                expected,
                got,
            } => write!(
                f,
                "{op}: axis {axis} has extent {got}, expected {expected}"
            ),
            Error::Shape { op, detail } => write!(f, "{op}: {detail}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Geometry(msg) => write!(f, "geometry error: {msg}"),
            Error::EmptyPolygon => write!(f, "polygon collapsed to empty under offset"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Checkpoint(name) => write!(f, "checkpoint mismatch at tensor `{name}`"),
        }
    }
}

impl core::error::Error for Error {}
