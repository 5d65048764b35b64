//! Problem files, QPS conversion, solution output and random generation.

mod generate;
mod problem;
mod qps;

use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

pub use generate::{generate, GeneratedKind};
pub use problem::{Group, ObjectiveKind, ObjectiveSpec, Problem, ProblemFile, ProblemObjective, Triplets, INFINITE_BOUND};
pub use qps::parse_qps;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid JSON: {0}")]
    Json(#[source] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
    #[error("invalid problem: {0}")]
    Model(#[from] ModelError),
    #[error("QPS line {line}: {message}")]
    Qps { line: usize, message: String },
}

/// One entry per line with 17 significant digits.
pub fn write_vector<W: Write>(mut out: W, v: &[f64]) -> std::io::Result<()> {
    for x in v {
        writeln!(out, "{x:.16e}")?;
    }
    Ok(())
}

/// Parses the output of [`write_vector`].
pub fn read_vector(text: &str) -> Result<Vec<f64>, std::num::ParseFloatError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| l.trim().parse()).collect()
}
