//! Global and local stationarity measures.
//!
//! `E(x) = ‖P_Ω(x − g) − x‖` vanishes exactly at KKT points of the full
//! problem. `e(x) = ‖P̃g‖` vanishes at stationary points of `f` restricted to
//! the active manifold through `x`.

use crate::linalg::norm2;
use crate::model::Polyhedron;
use crate::projection::{project, NullSpaceProjector, ProjectionError};

/// Both measures together with the vectors realizing them.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPair {
    pub global: f64,
    pub local: f64,
    pub y_global: Vec<f64>,
    pub y_local: Vec<f64>,
}

/// `E(x)` and `y = P_Ω(x − g) − x`.
pub fn global_error(x: &[f64], g: &[f64], p: &Polyhedron, tol: f64) -> Result<(f64, Vec<f64>), ProjectionError> {
    let trial: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let px = project(&trial, p, tol)?;
    let y: Vec<f64> = px.iter().zip(x).map(|(a, b)| a - b).collect();
    Ok((norm2(&y), y))
}

/// `E(x)` through the shifted set: `y = argmin{‖y + g‖ : y ∈ Ω − x}`.
pub fn global_error_shifted(x: &[f64], g: &[f64], p: &Polyhedron, tol: f64) -> Result<(f64, Vec<f64>), ProjectionError> {
    let shifted = p.shifted(x)?;
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let y = project(&neg, &shifted, tol)?;
    Ok((norm2(&y), y))
}

/// `e(x)` and `y = −P̃g`, with `P̃` built for the constraints active at `x`.
pub fn local_error(g: &[f64], pr: &NullSpaceProjector) -> (f64, Vec<f64>) {
    let y: Vec<f64> = pr.apply(g).into_iter().map(|v| -v).collect();
    (norm2(&y), y)
}

/// Both measures at `x`.
pub fn error_pair(x: &[f64], g: &[f64], p: &Polyhedron, pr: &NullSpaceProjector, tol: f64) -> Result<ErrorPair, ProjectionError> {
    let (global, y_global) = global_error(x, g, p, tol)?;
    let (local, y_local) = local_error(g, pr);
    Ok(ErrorPair { global, local, y_global, y_local })
}

/// `e ≥ θE`: the local measure still accounts for a fair share of the
/// global one, so optimizing on the current face is worthwhile.
pub fn branch_to_phase_two(global: f64, local: f64, theta: f64) -> bool {
    local >= theta * global
}
