//! Euclidean projection onto `Ω` and onto its faces, and the regularized
//! null-space projector used by the conjugate gradient phase.
//!
//! Projections dispatch on structure: box-only sets are clamped, a single
//! row plus box goes through the scalar dual, and everything else through a
//! dual active-set iteration.

mod dual_active_set;
mod knapsack;
mod nullspace;

use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError};
use crate::model::{ActiveSet, ModelError, Polyhedron};

pub use nullspace::{make_projector, NullSpaceProjector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProjectionError {
    #[error("the polyhedron is empty")]
    InfeasiblePolyhedron,
    #[error("projection did not converge; best iterate violates constraints by {violation:e}")]
    MaxIterations { best: Vec<f64>, violation: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Projection accuracy used for a solver tolerance `tau`.
pub fn projection_tol(tau: f64) -> f64 {
    f64::min(1e-10, 0.01 * tau)
}

/// `P_Ω(x)`
pub fn project(x: &[f64], p: &Polyhedron, tol: f64) -> Result<Vec<f64>, ProjectionError> {
    check_dim(x, p)?;
    let sys = System { a: p.a(), bl: p.bl().to_vec(), bu: p.bu().to_vec(), lo: p.lo().to_vec(), hi: p.hi().to_vec() };
    sys.project(x, tol)
}

/// Projection onto the face of `Ω` on which every constraint in `s` holds
/// with equality.
pub fn project_active(x: &[f64], p: &Polyhedron, s: &ActiveSet, tol: f64) -> Result<Vec<f64>, ProjectionError> {
    check_dim(x, p)?;
    let mut sys = System { a: p.a(), bl: p.bl().to_vec(), bu: p.bu().to_vec(), lo: p.lo().to_vec(), hi: p.hi().to_vec() };
    for &i in &s.rows_lower {
        sys.bu[i] = sys.bl[i];
    }
    for &i in &s.rows_upper {
        sys.bl[i] = sys.bu[i];
    }
    for &j in &s.vars_lower {
        sys.hi[j] = sys.lo[j];
    }
    for &j in &s.vars_upper {
        sys.lo[j] = sys.hi[j];
    }
    sys.project(x, tol)
}

fn check_dim(x: &[f64], p: &Polyhedron) -> Result<(), ModelError> {
    if x.len() != p.n() {
        return Err(ModelError::DimensionMismatch { what: "x", expected: p.n(), found: x.len() });
    }
    Ok(())
}

/// Constraint data with possibly tightened bounds.
struct System<'a> {
    a: &'a CsrMatrix,
    bl: Vec<f64>,
    bu: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl System<'_> {
    fn project(&self, x: &[f64], tol: f64) -> Result<Vec<f64>, ProjectionError> {
        match self.a.nrows() {
            0 => Ok(clamp(x, &self.lo, &self.hi)),
            1 => {
                let (cols, vals) = self.a.row(0);
                knapsack::project(x, cols, vals, self.bl[0], self.bu[0], &self.lo, &self.hi, tol)
            }
            _ => dual_active_set::project(x, self, tol),
        }
    }
}

pub(crate) fn clamp(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &h))| v.max(l).min(h)).collect()
}
