//! `P̃ = I − A_Bᵀ(A_B A_Bᵀ + σI)⁻¹A_B` for the active rows and bounds.

use crate::linalg::{default_sigma, CsrMatrix, LinalgError, RegularizedFactorization};
use crate::model::{ActiveSet, Polyhedron};

/// Regularized projector onto the null space of the active constraint
/// gradients. Active bounds enter as unit rows after the active rows.
#[derive(Debug, Clone)]
pub struct NullSpaceProjector {
    n: usize,
    rows: Vec<usize>,
    vars: Vec<usize>,
    a_b: CsrMatrix,
    factor: Option<RegularizedFactorization>,
}

/// Builds `P̃` for the constraints in `s`. `sigma = None` picks the default
/// `1e-8 · max(1, ‖A_B‖∞²)`.
pub fn make_projector(p: &Polyhedron, s: &ActiveSet, sigma: Option<f64>) -> Result<NullSpaceProjector, LinalgError> {
    let n = p.n();
    let rows = s.rows();
    let vars = s.vars();
    let mut stacked: Vec<Vec<(usize, f64)>> = rows
        .iter()
        .map(|&i| {
            let (cols, vals) = p.a().row(i);
            cols.iter().copied().zip(vals.iter().copied()).collect()
        })
        .collect();
    stacked.extend(vars.iter().map(|&j| vec![(j, 1.0)]));
    let a_b = CsrMatrix::from_sorted_rows(n, stacked);
    let factor = if a_b.nrows() == 0 {
        if let Some(s) = sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(LinalgError::InvalidSigma(s));
            }
        }
        None
    } else {
        let sigma = sigma.unwrap_or_else(|| default_sigma(&a_b));
        let subset = (0..a_b.nrows()).collect();
        Some(RegularizedFactorization::factor(&a_b, subset, sigma)?)
    };
    Ok(NullSpaceProjector { n, rows, vars, a_b, factor })
}

impl NullSpaceProjector {
    /// The identity on `ℝⁿ`.
    pub fn identity(n: usize) -> Self {
        Self { n, rows: Vec::new(), vars: Vec::new(), a_b: CsrMatrix::zeros(0, n), factor: None }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stacked active rows followed by unit rows for active bounds.
    pub fn a_b(&self) -> &CsrMatrix {
        &self.a_b
    }

    pub fn active_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn active_vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn sigma(&self) -> Option<f64> {
        self.factor.as_ref().map(|f| f.sigma())
    }

    pub fn factorization(&self) -> Option<&RegularizedFactorization> {
        self.factor.as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.factor.is_none()
    }

    /// `P̃ v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let Some(f) = &self.factor else { return v.to_vec() };
        let r = self.a_b.mul_vec(v);
        let s = f.solve_gram(&r).expect("dimensions agree");
        let back = self.a_b.tmul_vec(&s);
        v.iter().zip(&back).map(|(a, b)| a - b).collect()
    }

    /// Minimum-norm correction `x ← x − A_Bᵀ(A_B A_Bᵀ)⁻¹ r` that removes a
    /// residual `r = A_B x − b_B` on the stacked rows.
    pub fn correct(&self, x: &mut [f64], r: &[f64]) {
        let Some(f) = &self.factor else { return };
        let s = f.solve_gram_unregularized(r, 5).expect("dimensions agree");
        let back = self.a_b.tmul_vec(&s);
        for (xi, bi) in x.iter_mut().zip(&back) {
            *xi -= bi;
        }
    }

    /// Residual `A_B x − b_B` of the stacked rows against the bounds they
    /// are active at.
    pub fn residual(&self, p: &Polyhedron, s: &ActiveSet, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.a_b.nrows());
        for &i in &self.rows {
            let b = if s.rows_lower.binary_search(&i).is_ok() { p.bl()[i] } else { p.bu()[i] };
            out.push(p.a().row_dot(i, x) - b);
        }
        for &j in &self.vars {
            let b = if s.vars_lower.binary_search(&j).is_ok() { p.lo()[j] } else { p.hi()[j] };
            out.push(x[j] - b);
        }
        out
    }
}
