//! Problem representation: the polyhedron `{bl ≤ Ax ≤ bu, lo ≤ x ≤ hi}` and
//! feasibility/activity queries on it.

use thiserror::Error;

use crate::linalg::{CsrMatrix, LinalgError};

/// Default relative tolerance used to decide whether a constraint binds.
pub const DEFAULT_ACTIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("{what}[{index}] is NaN")]
    NaN { what: &'static str, index: usize },
    #[error("{what} bounds cross at index {index}: {lower} > {upper}")]
    CrossedBounds { what: &'static str, index: usize, lower: f64, upper: f64 },
    #[error("row {0} has no finite bound")]
    VacuousRow(usize),
    #[error("point violates {constraint} by {violation:e}")]
    Infeasible { constraint: Constraint, violation: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which side of a two-sided constraint binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lower,
    Upper,
}

/// A single general row `i` or simple bound on variable `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    Row(usize),
    Var(usize),
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::Row(i) => write!(f, "row {i}"),
            Constraint::Var(j) => write!(f, "bound of x[{j}]"),
        }
    }
}

/// `Ω = {x ∈ ℝⁿ : bl ≤ Ax ≤ bu, lo ≤ x ≤ hi}`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    a: CsrMatrix,
    bl: Vec<f64>,
    bu: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Polyhedron {
    pub fn new(a: CsrMatrix, bl: Vec<f64>, bu: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ModelError> {
        let (m, n) = (a.nrows(), a.ncols());
        check_len("bl", m, bl.len())?;
        check_len("bu", m, bu.len())?;
        check_len("lo", n, lo.len())?;
        check_len("hi", n, hi.len())?;
        check_pairs("row", &bl, &bu)?;
        check_pairs("variable", &lo, &hi)?;
        for i in 0..m {
            if bl[i] == f64::NEG_INFINITY && bu[i] == f64::INFINITY {
                return Err(ModelError::VacuousRow(i));
            }
        }
        for i in 0..m {
            if a.row(i).1.iter().any(|v| !v.is_finite()) {
                return Err(LinalgError::NonFinite.into());
            }
        }
        Ok(Self { a, bl, bu, lo, hi })
    }

    /// Builds the polyhedron from `A` given as triplets.
    #[allow(clippy::too_many_arguments)]
    pub fn from_triplets(
        n: usize,
        m: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
        bl: Vec<f64>,
        bu: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let a = CsrMatrix::from_triplets(m, n, rows, cols, vals)?;
        Self::new(a, bl, bu, lo, hi)
    }

    /// `ℝⁿ`
    pub fn unconstrained(n: usize) -> Self {
        Self::boxed(vec![f64::NEG_INFINITY; n], vec![f64::INFINITY; n]).expect("valid bounds")
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, ModelError> {
        let n = lo.len();
        Self::new(CsrMatrix::zeros(0, n), vec![], vec![], lo, hi)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn bl(&self) -> &[f64] {
        &self.bl
    }

    pub fn bu(&self) -> &[f64] {
        &self.bu
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.lo.iter().chain(&self.hi).any(|v| v.is_finite())
    }

    /// True when there are no rows and every bound is infinite.
    pub fn is_unconstrained(&self) -> bool {
        self.m() == 0 && !self.has_finite_bounds()
    }

    pub fn bound(&self, c: Constraint, side: Side) -> f64 {
        match (c, side) {
            (Constraint::Row(i), Side::Lower) => self.bl[i],
            (Constraint::Row(i), Side::Upper) => self.bu[i],
            (Constraint::Var(j), Side::Lower) => self.lo[j],
            (Constraint::Var(j), Side::Upper) => self.hi[j],
        }
    }

    /// Value of the constraint function (`aᵢᵀx` or `xⱼ`) at `x`.
    pub fn constraint_value(&self, c: Constraint, x: &[f64]) -> f64 {
        match c {
            Constraint::Row(i) => self.a.row_dot(i, x),
            Constraint::Var(j) => x[j],
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        check_len("x", self.n(), x.len())
    }

    /// Largest violation of any constraint, each measured as
    /// `violation / (1 + |bound|)`.
    pub fn max_violation(&self, x: &[f64]) -> Result<(f64, Option<Constraint>), ModelError> {
        self.check_dim(x)?;
        let ax = self.a.mul_vec(x);
        let mut worst = (0.0, None);
        let mut consider = |c: Constraint, v: f64, lo: f64, hi: f64| {
            let lv = (lo - v) / (1.0 + lo.abs());
            let uv = (v - hi) / (1.0 + hi.abs());
            let viol = lv.max(uv);
            if viol > worst.0 {
                worst = (viol, Some(c));
            }
        };
        for i in 0..self.m() {
            consider(Constraint::Row(i), ax[i], self.bl[i], self.bu[i]);
        }
        for j in 0..self.n() {
            consider(Constraint::Var(j), x[j], self.lo[j], self.hi[j]);
        }
        Ok(worst)
    }

    /// Every constraint satisfied within `tol·(1+|bound|)`.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> Result<bool, ModelError> {
        Ok(self.max_violation(x)?.0 <= tol)
    }

    /// Constraints binding at `x` within `eps·(1+|bound|)`.
    pub fn active_set(&self, x: &[f64], eps: f64) -> Result<ActiveSet, ModelError> {
        self.active_set_within(x, eps, eps)
    }

    /// Like [`Polyhedron::active_set`], but accepts points that violate a
    /// constraint by up to `feas_tol·(1+|bound|)` and counts every violated
    /// constraint as binding.
    pub fn active_set_within(&self, x: &[f64], eps: f64, feas_tol: f64) -> Result<ActiveSet, ModelError> {
        let (viol, worst) = self.max_violation(x)?;
        if viol > eps.max(feas_tol) {
            return Err(ModelError::Infeasible {
                constraint: worst.expect("violation implies a constraint"),
                violation: viol,
            });
        }
        let ax = self.a.mul_vec(x);
        let mut s = ActiveSet::default();
        let at_lower = |v: f64, b: f64| b.is_finite() && v - b <= eps * (1.0 + b.abs());
        let at_upper = |v: f64, b: f64| b.is_finite() && b - v <= eps * (1.0 + b.abs());
        for i in 0..self.m() {
            if at_lower(ax[i], self.bl[i]) {
                s.rows_lower.push(i);
            }
            if at_upper(ax[i], self.bu[i]) {
                s.rows_upper.push(i);
            }
        }
        for j in 0..self.n() {
            if at_lower(x[j], self.lo[j]) {
                s.vars_lower.push(j);
            }
            if at_upper(x[j], self.hi[j]) {
                s.vars_upper.push(j);
            }
        }
        Ok(s)
    }

    pub fn residuals(&self, x: &[f64]) -> Result<Residuals, ModelError> {
        self.check_dim(x)?;
        let row_values = self.a.mul_vec(x);
        let min_slack = |vals: &mut dyn Iterator<Item = f64>| vals.fold(f64::INFINITY, f64::min);
        let slack = SlackSummary {
            row_lower: min_slack(&mut row_values.iter().zip(&self.bl).map(|(v, b)| v - b)),
            row_upper: min_slack(&mut row_values.iter().zip(&self.bu).map(|(v, b)| b - v)),
            var_lower: min_slack(&mut x.iter().zip(&self.lo).map(|(v, b)| v - b)),
            var_upper: min_slack(&mut x.iter().zip(&self.hi).map(|(v, b)| b - v)),
        };
        Ok(Residuals { row_values, slack })
    }

    /// The translated polyhedron `Ω − x`.
    pub fn shifted(&self, x: &[f64]) -> Result<Self, ModelError> {
        self.check_dim(x)?;
        let ax = self.a.mul_vec(x);
        let shift = |b: &[f64], s: &[f64]| b.iter().zip(s).map(|(b, s)| b - s).collect::<Vec<_>>();
        Ok(Self {
            a: self.a.clone(),
            bl: shift(&self.bl, &ax),
            bu: shift(&self.bu, &ax),
            lo: shift(&self.lo, x),
            hi: shift(&self.hi, x),
        })
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected == found {
        Ok(())
    } else {
        Err(ModelError::DimensionMismatch { what, expected, found })
    }
}

fn check_pairs(what: &'static str, lower: &[f64], upper: &[f64]) -> Result<(), ModelError> {
    for (index, (&l, &u)) in lower.iter().zip(upper).enumerate() {
        if l.is_nan() {
            return Err(ModelError::NaN { what: if what == "row" { "bl" } else { "lo" }, index });
        }
        if u.is_nan() {
            return Err(ModelError::NaN { what: if what == "row" { "bu" } else { "hi" }, index });
        }
        if l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(ModelError::CrossedBounds { what, index, lower: l, upper: u });
        }
    }
    Ok(())
}

/// `Ax` and the smallest slack to each side of the constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub row_values: Vec<f64>,
    pub slack: SlackSummary,
}

/// Minimum slack per constraint side; `+∞` when a side has no constraint
/// or only infinite bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackSummary {
    pub row_lower: f64,
    pub row_upper: f64,
    pub var_lower: f64,
    pub var_upper: f64,
}

/// Binding constraints at a point, each list sorted ascending. An equality
/// row (`bl = bu`) appears in both row lists; likewise for fixed variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActiveSet {
    pub rows_lower: Vec<usize>,
    pub rows_upper: Vec<usize>,
    pub vars_lower: Vec<usize>,
    pub vars_upper: Vec<usize>,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn len(&self) -> usize {
        self.rows_lower.len() + self.rows_upper.len() + self.vars_lower.len() + self.vars_upper.len()
    }

    /// Distinct active rows, ascending.
    pub fn rows(&self) -> Vec<usize> {
        merge_sorted(&self.rows_lower, &self.rows_upper)
    }

    /// Distinct variables at a bound, ascending.
    pub fn vars(&self) -> Vec<usize> {
        merge_sorted(&self.vars_lower, &self.vars_upper)
    }

    pub fn contains(&self, c: Constraint, side: Side) -> bool {
        let list = self.list(c, side);
        let idx = match c {
            Constraint::Row(i) | Constraint::Var(i) => i,
        };
        list.binary_search(&idx).is_ok()
    }

    fn list(&self, c: Constraint, side: Side) -> &Vec<usize> {
        match (c, side) {
            (Constraint::Row(_), Side::Lower) => &self.rows_lower,
            (Constraint::Row(_), Side::Upper) => &self.rows_upper,
            (Constraint::Var(_), Side::Lower) => &self.vars_lower,
            (Constraint::Var(_), Side::Upper) => &self.vars_upper,
        }
    }

    pub fn insert(&mut self, c: Constraint, side: Side) {
        let (list, idx) = match (c, side) {
            (Constraint::Row(i), Side::Lower) => (&mut self.rows_lower, i),
            (Constraint::Row(i), Side::Upper) => (&mut self.rows_upper, i),
            (Constraint::Var(j), Side::Lower) => (&mut self.vars_lower, j),
            (Constraint::Var(j), Side::Upper) => (&mut self.vars_upper, j),
        };
        if let Err(pos) = list.binary_search(&idx) {
            list.insert(pos, idx);
        }
    }

    /// Every binding constraint as `(constraint, side)`.
    pub fn iter(&self) -> impl Iterator<Item = (Constraint, Side)> + '_ {
        let rl = self.rows_lower.iter().map(|&i| (Constraint::Row(i), Side::Lower));
        let ru = self.rows_upper.iter().map(|&i| (Constraint::Row(i), Side::Upper));
        let vl = self.vars_lower.iter().map(|&j| (Constraint::Var(j), Side::Lower));
        let vu = self.vars_upper.iter().map(|&j| (Constraint::Var(j), Side::Upper));
        rl.chain(ru).chain(vl).chain(vu)
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.iter().all(|(c, s)| other.contains(c, s))
    }

    pub fn union(&self, other: &ActiveSet) -> ActiveSet {
        ActiveSet {
            rows_lower: merge_sorted(&self.rows_lower, &other.rows_lower),
            rows_upper: merge_sorted(&self.rows_upper, &other.rows_upper),
            vars_lower: merge_sorted(&self.vars_lower, &other.vars_lower),
            vars_upper: merge_sorted(&self.vars_upper, &other.vars_upper),
        }
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}
