//! Dense brute-force references for testing the `pasa` solver.
//!
//! Everything here works on plain row-major `Vec<Vec<f64>>` data and uses
//! dense arithmetic only, so that nothing is shared with the sparse code it
//! checks.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Largest `n` handled by enumeration.
pub const MAX_N: usize = 8;
/// Largest `m` handled by enumeration.
pub const MAX_M: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("instance with n = {n}, m = {m} exceeds the enumeration budget")]
    BudgetExceeded { n: usize, m: usize },
    #[error("the polyhedron is empty")]
    Infeasible,
    #[error("Hessian is not positive definite")]
    IndefiniteHessian,
    #[error("interior-point reference failed: {0}")]
    Backend(String),
}

/// `{bl ≤ Ax ≤ bu, lo ≤ x ≤ hi}` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePolyhedron {
    pub a: Vec<Vec<f64>>,
    pub bl: Vec<f64>,
    pub bu: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DensePolyhedron {
    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// Largest violation, scaled by `1 + |bound|`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.constraints()
            .iter()
            .map(|c| {
                let v = dot(&c.coef, x);
                let lv = (c.lower - v) / (1.0 + c.lower.abs());
                let uv = (v - c.upper) / (1.0 + c.upper.abs());
                lv.max(uv).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn constraints(&self) -> Vec<Row> {
        let n = self.n();
        let mut out: Vec<Row> = self
            .a
            .iter()
            .zip(self.bl.iter().zip(&self.bu))
            .map(|(r, (&l, &u))| Row { coef: r.clone(), lower: l, upper: u })
            .collect();
        for j in 0..n {
            if self.lo[j].is_finite() || self.hi[j].is_finite() {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                out.push(Row { coef: e, lower: self.lo[j], upper: self.hi[j] });
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Row {
    coef: Vec<f64>,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bind {
    Lower,
    Upper,
    Equal,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_matrix(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Euclidean projection of `x` onto `p` by enumerating working sets.
pub fn oracle_project(x: &[f64], p: &DensePolyhedron) -> Result<Vec<f64>, OracleError> {
    let c: Vec<f64> = x.iter().map(|v| -v).collect();
    oracle_qp(&identity(p.n()), &c, p).map(|(y, _)| y)
}

/// Global minimizer of `½xᵀHx + cᵀx` over `p` by working-set enumeration.
/// Returns `(x*, f*)`.
pub fn oracle_qp(h: &[Vec<f64>], c: &[f64], p: &DensePolyhedron) -> Result<(Vec<f64>, f64), OracleError> {
    let (n, m) = (p.n(), p.m());
    if n > MAX_N || m > MAX_M {
        return Err(OracleError::BudgetExceeded { n, m });
    }
    let hm = symmetric(h, n);
    if hm.clone().cholesky().is_none() {
        return Err(OracleError::IndefiniteHessian);
    }
    let x = enumerate(&hm, c, p).ok_or(OracleError::Infeasible)?;
    let f = qp_value(&hm, c, &x);
    Ok((x, f))
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn enumerate(h: &DMatrix<f64>, c: &[f64], p: &DensePolyhedron) -> Option<Vec<f64>> {
    let rows = p.constraints();
    let mut search = Enumeration { h, c, p, rows: &rows, best: None, kkt: None };
    let mut chosen = Vec::new();
    let mut basis = Vec::new();
    // Breadth by size: small working sets are tried first and a full KKT
    // point ends the search.
    for size in 0..=p.n().min(rows.len()) {
        search.visit(0, size, &mut chosen, &mut basis);
        if search.kkt.is_some() {
            break;
        }
    }
    search.kkt.or(search.best).map(|(x, _)| x)
}

struct Enumeration<'a> {
    h: &'a DMatrix<f64>,
    c: &'a [f64],
    p: &'a DensePolyhedron,
    rows: &'a [Row],
    best: Option<(Vec<f64>, f64)>,
    kkt: Option<(Vec<f64>, f64)>,
}

impl Enumeration<'_> {
    fn visit(&mut self, start: usize, remaining: usize, chosen: &mut Vec<(usize, Bind)>, basis: &mut Vec<Vec<f64>>) {
        if self.kkt.is_some() {
            return;
        }
        if remaining == 0 {
            self.evaluate(chosen);
            return;
        }
        for i in start..self.rows.len() {
            let row = &self.rows[i];
            let Some(q) = orthogonal_part(&row.coef, basis) else { continue };
            let sides: &[Bind] = if row.lower == row.upper {
                &[Bind::Equal]
            } else {
                match (row.lower.is_finite(), row.upper.is_finite()) {
                    (true, true) => &[Bind::Lower, Bind::Upper],
                    (true, false) => &[Bind::Lower],
                    (false, true) => &[Bind::Upper],
                    (false, false) => &[],
                }
            };
            basis.push(q);
            for &side in sides {
                chosen.push((i, side));
                self.visit(i + 1, remaining - 1, chosen, basis);
                chosen.pop();
            }
            basis.pop();
        }
    }

    fn evaluate(&mut self, chosen: &[(usize, Bind)]) {
        let n = self.p.n();
        let k = chosen.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(self.h);
        for j in 0..n {
            rhs[j] = -self.c[j];
        }
        for (r, &(i, side)) in chosen.iter().enumerate() {
            let row = &self.rows[i];
            for j in 0..n {
                kkt[(n + r, j)] = row.coef[j];
                kkt[(j, n + r)] = row.coef[j];
            }
            rhs[n + r] = if side == Bind::Upper { row.upper } else { row.lower };
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { return };
        let x: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        if self.p.violation(&x) > 1e-10 {
            return;
        }
        let f = qp_value(self.h, self.c, &x);
        // Stationarity reads Hx + c + Cᵀλ = 0: a binding lower bound needs
        // λ ≤ 0 and a binding upper bound λ ≥ 0.
        let scale = 1.0 + sol.amax();
        let signs_ok = chosen.iter().enumerate().all(|(r, &(_, side))| {
            let lam = sol[n + r];
            match side {
                Bind::Lower => lam <= 1e-10 * scale,
                Bind::Upper => lam >= -1e-10 * scale,
                Bind::Equal => true,
            }
        });
        if signs_ok {
            self.kkt = Some((x, f));
        } else if self.best.as_ref().is_none_or(|b| f < b.1) {
            self.best = Some((x, f));
        }
    }
}

/// Component of `v` orthogonal to the orthonormal `basis`, normalized, or
/// `None` when `v` is (numerically) in its span.
fn orthogonal_part(v: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for q in basis {
            let t = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= t * qi;
            }
        }
    }
    let nr = dot(&r, &r).sqrt();
    let nv = dot(v, v).sqrt();
    if nr <= 1e-9 * nv {
        return None;
    }
    Some(r.into_iter().map(|x| x / nr).collect())
}

fn symmetric(h: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| 0.5 * (h[i][j] + h[j][i]))
}

fn qp_value(h: &DMatrix<f64>, c: &[f64], x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    0.5 * xv.dot(&(h * &xv)) + dot(c, x)
}

/// QP reference for instances beyond the enumeration budget: an
/// interior-point solve followed by an equality-constrained polish on the
/// constraints it finds binding.
pub fn reference_qp(h: &[Vec<f64>], c: &[f64], p: &DensePolyhedron) -> Result<(Vec<f64>, f64), OracleError> {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

    let n = p.n();
    let hm = symmetric(h, n);
    if hm.clone().cholesky().is_none() {
        return Err(OracleError::IndefiniteHessian);
    }
    let rows = p.constraints();

    // Upper triangle of H, column by column.
    let mut colptr = vec![0usize];
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    for j in 0..n {
        for i in 0..=j {
            if hm[(i, j)] != 0.0 {
                rowval.push(i);
                nzval.push(hm[(i, j)]);
            }
        }
        colptr.push(rowval.len());
    }
    let pmat = CscMatrix::new(n, n, colptr, rowval, nzval);

    // Equalities first, then every finite inequality side as `s = b − Ax ≥ 0`.
    let mut eq: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut ineq: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &rows {
        if r.lower == r.upper {
            eq.push((r.coef.clone(), r.lower));
            continue;
        }
        if r.upper.is_finite() {
            ineq.push((r.coef.clone(), r.upper));
        }
        if r.lower.is_finite() {
            ineq.push((r.coef.iter().map(|v| -v).collect(), -r.lower));
        }
    }
    let stacked: Vec<&(Vec<f64>, f64)> = eq.iter().chain(&ineq).collect();
    let dense: Vec<Vec<f64>> = stacked.iter().map(|(a, _)| a.clone()).collect();
    let b: Vec<f64> = stacked.iter().map(|(_, b)| *b).collect();
    let amat = dense_to_csc(&dense, n);
    let mut cones = Vec::new();
    if !eq.is_empty() {
        cones.push(SupportedConeT::ZeroConeT(eq.len()));
    }
    if !ineq.is_empty() {
        cones.push(SupportedConeT::NonnegativeConeT(ineq.len()));
    }
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(500)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .tol_ktratio(1e-10)
        .build()
        .map_err(|e| OracleError::Backend(e.to_string()))?;
    let mut solver = DefaultSolver::new(&pmat, c, &amat, &b, &cones, settings)
        .map_err(|e| OracleError::Backend(format!("{e:?}")))?;
    solver.solve();
    let status = solver.solution.status;
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Err(OracleError::Infeasible)
        }
        other => return Err(OracleError::Backend(format!("{other:?}"))),
    }
    let x_ipm = solver.solution.x.clone();
    let f_ipm = qp_value(&hm, c, &x_ipm);

    // Polish: hold every nearly binding constraint as an equality.
    let mut basis = Vec::new();
    let mut active: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &rows {
        let v = dot(&r.coef, &x_ipm);
        for bnd in [r.lower, r.upper] {
            if bnd.is_finite() && (v - bnd).abs() <= 1e-7 * (1.0 + bnd.abs()) {
                if let Some(q) = orthogonal_part(&r.coef, &basis) {
                    basis.push(q);
                    active.push((r.coef.clone(), bnd));
                }
                break;
            }
        }
    }
    let k = active.len();
    let mut kkt = DMatrix::zeros(n + k, n + k);
    let mut rhs = DVector::zeros(n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&hm);
    for j in 0..n {
        rhs[j] = -c[j];
    }
    for (r, (coef, bnd)) in active.iter().enumerate() {
        for j in 0..n {
            kkt[(n + r, j)] = coef[j];
            kkt[(j, n + r)] = coef[j];
        }
        rhs[n + r] = *bnd;
    }
    if let Some(sol) = kkt.lu().solve(&rhs) {
        let x: Vec<f64> = sol.rows(0, n).iter().copied().collect();
        let f = qp_value(&hm, c, &x);
        if p.violation(&x) <= 1e-12 && f <= f_ipm + 1e-9 * (1.0 + f_ipm.abs()) {
            return Ok((x, f));
        }
    }
    Ok((x_ipm, f_ipm))
}

fn dense_to_csc(rows: &[Vec<f64>], ncols: usize) -> clarabel::algebra::CscMatrix<f64> {
    let mut colptr = vec![0usize];
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    for j in 0..ncols {
        for (i, r) in rows.iter().enumerate() {
            if r[j] != 0.0 {
                rowval.push(i);
                nzval.push(r[j]);
            }
        }
        colptr.push(rowval.len());
    }
    clarabel::algebra::CscMatrix::new(rows.len(), ncols, colptr, rowval, nzval)
}

/// KKT residual of `x` for `min ½xᵀHx + cᵀx` over `p`: the distance from
/// `−∇f(x)` to the normal cone of the constraints binding within `tol`,
/// plus the primal violation. `NaN` when `n` exceeds the enumeration budget.
pub fn kkt_residual(h: &[Vec<f64>], c: &[f64], p: &DensePolyhedron, x: &[f64], tol: f64) -> f64 {
    let n = p.n();
    let hm = symmetric(h, n);
    let xv = DVector::from_column_slice(x);
    let grad = &hm * &xv + DVector::from_column_slice(c);
    // Distance to the normal cone equals the norm of the projection of −∇f
    // onto the tangent cone.
    let mut cone = DensePolyhedron { a: Vec::new(), bl: Vec::new(), bu: Vec::new(), lo: vec![f64::NEG_INFINITY; n], hi: vec![f64::INFINITY; n] };
    for r in p.constraints() {
        let v = dot(&r.coef, x);
        let at_lo = r.lower.is_finite() && (v - r.lower).abs() <= tol * (1.0 + r.lower.abs());
        let at_hi = r.upper.is_finite() && (v - r.upper).abs() <= tol * (1.0 + r.upper.abs());
        if at_lo || at_hi {
            cone.a.push(r.coef.clone());
            cone.bl.push(if at_lo { 0.0 } else { f64::NEG_INFINITY });
            cone.bu.push(if at_hi { 0.0 } else { f64::INFINITY });
        }
    }
    let stat = if cone.m() == 0 {
        grad.norm()
    } else if n <= MAX_N {
        let g: Vec<f64> = grad.iter().copied().collect();
        match enumerate(&DMatrix::identity(n, n), &g, &cone) {
            Some(t) => dot(&t, &t).sqrt(),
            None => f64::INFINITY,
        }
    } else {
        f64::NAN
    };
    stat + p.violation(x)
}

/// Minimizer of `cᵀx` over a bounded `p` by enumerating vertices. Returns
/// `(x*, f*)`; `x*` is one optimal vertex when the optimum is not unique.
pub fn oracle_lp(c: &[f64], p: &DensePolyhedron) -> Result<(Vec<f64>, f64), OracleError> {
    let (n, m) = (p.n(), p.m());
    if n > MAX_N || m > MAX_M {
        return Err(OracleError::BudgetExceeded { n, m });
    }
    let rows = p.constraints();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut chosen = Vec::new();
    let mut basis = Vec::new();
    vertices(&rows, p, 0, &mut chosen, &mut basis, &mut |x| {
        let f = dot(c, &x);
        if best.as_ref().is_none_or(|b| f < b.1) {
            best = Some((x, f));
        }
    });
    best.ok_or(OracleError::Infeasible)
}

fn vertices(
    rows: &[Row],
    p: &DensePolyhedron,
    start: usize,
    chosen: &mut Vec<(usize, f64)>,
    basis: &mut Vec<Vec<f64>>,
    visit: &mut dyn FnMut(Vec<f64>),
) {
    let n = p.n();
    if chosen.len() == n {
        let a = DMatrix::from_fn(n, n, |r, j| rows[chosen[r].0].coef[j]);
        let b = DVector::from_iterator(n, chosen.iter().map(|&(_, v)| v));
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            if p.violation(&x) <= 1e-10 {
                visit(x);
            }
        }
        return;
    }
    for i in start..rows.len() {
        let Some(q) = orthogonal_part(&rows[i].coef, basis) else { continue };
        let r = &rows[i];
        let mut sides = vec![];
        if r.lower.is_finite() {
            sides.push(r.lower);
        }
        if r.upper.is_finite() && r.upper != r.lower {
            sides.push(r.upper);
        }
        basis.push(q);
        for v in sides {
            chosen.push((i, v));
            vertices(rows, p, i + 1, chosen, basis, visit);
            chosen.pop();
        }
        basis.pop();
    }
}

/// Root of the nondecreasing `h` on `[lo, hi]`, or the endpoint nearest to
/// it. Infinite ends are searched outward by doubling.
fn monotone_root(h: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let mut a = if lo.is_finite() { lo } else { -1.0f64.min(hi) };
    let mut b = if hi.is_finite() { hi } else { 1.0f64.max(lo) };
    while !lo.is_finite() && h(a) > 0.0 && a > -1e300 {
        a = 2.0 * a - 1.0;
    }
    while !hi.is_finite() && h(b) < 0.0 && b < 1e300 {
        b = 2.0 * b + 1.0;
    }
    if h(a) >= 0.0 {
        return a;
    }
    if h(b) <= 0.0 {
        return b;
    }
    loop {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return mid;
        }
        if h(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Minimizer of a separable `Σ fᵢ(xᵢ)` over `lo ≤ x ≤ hi` and at most one row
/// `bl ≤ aᵀx ≤ bu`, where `dphi(i, t) = fᵢ'(t)` is strictly increasing in
/// `t`. The multiplier of the row is found by bisection.
pub fn separable_oracle(
    dphi: &dyn Fn(usize, f64) -> f64,
    row: Option<(&[f64], f64, f64)>,
    lo: &[f64],
    hi: &[f64],
) -> Vec<f64> {
    let n = lo.len();
    let coef = row.map(|r| r.0.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let at = |lam: f64| -> Vec<f64> {
        (0..n).map(|i| monotone_root(&|t| dphi(i, t) + lam * coef[i], lo[i], hi[i])).collect()
    };
    let x0 = at(0.0);
    let Some((a, bl, bu)) = row else { return x0 };
    let v = dot(a, &x0);
    let target = if v < bl {
        bl
    } else if v > bu {
        bu
    } else {
        return x0;
    };
    // aᵀx(λ) is nonincreasing in λ.
    let lam = monotone_root(&|l| target - dot(a, &at(l)), f64::NEG_INFINITY, f64::INFINITY);
    at(lam)
}

/// Global minimizer of `f` on `[a, b]`: the best of `samples` grid points,
/// refined by golden section search on the neighbouring cells.
pub fn minimize_scalar(f: &dyn Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> f64 {
    let h = (b - a) / samples as f64;
    let k = (0..=samples).min_by(|&i, &j| f(a + i as f64 * h).total_cmp(&f(a + j as f64 * h))).unwrap();
    let (mut lo, mut hi) = ((a + (k as f64 - 1.0) * h).max(a), (a + (k as f64 + 1.0) * h).min(b));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let x1 = hi - r * (hi - lo);
        let x2 = lo + r * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

/// `AAᵀ + σI` as a dense matrix.
pub fn dense_gram(a: &[Vec<f64>], ncols: usize, sigma: f64) -> Vec<Vec<f64>> {
    let am = to_matrix(a, ncols);
    let mut g = &am * am.transpose();
    for i in 0..a.len() {
        g[(i, i)] += sigma;
    }
    rows_of(&g)
}

/// Solution of `M s = r` for square `M`.
pub fn dense_solve(mat: &[Vec<f64>], r: &[f64]) -> Option<Vec<f64>> {
    let k = r.len();
    let mm = to_matrix(mat, k);
    mm.lu().solve(&DVector::from_column_slice(r)).map(|s| s.iter().copied().collect())
}

/// The matrix `I − Aᵀ(AAᵀ + σI)⁻¹A`.
pub fn dense_nullspace_projector(a: &[Vec<f64>], ncols: usize, sigma: f64) -> Vec<Vec<f64>> {
    let am = to_matrix(a, ncols);
    let mut g = &am * am.transpose();
    for i in 0..a.len() {
        g[(i, i)] += sigma;
    }
    let ginv = g.try_inverse().expect("Gram matrix plus σI is invertible");
    let p = DMatrix::<f64>::identity(ncols, ncols) - am.transpose() * ginv * &am;
    rows_of(&p)
}

/// `‖g − Aᵀy‖` minimized over `y`: the norm of the exact orthogonal
/// projection of `g` onto the null space of `A`, by SVD. Rank-deficient
/// and empty `A` are allowed.
pub fn nullspace_component(a: &[Vec<f64>], g: &[f64]) -> f64 {
    let n = g.len();
    if a.is_empty() {
        return dot(g, g).sqrt();
    }
    let at = to_matrix(a, n).transpose();
    let rhs = DVector::from_column_slice(g);
    let svd = at.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    let y = svd.solve(&rhs, eps).expect("both factors were computed");
    (rhs - at * y).norm()
}

/// Dense `A v`.
pub fn dense_matvec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|r| dot(r, v)).collect()
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}
