//! Dual active-set projection onto a general polyhedron.
//!
//! This is the Goldfarb–Idnani scheme for `min ½‖y − x‖²`. Starting from the
//! unconstrained minimizer `y = x`, the most violated constraint is added to
//! a working set `W` while dual feasibility is kept: if some multiplier in
//! `W` would turn negative first, that constraint is dropped and the step is
//! resumed. Bounds in `W` fix variables, so only rows enter the Gram matrix.
//!
//! With the pending constraint `p` carrying multiplier `t`, the minimizer on
//! `W` is affine in `t`. Each step re-solves at `t` and `t + 1` from scratch
//! instead of updating a factorization.

use crate::linalg::{default_sigma, CsrMatrix, RegularizedFactorization};
use crate::model::Constraint;

use super::{clamp, ProjectionError, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bind {
    Lower,
    Upper,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    c: Constraint,
    bind: Bind,
}

/// Multipliers of inequality entries are kept `≥ 0` in this convention.
fn sign(bind: Bind) -> f64 {
    if bind == Bind::Lower {
        -1.0
    } else {
        1.0
    }
}

pub(super) fn project(x: &[f64], sys: &System<'_>, tol: f64) -> Result<Vec<f64>, ProjectionError> {
    let (m, n) = (sys.a.nrows(), sys.a.ncols());
    let mut dual = DualActiveSet { sys, x, tol, work: Vec::new(), iters: 0, cap: 10 * (m + n), best: None };

    for j in 0..n {
        if sys.lo[j] == sys.hi[j] {
            dual.work.push(Entry { c: Constraint::Var(j), bind: Bind::Equal });
        }
    }
    for i in 0..m {
        if sys.bl[i] == sys.bu[i] {
            let y = dual.current()?;
            dual.add(Constraint::Row(i), Bind::Equal, &y)?;
        }
    }

    loop {
        let y = dual.current()?;
        let Some((c, bind, viol)) = dual.most_violated(&y) else {
            return Ok(clamp(&y, &sys.lo, &sys.hi));
        };
        dual.note_iterate(&y, viol);
        dual.add(c, bind, &y)?;
    }
}

struct DualActiveSet<'a> {
    sys: &'a System<'a>,
    x: &'a [f64],
    tol: f64,
    work: Vec<Entry>,
    iters: usize,
    cap: usize,
    best: Option<(Vec<f64>, f64)>,
}

impl DualActiveSet<'_> {
    fn bound(&self, c: Constraint, bind: Bind) -> f64 {
        match (c, bind) {
            (Constraint::Row(i), Bind::Upper) => self.sys.bu[i],
            (Constraint::Row(i), _) => self.sys.bl[i],
            (Constraint::Var(j), Bind::Upper) => self.sys.hi[j],
            (Constraint::Var(j), _) => self.sys.lo[j],
        }
    }

    fn value(&self, c: Constraint, y: &[f64]) -> f64 {
        match c {
            Constraint::Row(i) => self.sys.a.row_dot(i, y),
            Constraint::Var(j) => y[j],
        }
    }

    fn in_work(&self, c: Constraint) -> bool {
        self.work.iter().any(|e| e.c == c)
    }

    /// Minimizer on the current working set, no pending constraint.
    fn current(&self) -> Result<Vec<f64>, ProjectionError> {
        Ok(WorkingSolve::new(self)?.eval(self.x).0)
    }

    /// Most violated constraint outside `W`, smallest index on ties.
    fn most_violated(&self, y: &[f64]) -> Option<(Constraint, Bind, f64)> {
        let mut worst: Option<(Constraint, Bind, f64)> = None;
        let m = self.sys.a.nrows();
        let candidates = (0..m).map(Constraint::Row).chain((0..y.len()).map(Constraint::Var));
        for c in candidates {
            if self.in_work(c) {
                continue;
            }
            let v = self.value(c, y);
            let (l, u) = (self.bound(c, Bind::Lower), self.bound(c, Bind::Upper));
            let lv = if l.is_finite() { (l - v) / (1.0 + l.abs()) } else { f64::NEG_INFINITY };
            let uv = if u.is_finite() { (v - u) / (1.0 + u.abs()) } else { f64::NEG_INFINITY };
            let (viol, bind) = if lv >= uv { (lv, Bind::Lower) } else { (uv, Bind::Upper) };
            if viol > self.tol && worst.is_none_or(|w| viol > w.2) {
                worst = Some((c, bind, viol));
            }
        }
        worst
    }

    fn note_iterate(&mut self, y: &[f64], viol: f64) {
        if self.best.as_ref().is_none_or(|b| viol < b.1) {
            self.best = Some((y.to_vec(), viol));
        }
    }

    fn tick(&mut self) -> Result<(), ProjectionError> {
        self.iters += 1;
        if self.iters > self.cap {
            let (best, violation) = self.best.clone().unwrap_or_else(|| (self.x.to_vec(), f64::INFINITY));
            return Err(ProjectionError::MaxIterations { best, violation });
        }
        Ok(())
    }

    /// Brings `p` into `W`, dropping blocking constraints on the way.
    fn add(&mut self, p: Constraint, bind: Bind, y_start: &[f64]) -> Result<(), ProjectionError> {
        let b = self.bound(p, bind);
        // An equality is approached from whichever side it is violated on.
        let dir = match bind {
            Bind::Equal => {
                if self.value(p, y_start) >= b {
                    1.0
                } else {
                    -1.0
                }
            }
            _ => sign(bind),
        };
        let normal_sq = match p {
            Constraint::Row(i) => self.sys.a.row_norm_sq(i),
            Constraint::Var(_) => 1.0,
        };
        let mut t = 0.0;
        loop {
            self.tick()?;
            let solve = WorkingSolve::new(self)?;
            let shifted = |t: f64| {
                let mut xp = self.x.to_vec();
                match p {
                    Constraint::Row(i) => {
                        let (cols, vals) = self.sys.a.row(i);
                        for (&j, &a) in cols.iter().zip(vals) {
                            xp[j] -= t * dir * a;
                        }
                    }
                    Constraint::Var(j) => xp[j] -= t * dir,
                }
                xp
            };
            let (y0, u0) = solve.eval(&shifted(t));
            let (y1, u1) = solve.eval(&shifted(t + 1.0));
            // y(t + δ) = y0 − δz and u(t + δ) = u0 + δr.
            let z: Vec<f64> = y0.iter().zip(&y1).map(|(a, b)| a - b).collect();
            let viol = dir * (self.value(p, &y0) - b);
            let rate = dir * self.value(p, &z);

            let primal_step = if rate > 1e-12 * normal_sq { (viol / rate).max(0.0) } else { f64::INFINITY };
            let mut block: Option<(usize, f64)> = None;
            for (k, e) in self.work.iter().enumerate() {
                if e.bind == Bind::Equal {
                    continue;
                }
                let r = u1[k] - u0[k];
                if r < 0.0 {
                    let step = (u0[k] / -r).max(0.0);
                    if block.is_none_or(|(kb, sb)| step < sb || (step == sb && e.c < self.work[kb].c)) {
                        block = Some((k, step));
                    }
                }
            }

            match block {
                None if primal_step.is_infinite() => {
                    if viol <= self.tol * (1.0 + b.abs()) {
                        // Dependent on W and already satisfied: redundant.
                        return Ok(());
                    }
                    return Err(ProjectionError::InfeasiblePolyhedron);
                }
                Some((k, step)) if step < primal_step => {
                    t += step;
                    self.work.remove(k);
                }
                _ => {
                    self.work.push(Entry { c: p, bind });
                    return Ok(());
                }
            }
        }
    }
}

/// The equality-constrained projection for a fixed working set.
struct WorkingSolve<'a> {
    dual: &'a DualActiveSet<'a>,
    /// Bound value of each variable held in `W`.
    fixed: Vec<Option<f64>>,
    /// Working rows: `(position in W, row index, bound)`.
    rows: Vec<(usize, usize, f64)>,
    arf: CsrMatrix,
    factor: Option<RegularizedFactorization>,
}

impl<'a> WorkingSolve<'a> {
    fn new(dual: &'a DualActiveSet<'a>) -> Result<Self, ProjectionError> {
        let a = dual.sys.a;
        let mut fixed = vec![None; a.ncols()];
        let mut rows = Vec::new();
        for (k, e) in dual.work.iter().enumerate() {
            match e.c {
                Constraint::Var(j) => fixed[j] = Some(dual.bound(e.c, e.bind)),
                Constraint::Row(i) => rows.push((k, i, dual.bound(e.c, e.bind))),
            }
        }
        let restricted: Vec<Vec<(usize, f64)>> = rows
            .iter()
            .map(|&(_, i, _)| {
                let (cols, vals) = a.row(i);
                cols.iter().zip(vals).filter(|(j, _)| fixed[**j].is_none()).map(|(&j, &v)| (j, v)).collect()
            })
            .collect();
        let arf = CsrMatrix::from_sorted_rows(a.ncols(), restricted);
        let factor = if rows.is_empty() {
            None
        } else {
            let sigma = 1e-6 * default_sigma(&arf);
            let subset = rows.iter().map(|r| r.1).collect();
            Some(RegularizedFactorization::factor(&arf, subset, sigma)?)
        };
        Ok(Self { dual, fixed, rows, arf, factor })
    }

    /// Minimizer of `½‖y − xp‖²` on `W` and the multipliers of `W`, indexed
    /// like `W` and sign-adjusted so that dual feasibility reads `u ≥ 0`.
    fn eval(&self, xp: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = self.dual.sys.a;
        let mut y: Vec<f64> = xp.iter().zip(&self.fixed).map(|(&v, f)| f.unwrap_or(v)).collect();
        let mut u = vec![0.0; self.dual.work.len()];
        let mut at_lambda = vec![0.0; a.ncols()];
        if let Some(factor) = &self.factor {
            // A_RF A_RFᵀ λ = A_R y − b, with y = xp on free and bound values on
            // fixed columns.
            let rhs: Vec<f64> = self.rows.iter().map(|&(_, i, b)| a.row_dot(i, &y) - b).collect();
            let lambda = factor.solve_gram_unregularized(&rhs, 20).expect("dimensions agree");
            let step = self.arf.tmul_vec(&lambda);
            for (yj, sj) in y.iter_mut().zip(&step) {
                *yj -= sj;
            }
            for (&(k, i, _), &l) in self.rows.iter().zip(&lambda) {
                u[k] = sign(self.dual.work[k].bind) * l;
                let (cols, vals) = a.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    at_lambda[j] += v * l;
                }
            }
        }
        // y − xp + A_Rᵀλ + Σ μⱼ eⱼ = 0 on the fixed variables.
        for (k, e) in self.dual.work.iter().enumerate() {
            if let Constraint::Var(j) = e.c {
                let mu = xp[j] - y[j] - at_lambda[j];
                u[k] = sign(e.bind) * mu;
            }
        }
        (y, u)
    }
}
