//! Phase two: active-set gradient projection (A-GP) and projected CG_DESCENT
//! on the face fixed by the active constraints.

use thiserror::Error;

use crate::linalg::{dot, norm2};
use crate::model::{ActiveSet, Constraint, Polyhedron, Side};
use crate::objective::Evaluator;
use crate::phase1::{gp_step, GpStep, LineSearchParams, StepError, Target};
use crate::projection::NullSpaceProjector;
use crate::stationarity::global_error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Phase2Error {
    /// An inactive constraint has no room left along the direction; the
    /// active set is stale and must be refreshed.
    #[error("nonpositive step {ratio:e} to {constraint} ({side:?})")]
    NonpositiveAlphaMax { constraint: Constraint, side: Side, ratio: f64 },
    #[error("CG line search failed after {0} evaluations")]
    LineSearchFailure(usize),
    #[error("direction is not a descent direction")]
    NotDescent,
    #[error(transparent)]
    Step(#[from] StepError),
}

/// Direction recurrence. `Direct` accumulates components outside the null
/// space and exists only for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recurrence {
    /// `D⁺ = −P̃g⁺ + βD`, `d⁺ = P̃D⁺`.
    Projected,
    /// `d⁺ = −P̃²g⁺ + βd`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgParams {
    /// CG_DESCENT family parameter, must exceed 1/4.
    pub eta_cg: f64,
    /// `|dᵀy| ≤ degenerate·‖d‖‖y‖` triggers a restart.
    pub degenerate: f64,
    pub max_evals: usize,
    pub delta: f64,
    pub sigma_w: f64,
    pub eps_f: f64,
    /// Allowed crossing of active constraints, see [`alpha_max`].
    pub drift_tol: f64,
}

impl Default for CgParams {
    fn default() -> Self {
        Self { eta_cg: 0.4, degenerate: 1e-30, max_evals: 50, delta: 0.1, sigma_w: 0.9, eps_f: 1e-12, drift_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartReason {
    DegenerateCurvature,
    NotDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirectionUpdate {
    Conjugate { beta: f64 },
    Restart(RestartReason),
}

/// `β = (P̃y)ᵀ(P̃g⁺)/(dᵀy) − η‖P̃y‖²/(dᵀy) · (dᵀg⁺)/(dᵀy)`
pub fn cg_beta(pg_new: &[f64], py: &[f64], d: &[f64], y: &[f64], g_new: &[f64], eta: f64) -> f64 {
    let dty = dot(d, y);
    dot(py, pg_new) / dty - eta * dot(py, py) / dty * (dot(d, g_new) / dty)
}

/// Projected CG over a frozen face.
#[derive(Debug, Clone)]
pub struct CgState {
    projector: NullSpaceProjector,
    recurrence: Recurrence,
    big_d: Vec<f64>,
    d: Vec<f64>,
    g_prev: Vec<f64>,
    alpha_prev: Option<f64>,
    restarts: usize,
    steps: usize,
}

impl CgState {
    pub fn new(projector: NullSpaceProjector, g: &[f64], recurrence: Recurrence) -> Self {
        let mut s = Self {
            projector,
            recurrence,
            big_d: Vec::new(),
            d: Vec::new(),
            g_prev: Vec::new(),
            alpha_prev: None,
            restarts: 0,
            steps: 0,
        };
        s.reset(g);
        s
    }

    fn reset(&mut self, g: &[f64]) {
        self.big_d = self.projector.apply(g).into_iter().map(|v| -v).collect();
        self.d = self.projector.apply(&self.big_d);
        self.g_prev = g.to_vec();
        self.alpha_prev = None;
    }

    /// Discards conjugacy: `D = −P̃g`, `d = −P̃²g`.
    pub fn restart(&mut self, g: &[f64]) {
        self.restarts += 1;
        self.reset(g);
    }

    pub fn projector(&self) -> &NullSpaceProjector {
        &self.projector
    }

    pub fn recurrence(&self) -> Recurrence {
        self.recurrence
    }

    pub fn direction(&self) -> &[f64] {
        &self.d
    }

    /// `D`; meaningless under [`Recurrence::Direct`].
    pub fn intermediate(&self) -> &[f64] {
        &self.big_d
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Stepsize accepted on the previous step since the last restart.
    pub fn alpha_prev(&self) -> Option<f64> {
        self.alpha_prev
    }

    /// Next direction from the gradient at the new iterate.
    pub fn cg_direction(&mut self, g_new: &[f64], params: &CgParams) -> DirectionUpdate {
        let y: Vec<f64> = g_new.iter().zip(&self.g_prev).map(|(a, b)| a - b).collect();
        let dty = dot(&self.d, &y);
        if !(dty.abs() > params.degenerate * norm2(&self.d) * norm2(&y)) {
            self.restart(g_new);
            return DirectionUpdate::Restart(RestartReason::DegenerateCurvature);
        }
        let pg = self.projector.apply(g_new);
        let py = self.projector.apply(&y);
        let beta = cg_beta(&pg, &py, &self.d, &y, g_new, params.eta_cg);
        match self.recurrence {
            Recurrence::Projected => {
                for (bd, p) in self.big_d.iter_mut().zip(&pg) {
                    *bd = -p + beta * *bd;
                }
                self.d = self.projector.apply(&self.big_d);
            }
            Recurrence::Direct => {
                let ppg = self.projector.apply(&pg);
                for (d, p) in self.d.iter_mut().zip(&ppg) {
                    *d = -p + beta * *d;
                }
            }
        }
        self.g_prev = g_new.to_vec();
        if !(dot(&self.d, g_new) < 0.0) {
            self.restart(g_new);
            return DirectionUpdate::Restart(RestartReason::NotDescent);
        }
        DirectionUpdate::Conjugate { beta }
    }
}

/// Largest feasible step and the constraints that block it.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocking {
    pub alpha: f64,
    /// Inactive constraints reached at `alpha`; empty when the step is
    /// limited by drift off an active constraint.
    pub blocking: Vec<(Constraint, Side)>,
}

/// Ratio test over the constraints not in `s`. Ratios within `1e-12`
/// relative of the minimum block together.
///
/// Constraints in `s` may be crossed by at most `drift_tol·(1+|b|)`. The
/// regularized projector leaves a small component of every direction
/// outside the face, and CG can build long steps from it once the face
/// problem is solved; the cap stops such a step before it leaves the face.
/// `f64::INFINITY` turns the cap off.
pub fn alpha_max(x: &[f64], p: &Polyhedron, s: &ActiveSet, dir: &[f64], drift_tol: f64) -> Result<Blocking, Phase2Error> {
    let mut ratios: Vec<(f64, Constraint, Side)> = Vec::new();
    let mut drift = f64::INFINITY;
    let mut consider = |c: Constraint, v: f64, rate: f64, lo: f64, hi: f64| {
        if rate > 0.0 && hi.is_finite() {
            if !s.contains(c, Side::Upper) {
                ratios.push(((hi - v) / rate, c, Side::Upper));
            } else if drift_tol.is_finite() {
                drift = drift.min(((hi - v) + drift_tol * (1.0 + hi.abs())).max(0.0) / rate);
            }
        } else if rate < 0.0 && lo.is_finite() {
            if !s.contains(c, Side::Lower) {
                ratios.push(((v - lo) / -rate, c, Side::Lower));
            } else if drift_tol.is_finite() {
                drift = drift.min(((v - lo) + drift_tol * (1.0 + lo.abs())).max(0.0) / -rate);
            }
        }
    };
    let a = p.a();
    for i in 0..p.m() {
        consider(Constraint::Row(i), a.row_dot(i, x), a.row_dot(i, dir), p.bl()[i], p.bu()[i]);
    }
    for j in 0..p.n() {
        consider(Constraint::Var(j), x[j], dir[j], p.lo()[j], p.hi()[j]);
    }
    let min = ratios.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        let &(ratio, constraint, side) = ratios.iter().find(|r| r.0 == min).expect("minimum exists");
        return Err(Phase2Error::NonpositiveAlphaMax { constraint, side, ratio });
    }
    if drift < min {
        return Ok(Blocking { alpha: drift, blocking: Vec::new() });
    }
    let cut = min * (1.0 + 1e-12);
    let mut blocking: Vec<(Constraint, Side)> = ratios.iter().filter(|r| r.0 <= cut).map(|r| (r.1, r.2)).collect();
    blocking.sort();
    Ok(Blocking { alpha: min, blocking })
}

/// Accepted CG line-search point.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub hit_boundary: bool,
    pub evals: usize,
}

#[derive(Debug, Clone)]
struct Trial {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

/// Wolfe line search on `φ(α) = f(x + α·dir)` over `[0, α_max]`.
///
/// The first trial is `min(guess, α_max)`, followed by a secant step on
/// `φ′` (exact for quadratics) and then bracketing. A minimizer beyond
/// `α_max` returns `α_max` with `hit_boundary` set.
#[allow(clippy::too_many_arguments)]
pub fn cg_line_search(
    ev: &Evaluator<'_>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    dir: &[f64],
    alpha_max: f64,
    guess: f64,
    params: &CgParams,
) -> Result<LineSearchOutcome, Phase2Error> {
    let dphi0 = dot(g0, dir);
    if !(dphi0 < 0.0) {
        return Err(Phase2Error::NotDescent);
    }
    let eps = params.eps_f * (1.0 + f0.abs());
    let evals = std::cell::Cell::new(0usize);
    let eval = |alpha: f64| -> Trial {
        evals.set(evals.get() + 1);
        let xt: Vec<f64> = x.iter().zip(dir).map(|(a, b)| a + alpha * b).collect();
        let (f, g) = ev.eval(&xt);
        let slope = dot(&g, dir);
        Trial { alpha, x: xt, f, g, slope }
    };
    let wolfe = |t: &Trial| {
        let curvature = t.slope >= params.sigma_w * dphi0;
        let armijo = t.f <= f0 + params.delta * t.alpha * dphi0;
        let approx = t.f <= f0 + eps && t.slope <= (2.0 * params.delta - 1.0) * dphi0;
        t.f.is_finite() && curvature && (armijo || approx)
    };
    let at_boundary = |t: &Trial| t.alpha == alpha_max && t.slope < 0.0 && t.f <= f0 + params.delta * t.alpha * dphi0;
    let finish = |t: Trial, evals: usize| LineSearchOutcome {
        hit_boundary: t.alpha == alpha_max,
        alpha: t.alpha,
        x: t.x,
        f: t.f,
        g: t.g,
        evals,
    };

    let mut c = guess.min(alpha_max);
    if !(c > 0.0 && c.is_finite()) {
        c = alpha_max.min(1.0);
    }
    let first = eval(c);
    if at_boundary(&first) {
        return Ok(finish(first, evals.get()));
    }

    let origin = Trial { alpha: 0.0, x: x.to_vec(), f: f0, g: g0.to_vec(), slope: dphi0 };
    let mut lo = origin;
    let mut hi: Option<Trial> = None;
    let too_far = |t: &Trial| !t.f.is_finite() || t.slope >= 0.0 || t.f > f0 + eps;

    let place = |t: Trial, lo: &mut Trial, hi: &mut Option<Trial>| {
        if too_far(&t) {
            *hi = Some(t);
        } else {
            *lo = t;
        }
    };

    // Secant step on φ′ from the origin and the first trial.
    if first.f.is_finite() && first.slope > dphi0 {
        let mut a_s = first.alpha * dphi0 / (dphi0 - first.slope);
        if a_s >= alpha_max {
            a_s = alpha_max;
        }
        if a_s > 0.0 && a_s.is_finite() && a_s != first.alpha {
            let second = eval(a_s);
            if at_boundary(&second) || wolfe(&second) {
                return Ok(finish(second, evals.get()));
            }
            if wolfe(&first) {
                return Ok(finish(first, evals.get()));
            }
            place(first, &mut lo, &mut hi);
            place(second, &mut lo, &mut hi);
        } else {
            if wolfe(&first) {
                return Ok(finish(first, evals.get()));
            }
            place(first, &mut lo, &mut hi);
        }
    } else {
        if wolfe(&first) {
            return Ok(finish(first, evals.get()));
        }
        place(first, &mut lo, &mut hi);
    }

    while evals.get() < params.max_evals {
        let next = match &hi {
            None => {
                if lo.alpha >= alpha_max {
                    break;
                }
                (4.0 * lo.alpha).max(f64::MIN_POSITIVE).min(alpha_max)
            }
            Some(h) => {
                let w = h.alpha - lo.alpha;
                if w <= 1e-16 * h.alpha {
                    break;
                }
                let mut t = 0.5 * (lo.alpha + h.alpha);
                if h.f.is_finite() && h.slope > lo.slope {
                    let s = (lo.alpha * h.slope - h.alpha * lo.slope) / (h.slope - lo.slope);
                    if s >= lo.alpha + 0.05 * w && s <= h.alpha - 0.05 * w {
                        t = s;
                    }
                }
                t
            }
        };
        let trial = eval(next);
        if at_boundary(&trial) || wolfe(&trial) {
            return Ok(finish(trial, evals.get()));
        }
        place(trial, &mut lo, &mut hi);
    }
    if lo.alpha > 0.0 && lo.f < f0 {
        return Ok(finish(lo, evals.get()));
    }
    Err(Phase2Error::LineSearchFailure(evals.get()))
}

/// Outcome of one CG iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct CgStep {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub alpha: f64,
    pub hit_boundary: bool,
    pub blocking: Vec<(Constraint, Side)>,
    pub update: Option<DirectionUpdate>,
    pub evals: usize,
}

/// One projected CG iteration from `x` along the current direction. The
/// initial trial step is `alpha_guess` right after a restart and the
/// previous accepted step otherwise. The direction is advanced unless the
/// boundary was hit.
#[allow(clippy::too_many_arguments)]
pub fn cg_iterate(
    state: &mut CgState,
    ev: &Evaluator<'_>,
    p: &Polyhedron,
    s: &ActiveSet,
    x: &[f64],
    f: f64,
    g: &[f64],
    alpha_guess: f64,
    params: &CgParams,
) -> Result<CgStep, Phase2Error> {
    let dir = state.d.clone();
    let block = alpha_max(x, p, s, &dir, params.drift_tol)?;
    let guess = state.alpha_prev.unwrap_or(alpha_guess);
    let ls = cg_line_search(ev, x, f, g, &dir, block.alpha, guess, params)?;
    state.steps += 1;
    let blocking = if ls.hit_boundary { block.blocking } else { Vec::new() };
    let update = if ls.hit_boundary {
        None
    } else {
        state.alpha_prev = Some(ls.alpha);
        let u = state.cg_direction(&ls.g, params);
        if matches!(u, DirectionUpdate::Restart(_)) {
            state.alpha_prev = None;
        }
        Some(u)
    };
    Ok(CgStep { x: ls.x, f: ls.f, g: ls.g, alpha: ls.alpha, hit_boundary: ls.hit_boundary, blocking, update, evals: ls.evals })
}

/// A-GP step: the gradient-projection step on the face `Ω_k` fixed by `s`,
/// with monotone acceptance. Returns `None` when the step is zero, or when
/// every component of `d` is at the rounding level of `x` (the face is then
/// stationary up to the accuracy of the projection).
#[allow(clippy::too_many_arguments)]
pub fn agp_step(
    ev: &Evaluator<'_>,
    p: &Polyhedron,
    s: &ActiveSet,
    x: &[f64],
    f: f64,
    g: &[f64],
    alpha: f64,
    params: &LineSearchParams,
    tol: f64,
) -> Result<Option<GpStep>, Phase2Error> {
    let st = gp_step(ev, p, x, f, g, alpha, Target::Face(s), f, None, params, tol)?;
    Ok(st.filter(|st| st.d.iter().zip(x).any(|(d, xi)| d.abs() > 4.0 * f64::EPSILON * (1.0 + xi.abs()))))
}

/// Puts `x` back on the constraints in `s`: a minimum-norm correction of
/// the residual on the stacked active rows, then active variables are set
/// to their bounds exactly. Returns whether `x` changed.
pub fn restore_active(p: &Polyhedron, s: &ActiveSet, pr: &NullSpaceProjector, x: &mut [f64]) -> bool {
    let before = x.to_vec();
    if !pr.active_rows().is_empty() {
        let r = pr.residual(p, s, x);
        if r.iter().any(|v| *v != 0.0) {
            pr.correct(x, &r);
        }
    }
    for &j in &s.vars_lower {
        x[j] = p.lo()[j];
    }
    for &j in &s.vars_upper {
        x[j] = p.hi()[j];
    }
    x.iter().zip(&before).any(|(a, b)| a != b)
}

/// Iterate of a standalone CG run.
#[derive(Debug, Clone, PartialEq)]
pub struct CgRecord {
    pub x: Vec<f64>,
    pub f: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgRun {
    pub x: Vec<f64>,
    pub f: f64,
    pub error: f64,
    pub converged: bool,
    pub records: Vec<CgRecord>,
    pub failure: Option<Phase2Error>,
}

/// Unconstrained CG_DESCENT from `x0`, stopping when `‖P(x − g) − x‖ ≤ tau`
/// with `P` the identity map of `ℝⁿ`. The first trial step after each
/// restart is the cyclic BB stepsize.
pub fn cg_descent(ev: &Evaluator<'_>, x0: &[f64], tau: f64, max_iter: usize, params: &CgParams) -> CgRun {
    use crate::phase1::BBState;

    let n = x0.len();
    let p = Polyhedron::unconstrained(n);
    let s = ActiveSet::default();
    let mut x = x0.to_vec();
    let (mut f, mut g) = ev.eval(&x);
    let mut bb = BBState::new(&x, &g, 4);
    let mut state = CgState::new(NullSpaceProjector::identity(n), &g, Recurrence::Projected);
    let mut records = Vec::new();
    let mut failure = None;
    let mut error = unconstrained_error(&x, &g, &p);
    while error > tau && records.len() < max_iter {
        match cg_iterate(&mut state, ev, &p, &s, &x, f, &g, bb.alpha(), params) {
            Ok(step) => {
                bb.bb_stepsize(&step.x, &x, &step.g, &g);
                x = step.x;
                f = step.f;
                g = step.g;
                records.push(CgRecord { x: x.clone(), f, alpha: step.alpha });
                error = unconstrained_error(&x, &g, &p);
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    CgRun { x, f, error, converged: error <= tau, records, failure }
}

fn unconstrained_error(x: &[f64], g: &[f64], p: &Polyhedron) -> f64 {
    global_error(x, g, p, 0.0).map(|(e, _)| e).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CsrMatrix;
    use crate::objective::Quadratic;
    use crate::projection::make_projector;

    fn quad(h: Vec<Vec<f64>>, c: Vec<f64>) -> Quadratic {
        let n = c.len();
        Quadratic::new(CsrMatrix::from_dense(&h, n), c)
    }

    #[test]
    fn alpha_max_ratio() {
        let p = Polyhedron::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let s = ActiveSet::default();
        let b = alpha_max(&[0.5, 0.5], &p, &s, &[1.0, 0.0], 1e-10).unwrap();
        assert_eq!(b.alpha, 0.5);
        assert_eq!(b.blocking, vec![(Constraint::Var(0), Side::Upper)]);
        let b = alpha_max(&[0.5, 0.5], &p, &s, &[0.0, 0.0], 1e-10).unwrap();
        assert_eq!(b.alpha, f64::INFINITY);
        // Ties block together.
        let b = alpha_max(&[0.5, 0.5], &p, &s, &[1.0, -1.0], 1e-10).unwrap();
        assert_eq!(b.blocking.len(), 2);
    }

    #[test]
    fn stale_active_set_is_reported() {
        let p = Polyhedron::boxed(vec![0.0], vec![1.0]).unwrap();
        let r = alpha_max(&[1.0], &p, &ActiveSet::default(), &[1.0], 1e-10);
        assert!(matches!(r, Err(Phase2Error::NonpositiveAlphaMax { .. })));
    }

    #[test]
    fn drift_off_active_constraints_is_capped() {
        let p = Polyhedron::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let s = p.active_set(&[0.0, 0.5], 1e-12).unwrap();
        let b = alpha_max(&[0.0, 0.5], &p, &s, &[-1e-9, 0.1], 1e-10).unwrap();
        assert!((b.alpha - 0.1).abs() < 1e-12);
        assert!(b.blocking.is_empty());
        let b = alpha_max(&[0.0, 0.5], &p, &s, &[-1e-9, 0.1], f64::INFINITY).unwrap();
        assert_eq!(b.alpha, 5.0);
    }

    #[test]
    fn beta_scalar_reference() {
        let g_new = [1.0, -2.0, 0.5];
        let g_old = [2.0, 1.0, -1.0];
        let d = [-2.0, -1.0, 1.0];
        let y: Vec<f64> = g_new.iter().zip(&g_old).map(|(a, b)| a - b).collect();
        // y = (−1, −3, 1.5), dᵀy = 2 + 3 + 1.5 = 6.5, yᵀg⁺ = −1 + 6 + 0.75 = 5.75,
        // ‖y‖² = 1 + 9 + 2.25 = 12.25, dᵀg⁺ = −2 + 2 + 0.5 = 0.5.
        let expect = 5.75 / 6.5 - 0.4 * 12.25 / 6.5 * (0.5 / 6.5);
        let b = cg_beta(&g_new, &y, &d, &y, &g_new, 0.4);
        assert!((b - expect).abs() < 1e-15);
    }

    #[test]
    fn quadratic_line_search_is_exact() {
        let q = quad(vec![vec![2.0, 0.0], vec![0.0, 8.0]], vec![0.0, 0.0]);
        let ev = Evaluator::new(&q);
        let x = [1.0, 1.0];
        let (f, g) = ev.eval(&x);
        let dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let out = cg_line_search(&ev, &x, f, &g, &dir, f64::INFINITY, 1.0, &CgParams::default()).unwrap();
        // φ′(0) = −gᵀg = −68, φ″ = dᵀHd = 2·4 + 8·64 = 520.
        assert!((out.alpha - 68.0 / 520.0).abs() < 1e-15);
        assert!(!out.hit_boundary);
        let out = cg_line_search(&ev, &x, f, &g, &dir, 0.01, 1.0, &CgParams::default()).unwrap();
        assert!(out.hit_boundary);
        assert_eq!(out.alpha, 0.01);
    }

    #[test]
    fn wolfe_holds_on_nonquadratic() {
        use crate::testfns::{TestFunction, TestFunctionKind};
        let tf = TestFunction::new(TestFunctionKind::Rosenbrock, 2).unwrap();
        let ev = Evaluator::new(&tf);
        let x = tf.start();
        let (f, g) = ev.eval(&x);
        let dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let params = CgParams::default();
        let out = cg_line_search(&ev, &x, f, &g, &dir, f64::INFINITY, 1.0, &params).unwrap();
        let d0 = dot(&g, &dir);
        let d1 = dot(&out.g, &dir);
        assert!(out.f <= f + params.delta * out.alpha * d0);
        assert!(d1 >= params.sigma_w * d0);
    }

    #[test]
    fn unconstrained_cg_directions_are_conjugate() {
        let h = vec![
            vec![4.0, 1.0, 0.0, 0.5],
            vec![1.0, 3.0, 0.2, 0.0],
            vec![0.0, 0.2, 2.0, 0.1],
            vec![0.5, 0.0, 0.1, 1.0],
        ];
        let q = quad(h.clone(), vec![1.0, -1.0, 2.0, 0.5]);
        let ev = Evaluator::new(&q);
        let p = Polyhedron::unconstrained(4);
        let s = ActiveSet::default();
        let x0 = vec![0.0; 4];
        let (mut f, mut g) = ev.eval(&x0);
        let mut x = x0;
        let mut st = CgState::new(NullSpaceProjector::identity(4), &g, Recurrence::Projected);
        let mut dirs = Vec::new();
        for _ in 0..3 {
            dirs.push(st.direction().to_vec());
            let step = cg_iterate(&mut st, &ev, &p, &s, &x, f, &g, 1.0, &CgParams::default()).unwrap();
            x = step.x;
            f = step.f;
            g = step.g;
        }
        let hd = |v: &[f64]| -> Vec<f64> { h.iter().map(|r| dot(r, v)).collect() };
        for i in 0..dirs.len() {
            for j in 0..i {
                let c = dot(&dirs[i], &hd(&dirs[j]));
                let scale = norm2(&dirs[i]) * norm2(&hd(&dirs[j]));
                assert!(c.abs() <= 1e-8 * scale, "d{i}ᵀHd{j} = {c}");
            }
        }
    }

    #[test]
    fn first_direction_is_doubly_projected() {
        let p = Polyhedron::from_triplets(3, 1, &[0, 0], &[0, 1], &[1.0, 1.0], vec![1.0], vec![1.0], vec![f64::NEG_INFINITY; 3], vec![f64::INFINITY; 3])
            .unwrap();
        let s = p.active_set(&[0.5, 0.5, 0.0], 1e-12).unwrap();
        let pr = make_projector(&p, &s, None).unwrap();
        let g = [1.0, 3.0, -2.0];
        let st = CgState::new(pr.clone(), &g, Recurrence::Projected);
        let pg = pr.apply(&g);
        let ppg = pr.apply(&pg);
        for (a, b) in st.direction().iter().zip(&ppg) {
            assert!((a + b).abs() < 1e-15);
        }
        // d = (1, −1, 2) up to σ.
        assert!((st.direction()[0] - 1.0).abs() < 1e-7 && (st.direction()[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn agp_on_empty_set_matches_gradient_projection() {
        let q = quad(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-2.0, 0.5]);
        let ev = Evaluator::new(&q);
        let p = Polyhedron::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let x = [0.5, 0.5];
        let (f, g) = ev.eval(&x);
        let params = LineSearchParams::default();
        let a = agp_step(&ev, &p, &ActiveSet::default(), &x, f, &g, 1.0, &params, 1e-12).unwrap().unwrap();
        let b = gp_step(&ev, &p, &x, f, &g, 1.0, Target::Omega, f, None, &params, 1e-12).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.x, vec![1.0, 0.0]);
    }

    #[test]
    fn agp_at_a_vertex_is_zero() {
        let q = quad(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-2.0, 0.5]);
        let ev = Evaluator::new(&q);
        let p = Polyhedron::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let x = [1.0, 0.0];
        let s = p.active_set(&x, 1e-12).unwrap();
        let (f, g) = ev.eval(&x);
        assert!(agp_step(&ev, &p, &s, &x, f, &g, 1.0, &LineSearchParams::default(), 1e-12).unwrap().is_none());
    }

    #[test]
    fn agp_ignores_rounding_level_directions() {
        let q = quad(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![-1.0, -1.0]);
        let ev = Evaluator::new(&q);
        let p = Polyhedron::from_triplets(2, 1, &[0, 0], &[0, 1], &[1.0, 1.0], vec![f64::NEG_INFINITY], vec![1.0], vec![0.0; 2], vec![f64::INFINITY; 2])
            .unwrap();
        let x = [0.5 + 1e-16, 0.5 - 1e-16];
        let s = p.active_set(&x, 1e-12).unwrap();
        let (f, g) = ev.eval(&x);
        assert!(agp_step(&ev, &p, &s, &x, f, &g, 1.0, &LineSearchParams::default(), 1e-12).unwrap().is_none());
    }

    #[test]
    fn restore_snaps_bounds_and_rows() {
        let p = Polyhedron::from_triplets(2, 1, &[0, 0], &[0, 1], &[1.0, 1.0], vec![f64::NEG_INFINITY], vec![1.0], vec![0.0; 2], vec![f64::INFINITY; 2])
            .unwrap();
        let mut x = vec![1e-15, 1.0 + 3e-16];
        let s = p.active_set(&x, 1e-12).unwrap();
        let pr = make_projector(&p, &s, None).unwrap();
        assert!(restore_active(&p, &s, &pr, &mut x));
        assert_eq!(x[0], 0.0);
        assert!((x[0] + x[1] - 1.0).abs() <= 2.0 * f64::EPSILON);
    }
}
