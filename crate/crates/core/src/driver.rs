//! The solver loop: initial projection, switching between the two phases,
//! θ adaptation and termination.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{ActiveSet, ModelError, Polyhedron};
use crate::objective::{Evaluator, Objective};
use crate::phase1::{gp_step, BBState, LineSearchParams, ReferenceValue, StepError, Target};
use crate::phase2::{agp_step, cg_iterate, restore_active, CgParams, CgState, DirectionUpdate, Phase2Error, Recurrence};
use crate::projection::{make_projector, project, projection_tol, NullSpaceProjector, ProjectionError};
use crate::stationarity::{global_error, local_error};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("starting point has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Convergence tolerance on `E(x)`.
    pub tau: f64,
    /// Branching parameter: phase two is used while `e ≥ θE`.
    pub theta: f64,
    /// θ reduction factor.
    pub mu: f64,
    /// Cap on combined phase iterations.
    pub max_iter: usize,
    /// Cap on objective evaluations.
    pub max_evals: Option<usize>,
    /// Nonmonotone window; 1 gives monotone Armijo.
    pub memory: usize,
    /// Every this many updates the reference value drops to the current `f`.
    pub monotone_every: usize,
    pub cycle_length: usize,
    pub line_search: LineSearchParams,
    pub cg: CgParams,
    /// Regularization of `P̃`; `None` picks `1e-8·max(1, ‖A_B‖∞²)`.
    pub sigma: Option<f64>,
    /// Relative activity tolerance.
    pub eps_act: f64,
    pub recurrence: Recurrence,
    pub record_trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tau: 1e-6,
            theta: 0.01,
            mu: 0.5,
            max_iter: 100_000,
            max_evals: None,
            memory: 8,
            monotone_every: 40,
            cycle_length: 4,
            line_search: LineSearchParams::default(),
            cg: CgParams::default(),
            sigma: None,
            eps_act: crate::model::DEFAULT_ACTIVITY_TOL,
            recurrence: Recurrence::Projected,
            record_trace: false,
        }
    }
}

impl Options {
    /// Forces `M = 1` in the phase-one reference value.
    pub fn monotone(mut self) -> Self {
        self.memory = 1;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |what: &str| Err(SolveError::InvalidOption(what.to_string()));
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return bad("theta must lie in (0, 1)");
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return bad("mu must lie in (0, 1)");
        }
        if self.memory == 0 || self.monotone_every == 0 || self.cycle_length == 0 {
            return bad("memory, monotone_every and cycle_length must be positive");
        }
        let ls = &self.line_search;
        if !(ls.delta > 0.0 && ls.delta < 0.5 && ls.eta > 0.0 && ls.eta < 1.0) {
            return bad("line search needs delta in (0, 1/2) and eta in (0, 1)");
        }
        if !(self.cg.eta_cg > 0.25) {
            return bad("eta_cg must exceed 1/4");
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return bad("sigma must be positive");
            }
        }
        if !(self.eps_act >= 0.0) {
            return bad("eps_act must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Converged,
    Step(Phase),
}

/// `θ ← μθ` when the phase-one visit that just ended ran more than one
/// iteration.
pub fn reduce_theta(theta: f64, mu: f64, phase1_iters_this_visit: usize) -> f64 {
    if phase1_iters_this_visit > 1 {
        mu * theta
    } else {
        theta
    }
}

/// Phase selection, separated from the numerics so that it can be driven
/// by scripted `(E, e)` sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSchedule {
    theta: f64,
    mu: f64,
    tau: f64,
    phase: Option<Phase>,
    visit_iters: usize,
    forced: bool,
    reductions: usize,
}

impl PhaseSchedule {
    pub fn new(theta: f64, mu: f64, tau: f64) -> Self {
        Self { theta, mu, tau, phase: None, visit_iters: 0, forced: false, reductions: 0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phase(&self) -> Option<Phase> {
        self.phase
    }

    /// Iterations performed in the current phase-one visit.
    pub fn visit_iters(&self) -> usize {
        self.visit_iters
    }

    pub fn theta_reductions(&self) -> usize {
        self.reductions
    }

    pub fn is_forced(&self) -> bool {
        self.forced
    }

    /// Phase for the next iteration at a point with errors `E` and `e`.
    pub fn decide(&mut self, big_e: f64, small_e: f64) -> Decision {
        if big_e <= self.tau {
            return Decision::Converged;
        }
        let stay_in_two = small_e >= self.theta * big_e;
        if self.forced {
            self.enter_one();
            return Decision::Step(Phase::One);
        }
        match self.phase {
            None | Some(Phase::Two) if !stay_in_two => {
                self.enter_one();
                Decision::Step(Phase::One)
            }
            None | Some(Phase::Two) => {
                self.phase = Some(Phase::Two);
                Decision::Step(Phase::Two)
            }
            Some(Phase::One) if stay_in_two => {
                let reduced = reduce_theta(self.theta, self.mu, self.visit_iters);
                if reduced != self.theta {
                    self.reductions += 1;
                }
                self.theta = reduced;
                self.visit_iters = 0;
                self.phase = Some(Phase::Two);
                Decision::Step(Phase::Two)
            }
            Some(Phase::One) => Decision::Step(Phase::One),
        }
    }

    fn enter_one(&mut self) {
        if self.phase != Some(Phase::One) {
            self.visit_iters = 0;
        }
        self.phase = Some(Phase::One);
    }

    /// Records an iteration performed in `phase`.
    pub fn record_iteration(&mut self, phase: Phase) {
        if phase == Phase::One {
            self.visit_iters += 1;
            self.forced = false;
        }
    }

    /// Makes the next decision a phase-one iteration regardless of `e`.
    pub fn force_phase_one(&mut self) {
        self.forced = true;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepKind {
    Init,
    GradientProjection,
    ActiveGradientProjection,
    ConjugateGradient,
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub phase: Option<Phase>,
    pub kind: StepKind,
    pub f: f64,
    pub global_error: f64,
    pub local_error: f64,
    /// θ in force when the next branch decision is taken.
    pub theta: f64,
    /// Phase-two episode counter; 0 outside phase two.
    pub episode: usize,
    /// Constraints binding at the iterate.
    pub active: ActiveSet,
    pub max_violation: f64,
    pub step: f64,
    pub forced: bool,
    pub hit_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIterations,
    LineSearchFailure,
    InfeasibleProblem,
    /// The projected starting point already satisfies `E ≤ τ`.
    StationaryStart,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::LineSearchFailure => "line_search_failure",
            Status::InfeasibleProblem => "infeasible_problem",
            Status::StationaryStart => "stationary_start",
        }
    }

    /// `E ≤ τ` was reached.
    pub fn is_success(&self) -> bool {
        matches!(self, Status::Converged | Status::StationaryStart)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Stats {
    pub iterations: usize,
    pub phase_one_iters: usize,
    pub phase_two_iters: usize,
    pub agp_iters: usize,
    pub cg_iters: usize,
    pub cg_restarts: usize,
    pub episodes: usize,
    pub theta_reductions: usize,
    pub forced_phase_one: usize,
    /// Phase-two steps discarded because restoring the active constraints
    /// increased `f`.
    pub rejected_steps: usize,
    pub value_calls: usize,
    pub grad_calls: usize,
    pub projections: usize,
    pub factorizations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: Status,
    pub x: Vec<f64>,
    pub f: f64,
    pub global_error: f64,
    pub local_error: f64,
    pub theta: f64,
    pub stats: Stats,
    pub trace: Vec<TraceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Agp,
    Cg,
}

struct Iterate {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    active: ActiveSet,
    projector: NullSpaceProjector,
    big_e: f64,
    small_e: f64,
}

struct Solver<'a> {
    ev: Evaluator<'a>,
    p: &'a Polyhedron,
    opts: &'a Options,
    tol: f64,
    feas_tol: f64,
    stats: Stats,
    trace: Vec<TraceRecord>,
}

impl<'a> Solver<'a> {
    fn project(&mut self, x: &[f64]) -> Result<Vec<f64>, ProjectionError> {
        self.stats.projections += 1;
        project(x, self.p, self.tol)
    }

    fn active_set(&self, x: &[f64]) -> Result<ActiveSet, ModelError> {
        self.p.active_set_within(x, self.opts.eps_act, self.feas_tol)
    }

    fn projector(&mut self, s: &ActiveSet) -> Result<NullSpaceProjector, SolveError> {
        let pr = make_projector(self.p, s, self.opts.sigma).map_err(ProjectionError::from)?;
        if !pr.is_identity() {
            self.stats.factorizations += 1;
        }
        Ok(pr)
    }

    fn measure(&mut self, x: Vec<f64>, f: f64, g: Vec<f64>, active: ActiveSet, projector: NullSpaceProjector) -> Result<Iterate, SolveError> {
        self.stats.projections += 1;
        let (big_e, _) = global_error(&x, &g, self.p, self.tol)?;
        let (small_e, _) = local_error(&g, &projector);
        Ok(Iterate { x, f, g, active, projector, big_e, small_e })
    }

    fn evals(&self) -> usize {
        self.ev.value_calls().max(self.ev.grad_calls())
    }

    #[allow(clippy::too_many_arguments)]
    fn record(&mut self, it: &Iterate, phase: Option<Phase>, kind: StepKind, theta: f64, episode: usize, step: f64, forced: bool, hit: bool) {
        if !self.opts.record_trace {
            return;
        }
        let max_violation = self.p.max_violation(&it.x).map(|v| v.0).unwrap_or(f64::INFINITY);
        let active = self.p.active_set_within(&it.x, self.opts.eps_act, f64::INFINITY).unwrap_or_default();
        self.trace.push(TraceRecord {
            iter: self.stats.iterations,
            phase,
            kind,
            f: it.f,
            global_error: it.big_e,
            local_error: it.small_e,
            theta,
            episode,
            active,
            max_violation,
            step,
            forced,
            hit_boundary: hit,
        });
    }
}

/// Minimizes `obj` over `p` from `x0`.
pub fn solve(obj: &dyn Objective, p: &Polyhedron, x0: &[f64], opts: &Options) -> Result<SolveReport, SolveError> {
    opts.validate()?;
    if x0.len() != p.n() || obj.dim() != p.n() {
        let found = if x0.len() != p.n() { x0.len() } else { obj.dim() };
        return Err(SolveError::DimensionMismatch { expected: p.n(), found });
    }
    let start = Instant::now();
    let tol = projection_tol(opts.tau);
    let mut sv = Solver {
        ev: Evaluator::new(obj),
        p,
        opts,
        tol,
        feas_tol: (100.0 * tol).max(1e-9),
        stats: Stats::default(),
        trace: Vec::new(),
    };

    let x1 = match sv.project(x0) {
        Ok(x) => x,
        Err(ProjectionError::InfeasiblePolyhedron) => {
            let stats = Stats { wall_time: start.elapsed(), projections: 1, ..Stats::default() };
            return Ok(SolveReport {
                status: Status::InfeasibleProblem,
                x: x0.to_vec(),
                f: f64::NAN,
                global_error: f64::INFINITY,
                local_error: f64::INFINITY,
                theta: opts.theta,
                stats,
                trace: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let (f1, g1) = sv.ev.eval(&x1);
    let s1 = sv.active_set(&x1)?;
    let pr1 = sv.projector(&s1)?;
    let mut it = sv.measure(x1, f1, g1, s1, pr1)?;
    sv.record(&it, None, StepKind::Init, opts.theta, 0, 0.0, false, false);

    let mut bb = BBState::new(&it.x, &it.g, opts.cycle_length);
    let mut refv = ReferenceValue::new(it.f, opts.memory, opts.monotone_every);
    let mut f_prev: Option<f64> = None;
    let mut schedule = PhaseSchedule::new(opts.theta, opts.mu, opts.tau);
    let mut episode = 0usize;
    let mut mode = Mode::Cg;
    let mut cg: Option<CgState> = None;
    // Whether the active set changed on the step into the current point.
    let mut changed = !it.active.is_empty();
    let mut refreshes = 0usize;
    let mut last_phase: Option<Phase> = None;

    let status = if it.big_e <= opts.tau {
        Status::StationaryStart
    } else {
        loop {
            if sv.stats.iterations >= opts.max_iter || opts.max_evals.is_some_and(|m| sv.evals() >= m) {
                break Status::MaxIterations;
            }
            let forced = schedule.is_forced();
            let phase = match schedule.decide(it.big_e, it.small_e) {
                Decision::Converged => break Status::Converged,
                Decision::Step(ph) => ph,
            };
            if forced {
                sv.stats.forced_phase_one += 1;
            }
            if phase == Phase::Two && last_phase != Some(Phase::Two) {
                episode += 1;
                sv.stats.episodes += 1;
                mode = if changed { Mode::Agp } else { Mode::Cg };
                cg = None;
            }
            if phase == Phase::One {
                cg = None;
            }
            last_phase = Some(phase);

            let x_old = it.x.clone();
            let g_old = it.g.clone();
            let f_old = it.f;
            let (kind, step, hit);
            match phase {
                Phase::One => {
                    let r = gp_step(&sv.ev, p, &it.x, it.f, &it.g, bb.alpha(), Target::Omega, refv.f_ref(), f_prev, &opts.line_search, tol);
                    sv.stats.projections += 1;
                    let st = match r {
                        Ok(Some(st)) => st,
                        Ok(None) | Err(StepError::LineSearchFailure(_)) => break Status::LineSearchFailure,
                        Err(StepError::Projection(e)) => return Err(e.into()),
                    };
                    let active = sv.active_set(&st.x)?;
                    changed = active != it.active;
                    let pr = if changed { sv.projector(&active)? } else { it.projector.clone() };
                    (kind, step, hit) = (StepKind::GradientProjection, st.s, false);
                    it = sv.measure(st.x, st.f, st.g, active, pr)?;
                    sv.stats.phase_one_iters += 1;
                }
                Phase::Two => {
                    let outcome = match mode {
                        Mode::Agp => {
                            sv.stats.projections += 1;
                            match agp_step(&sv.ev, p, &it.active, &it.x, it.f, &it.g, bb.alpha(), &opts.line_search, tol) {
                                Ok(Some(st)) => Some((st.x, st.f, st.g, st.s, false, Vec::new(), StepKind::ActiveGradientProjection)),
                                Ok(None) | Err(Phase2Error::Step(StepError::LineSearchFailure(_))) => None,
                                Err(Phase2Error::Step(StepError::Projection(e))) => return Err(e.into()),
                                Err(_) => None,
                            }
                        }
                        Mode::Cg => {
                            let state = cg.get_or_insert_with(|| CgState::new(it.projector.clone(), &it.g, opts.recurrence));
                            match cg_iterate(state, &sv.ev, p, &it.active, &it.x, it.f, &it.g, bb.alpha(), &opts.cg) {
                                Ok(st) => {
                                    if matches!(st.update, Some(DirectionUpdate::Restart(_))) {
                                        sv.stats.cg_restarts += 1;
                                    }
                                    Some((st.x, st.f, st.g, st.alpha, st.hit_boundary, st.blocking, StepKind::ConjugateGradient))
                                }
                                Err(Phase2Error::NonpositiveAlphaMax { constraint, side, .. }) if refreshes <= p.n() + p.m() => {
                                    refreshes += 1;
                                    let mut s = it.active.clone();
                                    s.insert(constraint, side);
                                    let pr = sv.projector(&s)?;
                                    let mut x = it.x.clone();
                                    restore_active(p, &s, &pr, &mut x);
                                    let (f, g) = sv.ev.eval(&x);
                                    it = sv.measure(x, f, g, s, pr)?;
                                    cg = None;
                                    continue;
                                }
                                Err(_) => None,
                            }
                        }
                    };
                    let Some((x_new, f_new, g_new, s_new, hit_b, blocking, k)) = outcome else {
                        // No progress on the face: let phase one move the point.
                        schedule.force_phase_one();
                        cg = None;
                        last_phase = None;
                        continue;
                    };
                    refreshes = 0;
                    let mut working = it.active.union(&sv.active_set(&x_new)?);
                    for (c, side) in blocking {
                        working.insert(c, side);
                    }
                    changed = working != it.active;
                    let pr = if changed { sv.projector(&working)? } else { it.projector.clone() };
                    let mut x = x_new;
                    let (f, g) = if restore_active(p, &working, &pr, &mut x) { sv.ev.eval(&x) } else { (f_new, g_new) };
                    if !(f <= f_old + opts.line_search.eps_f * (1.0 + f_old.abs())) {
                        // Putting the point back on the face undid the decrease.
                        sv.stats.rejected_steps += 1;
                        cg = None;
                        if k == StepKind::ConjugateGradient {
                            mode = Mode::Agp;
                        } else {
                            schedule.force_phase_one();
                            last_phase = None;
                        }
                        continue;
                    }
                    match k {
                        StepKind::ActiveGradientProjection if !changed => mode = Mode::Cg,
                        StepKind::ConjugateGradient if changed || hit_b => {
                            mode = Mode::Agp;
                            cg = None;
                        }
                        _ => {}
                    }
                    if k == StepKind::ActiveGradientProjection {
                        sv.stats.agp_iters += 1;
                    } else {
                        sv.stats.cg_iters += 1;
                    }
                    (kind, step, hit) = (k, s_new, hit_b);
                    it = sv.measure(x, f, g, working, pr)?;
                    sv.stats.phase_two_iters += 1;
                }
            }
            sv.stats.iterations += 1;
            schedule.record_iteration(phase);
            bb.bb_stepsize(&it.x, &x_old, &it.g, &g_old);
            refv.update(it.f);
            f_prev = Some(f_old);
            let ep = if phase == Phase::Two { episode } else { 0 };
            sv.record(&it, Some(phase), kind, schedule.theta(), ep, step, forced, hit);
        }
    };
    sv.stats.theta_reductions = schedule.theta_reductions();
    sv.stats.value_calls = sv.ev.value_calls();
    sv.stats.grad_calls = sv.ev.grad_calls();
    sv.stats.wall_time = start.elapsed();
    Ok(SolveReport {
        status,
        x: it.x,
        f: it.f,
        global_error: it.big_e,
        local_error: it.small_e,
        theta: schedule.theta(),
        stats: sv.stats,
        trace: sv.trace,
    })
}
