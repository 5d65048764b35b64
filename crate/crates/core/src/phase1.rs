//! Nonmonotone gradient projection with a cyclic Barzilai–Borwein stepsize.
//!
//! The search direction is `d = P(x − αg) − x` where `P` projects onto `Ω`
//! (phase one) or onto the face fixed by an active set (A-GP in phase two).
//! Steps `s = ηʲ` are accepted by an Armijo test against a reference value
//! that may exceed `f(x)`.

use std::collections::VecDeque;

use thiserror::Error;

use crate::linalg::{dot, norm_inf};
use crate::model::{ActiveSet, Polyhedron};
use crate::objective::Evaluator;
use crate::projection::{project, project_active, ProjectionError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("line search failed after {0} trial steps")]
    LineSearchFailure(usize),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Armijo parameter `δ`.
    pub delta: f64,
    /// Backtracking factor `η`.
    pub eta: f64,
    pub max_backtracks: usize,
    /// Relative gap below which function values are treated as equal.
    pub eps_f: f64,
    /// Curvature parameter of the approximate Wolfe test.
    pub sigma_w: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self { delta: 0.1, eta: 0.5, max_backtracks: 50, eps_f: 1e-12, sigma_w: 0.9 }
    }
}

/// Cyclic BB stepsize: the quotient `sᵀs/sᵀy` is recomputed once every
/// `cycle_length` calls and held in between.
#[derive(Debug, Clone, PartialEq)]
pub struct BBState {
    alpha: f64,
    cycle_length: usize,
    cycle_position: usize,
    alpha_min: f64,
    alpha_max_cap: f64,
}

impl BBState {
    pub const ALPHA_MIN: f64 = 1e-20;
    pub const ALPHA_MAX: f64 = 1e20;

    /// Starts from `α₀ = ‖x₀‖∞ / ‖g₀‖∞`, or 1 when that is degenerate.
    pub fn new(x0: &[f64], g0: &[f64], cycle_length: usize) -> Self {
        let (xn, gn) = (norm_inf(x0), norm_inf(g0));
        let alpha = if xn > 0.0 && gn > 0.0 && (xn / gn).is_finite() {
            (xn / gn).clamp(Self::ALPHA_MIN, Self::ALPHA_MAX)
        } else {
            1.0
        };
        Self::with_alpha(alpha, cycle_length)
    }

    pub fn with_alpha(alpha: f64, cycle_length: usize) -> Self {
        assert!(cycle_length >= 1);
        Self {
            alpha: alpha.clamp(Self::ALPHA_MIN, Self::ALPHA_MAX),
            cycle_length,
            cycle_position: 0,
            alpha_min: Self::ALPHA_MIN,
            alpha_max_cap: Self::ALPHA_MAX,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cycle_length(&self) -> usize {
        self.cycle_length
    }

    pub fn cycle_position(&self) -> usize {
        self.cycle_position
    }

    /// Stepsize for the next iteration given the last step `x_prev → x`.
    pub fn bb_stepsize(&mut self, x: &[f64], x_prev: &[f64], g: &[f64], g_prev: &[f64]) -> f64 {
        if self.cycle_position > 0 {
            self.cycle_position = (self.cycle_position + 1) % self.cycle_length;
            return self.alpha;
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..x.len() {
            let s = x[i] - x_prev[i];
            let y = g[i] - g_prev[i];
            ss += s * s;
            sy += s * y;
        }
        self.alpha = if sy > 0.0 { (ss / sy).clamp(self.alpha_min, self.alpha_max_cap) } else { self.alpha_max_cap };
        if !self.alpha.is_finite() {
            self.alpha = self.alpha_max_cap;
        }
        self.cycle_position = 1 % self.cycle_length;
        self.alpha
    }
}

/// Reference value for the nonmonotone Armijo test: the maximum of the
/// last `memory` objective values, except on every `monotone_every`-th
/// update, where it drops to the latest value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceValue {
    window: VecDeque<f64>,
    memory: usize,
    monotone_every: usize,
    updates: usize,
    f_ref: f64,
    f_best: f64,
}

impl ReferenceValue {
    pub fn new(f0: f64, memory: usize, monotone_every: usize) -> Self {
        assert!(memory >= 1 && monotone_every >= 1);
        Self { window: VecDeque::from([f0]), memory, monotone_every, updates: 0, f_ref: f0, f_best: f0 }
    }

    /// The `M = 1` configuration: plain Armijo.
    pub fn monotone(f0: f64) -> Self {
        Self::new(f0, 1, 1)
    }

    pub fn f_ref(&self) -> f64 {
        self.f_ref
    }

    pub fn f_best(&self) -> f64 {
        self.f_best
    }

    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn update(&mut self, f_new: f64) {
        self.window.push_back(f_new);
        while self.window.len() > self.memory {
            self.window.pop_front();
        }
        self.f_best = self.f_best.min(f_new);
        self.updates += 1;
        self.f_ref = if self.updates % self.monotone_every == 0 {
            f_new
        } else {
            self.window.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        };
    }
}

/// Set the projection in `d = P(x − αg) − x` maps onto.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Omega,
    Face(&'a ActiveSet),
}

/// An accepted gradient-projection step.
#[derive(Debug, Clone, PartialEq)]
pub struct GpStep {
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub d: Vec<f64>,
    pub s: f64,
    pub gtd: f64,
    /// Accepted by the approximate Wolfe test rather than Armijo.
    pub wolfe: bool,
}

/// Largest `‖αg‖∞` used in a trial point, relative to `1 + ‖x‖∞`.
pub const TRIAL_REACH: f64 = 1e4;

/// `d = P(x − αg) − x`, with `α` cut back so that the trial point stays within
/// [`TRIAL_REACH`]`·(1 + ‖x‖∞)` of `x`. Projections of points much farther out
/// lose all accuracy to cancellation.
pub fn gp_direction(x: &[f64], g: &[f64], alpha: f64, p: &Polyhedron, target: Target<'_>, tol: f64) -> Result<Vec<f64>, ProjectionError> {
    let reach = TRIAL_REACH * (1.0 + norm_inf(x));
    let gmax = norm_inf(g);
    let alpha = if alpha * gmax > reach { reach / gmax } else { alpha };
    let trial: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - alpha * b).collect();
    let px = match target {
        Target::Omega => project(&trial, p, tol)?,
        Target::Face(s) => project_active(&trial, p, s, tol)?,
    };
    Ok(px.iter().zip(x).map(|(a, b)| a - b).collect())
}

/// One gradient-projection iteration. Returns `None` when `d = 0`.
#[allow(clippy::too_many_arguments)]
pub fn gp_step(
    ev: &Evaluator<'_>,
    p: &Polyhedron,
    x: &[f64],
    f: f64,
    g: &[f64],
    alpha: f64,
    target: Target<'_>,
    f_ref: f64,
    f_prev: Option<f64>,
    params: &LineSearchParams,
    tol: f64,
) -> Result<Option<GpStep>, StepError> {
    let d = gp_direction(x, g, alpha, p, target, tol)?;
    if d.iter().all(|v| *v == 0.0) {
        return Ok(None);
    }
    let gtd = dot(g, &d);
    if gtd >= 0.0 {
        // Projection error dominates: no usable descent along d.
        return Ok(None);
    }
    let top = f_ref.max(f_prev.unwrap_or(f_ref));
    let near = top - f <= params.eps_f * (1.0 + f.abs());
    let point = |s: f64| -> Vec<f64> {
        let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
        if s == 1.0 {
            // x + d is the projected point up to rounding; keep it exact.
            for (xi, (a, b)) in xt.iter_mut().zip(x.iter().zip(&d)) {
                *xi = a + b;
            }
        }
        for (j, xi) in xt.iter_mut().enumerate() {
            *xi = xi.max(p.lo()[j]).min(p.hi()[j]);
        }
        xt
    };

    if !near {
        let mut s = 1.0;
        for _ in 0..=params.max_backtracks {
            let xt = point(s);
            let ft = ev.value(&xt);
            if ft <= f_ref + s * params.delta * gtd {
                let (ft, gt) = ev.eval(&xt);
                return Ok(Some(GpStep { x: xt, f: ft, g: gt, d, s, gtd, wolfe: false }));
            }
            s *= params.eta;
        }
    }

    // Function values are at roundoff level: judge by directional slopes.
    let slack = params.eps_f * (1.0 + top.abs());
    let mut s = 1.0;
    for _ in 0..=params.max_backtracks {
        let xt = point(s);
        let (ft, gt) = ev.eval(&xt);
        let slope = dot(&gt, &d);
        let upper = slope <= (2.0 * params.delta - 1.0) * gtd;
        let curvature = s == 1.0 || slope >= params.sigma_w * gtd;
        if ft.is_finite() && ft <= top + slack && upper && curvature {
            return Ok(Some(GpStep { x: xt, f: ft, g: gt, d, s, gtd, wolfe: true }));
        }
        s *= params.eta;
    }
    Err(StepError::LineSearchFailure(2 * params.max_backtracks + 2))
}
