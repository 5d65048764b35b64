//! C interface to the solver.
//!
//! All objects are opaque handles created by a `*_new`/`*_from_*` function
//! and released by the matching `*_free`. Every fallible function returns a
//! [`PasaErrorCode`]; on failure [`pasa_last_error_message`] describes the
//! error for the calling thread.
//!
//! Handles are not thread-safe. Distinct handles may be used from different
//! threads.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pasa::driver::{solve, Options, SolveReport, Status};
use pasa::io::Problem;
use pasa::linalg::CsrMatrix;
use pasa::model::Polyhedron;
use pasa::objective::Objective;
use pasa::projection::{project, projection_tol};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PasaErrorCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    InfeasibleProblem = 4,
    SolverError = 5,
    Panic = 6,
}

/// Outcome of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PasaStatus {
    Converged = 0,
    MaxIterations = 1,
    LineSearchFailure = 2,
    InfeasibleProblem = 3,
    StationaryStart = 4,
}

impl From<Status> for PasaStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => PasaStatus::Converged,
            Status::MaxIterations => PasaStatus::MaxIterations,
            Status::LineSearchFailure => PasaStatus::LineSearchFailure,
            Status::InfeasibleProblem => PasaStatus::InfeasibleProblem,
            Status::StationaryStart => PasaStatus::StationaryStart,
        }
    }
}

/// Objective callback: returns `f(x)` and writes `∇f(x)` into `grad`. Both
/// arrays have length `n`.
pub type PasaObjectiveFn = Option<unsafe extern "C" fn(user_data: *mut c_void, x: *const f64, grad: *mut f64, n: usize) -> f64>;

struct Callback {
    f: unsafe extern "C" fn(*mut c_void, *const f64, *mut f64, usize) -> f64,
    user_data: *mut c_void,
    n: usize,
}

impl Objective for Callback {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.n];
        self.value_grad(x, &mut g)
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        // SAFETY: the creator of the problem promised a callback valid for
        // arrays of length n.
        unsafe { (self.f)(self.user_data, x.as_ptr(), grad.as_mut_ptr(), self.n) }
    }
}

enum ProblemObjective {
    Loaded(Problem),
    Callback(Polyhedron, Callback),
}

/// A polyhedron together with an objective.
pub struct PasaProblem {
    inner: ProblemObjective,
}

impl PasaProblem {
    fn parts(&self) -> (&dyn Objective, &Polyhedron, Option<&[f64]>) {
        match &self.inner {
            ProblemObjective::Loaded(p) => (&p.objective, &p.polyhedron, Some(&p.x0)),
            ProblemObjective::Callback(p, c) => (c, p, None),
        }
    }
}

pub struct PasaOptions {
    inner: Options,
}

pub struct PasaResult {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(code: PasaErrorCode, msg: impl std::fmt::Display) -> PasaErrorCode {
    set_error(msg);
    code
}

/// Runs `body`, turning panics into [`PasaErrorCode::Panic`].
fn guard(body: impl FnOnce() -> PasaErrorCode) -> PasaErrorCode {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => {
            if code == PasaErrorCode::Ok {
                set_error("");
            }
            code
        }
        Err(_) => fail(PasaErrorCode::Panic, "internal panic"),
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        return Some(&[]);
    }
    (!p.is_null()).then(|| std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread. Empty after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn pasa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pasa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a problem in the JSON problem format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pasa_problem_from_json(json: *const c_char, out: *mut *mut PasaProblem) -> PasaErrorCode {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(PasaErrorCode::NullPointer, "null argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(PasaErrorCode::ParseError, "problem text is not UTF-8");
        };
        match Problem::from_json_str(text, "problem") {
            Ok(p) => {
                *out = Box::into_raw(Box::new(PasaProblem { inner: ProblemObjective::Loaded(p) }));
                PasaErrorCode::Ok
            }
            Err(e) => fail(PasaErrorCode::ParseError, e),
        }
    })
}

/// Builds a problem from `A` in triplet form, bounds and an objective
/// callback. Bound arrays may be null for "unbounded"; use `±INFINITY` for
/// individual infinite entries.
///
/// # Safety
/// Triplet arrays must hold `nnz` entries, `bl`/`bu` `m` entries and
/// `lo`/`hi` `n` entries when not null. `objective` must stay valid, and
/// `user_data` usable by it, for the lifetime of the problem.
#[no_mangle]
pub unsafe extern "C" fn pasa_problem_new(
    n: usize,
    m: usize,
    nnz: usize,
    rows: *const usize,
    cols: *const usize,
    vals: *const f64,
    bl: *const f64,
    bu: *const f64,
    lo: *const f64,
    hi: *const f64,
    objective: PasaObjectiveFn,
    user_data: *mut c_void,
    out: *mut *mut PasaProblem,
) -> PasaErrorCode {
    guard(|| {
        let Some(f) = objective else { return fail(PasaErrorCode::NullPointer, "objective callback is null") };
        if out.is_null() {
            return fail(PasaErrorCode::NullPointer, "out is null");
        }
        if n == 0 {
            return fail(PasaErrorCode::InvalidArgument, "n must be positive");
        }
        let idx = |p: *const usize| if nnz == 0 { Some(&[][..]) } else { (!p.is_null()).then(|| std::slice::from_raw_parts(p, nnz)) };
        let (Some(r), Some(c), Some(v)) = (idx(rows), idx(cols), slice(vals, nnz)) else {
            return fail(PasaErrorCode::NullPointer, "triplet array is null");
        };
        let bounds = |p: *const f64, len: usize, fill: f64| if p.is_null() { vec![fill; len] } else { std::slice::from_raw_parts(p, len).to_vec() };
        let a = match CsrMatrix::from_triplets(m, n, r, c, v) {
            Ok(a) => a,
            Err(e) => return fail(PasaErrorCode::InvalidArgument, e),
        };
        let poly = Polyhedron::new(
            a,
            bounds(bl, m, f64::NEG_INFINITY),
            bounds(bu, m, f64::INFINITY),
            bounds(lo, n, f64::NEG_INFINITY),
            bounds(hi, n, f64::INFINITY),
        );
        match poly {
            Ok(p) => {
                let cb = Callback { f, user_data, n };
                *out = Box::into_raw(Box::new(PasaProblem { inner: ProblemObjective::Callback(p, cb) }));
                PasaErrorCode::Ok
            }
            Err(e) => fail(PasaErrorCode::InvalidArgument, e),
        }
    })
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_problem_dim(problem: *const PasaProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.parts().1.n())
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pasa_problem_free(problem: *mut PasaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Default options.
#[no_mangle]
pub extern "C" fn pasa_options_new() -> *mut PasaOptions {
    Box::into_raw(Box::new(PasaOptions { inner: Options::default() }))
}

/// # Safety
/// `options` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_free(options: *mut PasaOptions) {
    if !options.is_null() {
        drop(Box::from_raw(options));
    }
}

unsafe fn with_options(options: *mut PasaOptions, set: impl FnOnce(&mut Options)) -> PasaErrorCode {
    guard(|| {
        let Some(o) = options.as_mut() else { return fail(PasaErrorCode::NullPointer, "options is null") };
        let mut next = o.inner.clone();
        set(&mut next);
        match next.validate() {
            Ok(()) => {
                o.inner = next;
                PasaErrorCode::Ok
            }
            Err(e) => fail(PasaErrorCode::InvalidArgument, e),
        }
    })
}

/// Convergence tolerance on the global error.
///
/// # Safety
/// `options` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_set_tau(options: *mut PasaOptions, tau: f64) -> PasaErrorCode {
    with_options(options, |o| o.tau = tau)
}

/// # Safety
/// `options` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_set_theta(options: *mut PasaOptions, theta: f64) -> PasaErrorCode {
    with_options(options, |o| o.theta = theta)
}

/// # Safety
/// `options` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_set_mu(options: *mut PasaOptions, mu: f64) -> PasaErrorCode {
    with_options(options, |o| o.mu = mu)
}

/// # Safety
/// `options` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_set_max_iter(options: *mut PasaOptions, max_iter: usize) -> PasaErrorCode {
    with_options(options, |o| o.max_iter = max_iter)
}

/// Nonzero selects the monotone line search.
///
/// # Safety
/// `options` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_options_set_monotone(options: *mut PasaOptions, monotone: i32) -> PasaErrorCode {
    with_options(options, |o| o.memory = if monotone != 0 { 1 } else { Options::default().memory })
}

/// Solves `problem` from `x0`. `options` may be null for defaults; `x0` may
/// be null to use the starting point stored in a JSON problem, or the
/// origin.
///
/// A result is produced whenever the solver ran, including unsuccessful
/// statuses, which are read with [`pasa_result_status`].
///
/// # Safety
/// Handles must be live; `x0` must hold `pasa_problem_dim(problem)` values
/// when not null; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pasa_solve(
    problem: *const PasaProblem,
    options: *const PasaOptions,
    x0: *const f64,
    out: *mut *mut PasaResult,
) -> PasaErrorCode {
    guard(|| {
        let Some(problem) = problem.as_ref() else { return fail(PasaErrorCode::NullPointer, "problem is null") };
        if out.is_null() {
            return fail(PasaErrorCode::NullPointer, "out is null");
        }
        let defaults = Options::default();
        let opts = options.as_ref().map_or(&defaults, |o| &o.inner);
        let (obj, poly, stored) = problem.parts();
        let n = poly.n();
        let start = if x0.is_null() {
            stored.map_or_else(|| vec![0.0; n], <[f64]>::to_vec)
        } else {
            std::slice::from_raw_parts(x0, n).to_vec()
        };
        match solve(obj, poly, &start, opts) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(PasaResult { inner: r }));
                PasaErrorCode::Ok
            }
            Err(e) => fail(PasaErrorCode::SolverError, e),
        }
    })
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_status(result: *const PasaResult) -> PasaStatus {
    PasaStatus::from((*result).inner.status)
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_objective(result: *const PasaResult) -> f64 {
    (*result).inner.f
}

/// Final global stationarity error.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_global_error(result: *const PasaResult) -> f64 {
    (*result).inner.global_error
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_iterations(result: *const PasaResult) -> usize {
    (*result).inner.stats.iterations
}

/// Copies the solution into `x`, which must have room for `len` values;
/// `len` must equal the problem dimension.
///
/// # Safety
/// `result` must be a live handle and `x` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_x(result: *const PasaResult, x: *mut f64, len: usize) -> PasaErrorCode {
    guard(|| {
        let Some(r) = result.as_ref() else { return fail(PasaErrorCode::NullPointer, "result is null") };
        if x.is_null() {
            return fail(PasaErrorCode::NullPointer, "x is null");
        }
        if len != r.inner.x.len() {
            return fail(PasaErrorCode::InvalidArgument, format!("expected length {}, got {len}", r.inner.x.len()));
        }
        std::slice::from_raw_parts_mut(x, len).copy_from_slice(&r.inner.x);
        PasaErrorCode::Ok
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pasa_result_free(result: *mut PasaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Euclidean projection of `x` onto the problem's polyhedron, written to
/// `out`. Both arrays have length `len`, which must equal the dimension.
///
/// # Safety
/// `problem` must be live; `x` and `out` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pasa_project(problem: *const PasaProblem, x: *const f64, out: *mut f64, len: usize) -> PasaErrorCode {
    guard(|| {
        let Some(problem) = problem.as_ref() else { return fail(PasaErrorCode::NullPointer, "problem is null") };
        let poly = problem.parts().1;
        if len != poly.n() {
            return fail(PasaErrorCode::InvalidArgument, format!("expected length {}, got {len}", poly.n()));
        }
        let (Some(xs), false) = (slice(x, len), out.is_null()) else {
            return fail(PasaErrorCode::NullPointer, "null array");
        };
        match project(xs, poly, projection_tol(Options::default().tau)) {
            Ok(y) => {
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(&y);
                PasaErrorCode::Ok
            }
            Err(pasa::projection::ProjectionError::InfeasiblePolyhedron) => {
                fail(PasaErrorCode::InfeasibleProblem, "the polyhedron is empty")
            }
            Err(e) => fail(PasaErrorCode::SolverError, e),
        }
    })
}

