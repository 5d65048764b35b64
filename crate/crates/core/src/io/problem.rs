//! JSON problem files.
//!
//! ```json
//! {
//!   "name": "tiny",
//!   "n": 2, "m": 1,
//!   "A": {"row": [0, 0], "col": [0, 1], "val": [1.0, 1.0]},
//!   "bl": [null], "bu": [1.0],
//!   "lo": [0.0, 0.0], "hi": [null, null],
//!   "x0": [0.0, 0.0],
//!   "objective": {"quadratic": {"H": {"row": [0, 1], "col": [0, 1], "val": [1.0, 1.0]}, "c": [-1.0, 0.0]}}
//! }
//! ```
//!
//! `null` or any magnitude of at least `1e20` is an infinite bound. Missing
//! bound arrays are unbounded. The objective is one of `quadratic` (`H`
//! triplets, `c`, optional `constant`), `linear` (`c`, optional `constant`)
//! or `builtin` (`name` of a test function at dimension `n`).

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::linalg::CsrMatrix;
use crate::model::Polyhedron;
use crate::objective::{Linear, Objective, Quadratic};
use crate::testfns::TestFunction;

/// Bounds at or beyond this magnitude are infinite.
pub const INFINITE_BOUND: f64 = 1e20;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triplets {
    pub row: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Triplets {
    pub fn from_matrix(a: &CsrMatrix) -> Self {
        let mut t = Triplets::default();
        for (r, c, v) in a.triplets() {
            t.row.push(r);
            t.col.push(c);
            t.val.push(v);
        }
        t
    }

    fn to_matrix(&self, field: &'static str, nrows: usize, ncols: usize) -> Result<CsrMatrix, IoError> {
        CsrMatrix::from_triplets(nrows, ncols, &self.row, &self.col, &self.val)
            .map_err(|e| IoError::Field { field, message: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Quadratic {
        #[serde(rename = "H", default)]
        h: Triplets,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "is_zero")]
        constant: f64,
    },
    Linear {
        c: Vec<f64>,
        #[serde(default, skip_serializing_if = "is_zero")]
        constant: f64,
    },
    Builtin {
        name: String,
    },
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

/// The file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    #[serde(default)]
    pub m: usize,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Triplets>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bl: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bu: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub objective: ObjectiveSpec,
}

/// How the objective is given, which decides the benchmark group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Linear,
    Quadratic,
    Nonlinear,
}

/// The five benchmark groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Linear,
    Quadratic,
    General,
    Bound,
    Unconstrained,
}

impl Group {
    pub const ALL: [Group; 5] = [Group::Linear, Group::Quadratic, Group::General, Group::Bound, Group::Unconstrained];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Linear => "linear",
            Group::Quadratic => "quadratic",
            Group::General => "general",
            Group::Bound => "bound",
            Group::Unconstrained => "unconstrained",
        }
    }

    /// Linear and quadratic objectives go to their own groups whatever the
    /// constraints. Other objectives are split by the constraints present.
    pub fn classify(kind: ObjectiveKind, p: &Polyhedron) -> Group {
        match kind {
            ObjectiveKind::Linear => Group::Linear,
            ObjectiveKind::Quadratic => Group::Quadratic,
            ObjectiveKind::Nonlinear if p.m() > 0 => Group::General,
            ObjectiveKind::Nonlinear if p.has_finite_bounds() => Group::Bound,
            ObjectiveKind::Nonlinear => Group::Unconstrained,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Group::ALL.into_iter().find(|g| g.as_str() == s).ok_or_else(|| format!("unknown group `{s}`"))
    }
}

/// The objective of a loaded problem.
#[derive(Debug, Clone)]
pub enum ProblemObjective {
    Quadratic(Quadratic),
    Linear(Linear),
    Builtin(TestFunction),
}

impl ProblemObjective {
    pub fn kind(&self) -> ObjectiveKind {
        match self {
            ProblemObjective::Quadratic(_) => ObjectiveKind::Quadratic,
            ProblemObjective::Linear(_) => ObjectiveKind::Linear,
            ProblemObjective::Builtin(_) => ObjectiveKind::Nonlinear,
        }
    }

    fn inner(&self) -> &dyn Objective {
        match self {
            ProblemObjective::Quadratic(q) => q,
            ProblemObjective::Linear(l) => l,
            ProblemObjective::Builtin(t) => t,
        }
    }
}

impl Objective for ProblemObjective {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.inner().value(x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.inner().value_grad(x, grad)
    }
}

/// A validated problem ready to solve.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub polyhedron: Polyhedron,
    pub objective: ProblemObjective,
    pub x0: Vec<f64>,
}

impl Problem {
    pub fn group(&self) -> Group {
        Group::classify(self.objective.kind(), &self.polyhedron)
    }

    pub fn from_json_str(text: &str, name: &str) -> Result<Self, IoError> {
        let file: ProblemFile = serde_json::from_str(text).map_err(IoError::Json)?;
        file.into_problem(name)
    }

    /// Reads a problem file. The name defaults to the file stem.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::Read { path: path.to_path_buf(), source: e })?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem");
        Problem::from_json_str(&text, stem)
    }
}

fn bound_vector(field: &'static str, v: &Option<Vec<Option<f64>>>, len: usize, missing: f64) -> Result<Vec<f64>, IoError> {
    let Some(v) = v else { return Ok(vec![missing; len]) };
    if v.len() != len {
        return Err(IoError::Field { field, message: format!("expected {len} entries, found {}", v.len()) });
    }
    Ok(v.iter()
        .map(|b| match b {
            None => missing,
            Some(x) if *x >= INFINITE_BOUND => f64::INFINITY,
            Some(x) if *x <= -INFINITE_BOUND => f64::NEG_INFINITY,
            Some(x) => *x,
        })
        .collect())
}

fn finite_or_null(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|x| x.is_finite().then_some(*x)).collect()
}

fn check_len(field: &'static str, expected: usize, found: usize) -> Result<(), IoError> {
    if expected != found {
        return Err(IoError::Field { field, message: format!("expected {expected} entries, found {found}") });
    }
    Ok(())
}

impl ProblemFile {
    /// Validates the file and builds the polyhedron and objective. `fallback`
    /// names the problem when the file does not.
    pub fn into_problem(self, fallback: &str) -> Result<Problem, IoError> {
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Err(IoError::Field { field: "n", message: "must be positive".into() });
        }
        let a = match &self.a {
            Some(t) => t.to_matrix("A", m, n)?,
            None => CsrMatrix::zeros(m, n),
        };
        let bl = bound_vector("bl", &self.bl, m, f64::NEG_INFINITY)?;
        let bu = bound_vector("bu", &self.bu, m, f64::INFINITY)?;
        let lo = bound_vector("lo", &self.lo, n, f64::NEG_INFINITY)?;
        let hi = bound_vector("hi", &self.hi, n, f64::INFINITY)?;
        let polyhedron = Polyhedron::new(a, bl, bu, lo, hi)?;

        let objective = match self.objective {
            ObjectiveSpec::Quadratic { h, c, constant } => {
                let c = c.unwrap_or_else(|| vec![0.0; n]);
                check_len("objective.quadratic.c", n, c.len())?;
                let h = h.to_matrix("objective.quadratic.H", n, n)?;
                ProblemObjective::Quadratic(Quadratic::new(h, c).with_constant(constant))
            }
            ObjectiveSpec::Linear { c, constant } => {
                check_len("objective.linear.c", n, c.len())?;
                ProblemObjective::Linear(Linear::new(c).with_constant(constant))
            }
            ObjectiveSpec::Builtin { name } => {
                let f = TestFunction::by_name(&name, n).ok_or_else(|| IoError::Field {
                    field: "objective.builtin.name",
                    message: format!("no built-in function `{name}` in dimension {n}"),
                })?;
                ProblemObjective::Builtin(f)
            }
        };
        let x0 = match self.x0 {
            Some(x0) => {
                check_len("x0", n, x0.len())?;
                if x0.iter().any(|v| !v.is_finite()) {
                    return Err(IoError::Field { field: "x0", message: "entries must be finite".into() });
                }
                x0
            }
            None => match &objective {
                ProblemObjective::Builtin(f) => f.start(),
                _ => vec![0.0; n],
            },
        };
        let name = self.name.unwrap_or_else(|| fallback.to_string());
        Ok(Problem { name, polyhedron, objective, x0 })
    }

    /// The file describing `p` with objective `objective`.
    pub fn from_parts(name: Option<String>, p: &Polyhedron, objective: ObjectiveSpec, x0: Option<Vec<f64>>) -> Self {
        let rows = p.m() > 0;
        ProblemFile {
            name,
            n: p.n(),
            m: p.m(),
            a: rows.then(|| Triplets::from_matrix(p.a())),
            bl: rows.then(|| finite_or_null(p.bl())),
            bu: rows.then(|| finite_or_null(p.bu())),
            lo: p.lo().iter().any(|v| v.is_finite()).then(|| finite_or_null(p.lo())),
            hi: p.hi().iter().any(|v| v.is_finite()).then(|| finite_or_null(p.hi())),
            x0,
            objective,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files hold only finite numbers")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
        "n": 2, "m": 1,
        "A": {"row": [0, 0], "col": [0, 1], "val": [1.0, 1.0]},
        "bl": [null], "bu": [1.0],
        "lo": [0.0, -1e20], "hi": [null, 1e30],
        "objective": {"quadratic": {"H": {"row": [0, 1], "col": [0, 1], "val": [1.0, 1.0]}, "c": [-1.0, 0.0]}}
    }"#;

    #[test]
    fn parses_bounds_and_objective() {
        let p = Problem::from_json_str(TINY, "tiny").unwrap();
        assert_eq!(p.name, "tiny");
        assert_eq!(p.polyhedron.bl(), &[f64::NEG_INFINITY]);
        assert_eq!(p.polyhedron.lo(), &[0.0, f64::NEG_INFINITY]);
        assert_eq!(p.polyhedron.hi(), &[f64::INFINITY; 2]);
        assert_eq!(p.x0, vec![0.0; 2]);
        assert_eq!(p.group(), Group::Quadratic);
        assert_eq!(p.objective.value(&[1.0, 2.0]), 0.5 + 2.0 - 1.0);
    }

    #[test]
    fn missing_n_is_a_parse_error_with_position() {
        let err = Problem::from_json_str(r#"{"objective": {"linear": {"c": [1]}}}"#, "x").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing field `n`"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn wrong_lengths_name_the_field() {
        let text = r#"{"n": 2, "lo": [0], "objective": {"linear": {"c": [1, 1]}}}"#;
        let err = Problem::from_json_str(text, "x").unwrap_err();
        assert!(matches!(err, IoError::Field { field: "lo", .. }), "{err}");
        let text = r#"{"n": 3, "objective": {"builtin": {"name": "beale"}}}"#;
        assert!(matches!(Problem::from_json_str(text, "x").unwrap_err(), IoError::Field { field: "objective.builtin.name", .. }));
    }

    #[test]
    fn builtin_defaults_to_customary_start() {
        let text = r#"{"n": 2, "objective": {"builtin": {"name": "rosenbrock"}}}"#;
        let p = Problem::from_json_str(text, "r").unwrap();
        assert_eq!(p.x0, vec![-1.2, 1.0]);
        assert_eq!(p.group(), Group::Unconstrained);
    }

    #[test]
    fn groups_follow_structure() {
        let boxed = Polyhedron::boxed(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let free = Polyhedron::unconstrained(2);
        let rows = Polyhedron::from_triplets(2, 1, &[0], &[0], &[1.0], vec![0.0], vec![1.0], vec![f64::NEG_INFINITY; 2], vec![f64::INFINITY; 2]).unwrap();
        assert_eq!(Group::classify(ObjectiveKind::Linear, &free), Group::Linear);
        assert_eq!(Group::classify(ObjectiveKind::Quadratic, &boxed), Group::Quadratic);
        assert_eq!(Group::classify(ObjectiveKind::Nonlinear, &rows), Group::General);
        assert_eq!(Group::classify(ObjectiveKind::Nonlinear, &boxed), Group::Bound);
        assert_eq!(Group::classify(ObjectiveKind::Nonlinear, &free), Group::Unconstrained);
        assert_eq!("bound".parse::<Group>().unwrap(), Group::Bound);
    }

    #[test]
    fn round_trip_through_json() {
        let p = Problem::from_json_str(TINY, "tiny").unwrap();
        let ProblemObjective::Quadratic(q) = &p.objective else { panic!() };
        let spec = ObjectiveSpec::Quadratic { h: Triplets::from_matrix(q.hessian()), c: Some(q.linear_term().to_vec()), constant: 0.0 };
        let file = ProblemFile::from_parts(Some("tiny".into()), &p.polyhedron, spec, Some(p.x0.clone()));
        let back = Problem::from_json_str(&file.to_json(), "other").unwrap();
        assert_eq!(back.name, "tiny");
        assert_eq!(back.polyhedron, p.polyhedron);
    }
}
