//! A minimal free-format QPS/MPS reader.
//!
//! Supported sections: `NAME`, `OBJSENSE` (`MIN` only), `ROWS`, `COLUMNS`,
//! `RHS`, `RANGES`, `BOUNDS` (`UP`, `LO`, `FX`, `FR`, `MI`, `PL`),
//! `QUADOBJ`/`QSECTION` (lower triangle) and `QMATRIX` (full matrix), and
//! `ENDATA`. Names may not contain spaces. Integer markers and other bound
//! types are rejected.

use std::collections::HashMap;

use super::problem::{ObjectiveSpec, ProblemFile, Triplets};
use super::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    Quad { full: bool },
    ObjSense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowType {
    N,
    L,
    G,
    E,
}

struct Reader {
    name: Option<String>,
    objective_row: Option<String>,
    rows: Vec<(String, RowType)>,
    row_index: HashMap<String, usize>,
    cols: Vec<String>,
    col_index: HashMap<String, usize>,
    a: Triplets,
    c: Vec<f64>,
    constant: f64,
    rhs: Vec<f64>,
    range: Vec<Option<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    lower_set: Vec<bool>,
    h: Triplets,
}

fn err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Qps { line, message: message.into() }
}

fn number(line: usize, tok: &str) -> Result<f64, IoError> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("expected a number, found `{tok}`")))?;
    if !v.is_finite() {
        return Err(err(line, format!("`{tok}` is not finite")));
    }
    Ok(v)
}

impl Reader {
    fn new() -> Self {
        Reader {
            name: None,
            objective_row: None,
            rows: Vec::new(),
            row_index: HashMap::new(),
            cols: Vec::new(),
            col_index: HashMap::new(),
            a: Triplets::default(),
            c: Vec::new(),
            constant: 0.0,
            rhs: Vec::new(),
            range: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            lower_set: Vec::new(),
            h: Triplets::default(),
        }
    }

    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.col_index.get(name) {
            return j;
        }
        let j = self.cols.len();
        self.cols.push(name.to_string());
        self.col_index.insert(name.to_string(), j);
        self.c.push(0.0);
        self.lo.push(0.0);
        self.hi.push(f64::INFINITY);
        self.lower_set.push(false);
        j
    }

    fn known_column(&self, line: usize, name: &str) -> Result<usize, IoError> {
        self.col_index.get(name).copied().ok_or_else(|| err(line, format!("unknown column `{name}`")))
    }

    /// `Ok(None)` for the objective row and for extra free rows, which are
    /// dropped.
    fn row(&self, line: usize, name: &str) -> Result<Option<usize>, IoError> {
        if self.objective_row.as_deref() == Some(name) {
            return Ok(None);
        }
        match self.row_index.get(name) {
            Some(&i) => Ok(Some(i)),
            None if self.rows.iter().any(|(r, t)| r == name && *t == RowType::N) => Ok(None),
            None => Err(err(line, format!("unknown row `{name}`"))),
        }
    }

    /// Handles `(row, value)` pairs following a leading name token.
    fn pairs(&self, line: usize, toks: &[&str]) -> Result<Vec<(String, f64)>, IoError> {
        if toks.is_empty() || toks.len() % 2 != 0 {
            return Err(err(line, "expected name/value pairs"));
        }
        toks.chunks(2).map(|p| Ok((p[0].to_string(), number(line, p[1])?))).collect()
    }

    fn line(&mut self, section: Section, line: usize, toks: &[&str]) -> Result<(), IoError> {
        match section {
            Section::None => Err(err(line, "data before the first section")),
            Section::ObjSense => match toks {
                ["MIN"] | ["MINIMIZE"] => Ok(()),
                _ => Err(err(line, format!("unsupported objective sense `{}`", toks.join(" ")))),
            },
            Section::Rows => {
                let [kind, name] = toks else { return Err(err(line, "expected `<type> <name>`")) };
                let kind = match *kind {
                    "N" => RowType::N,
                    "L" => RowType::L,
                    "G" => RowType::G,
                    "E" => RowType::E,
                    other => return Err(err(line, format!("unknown row type `{other}`"))),
                };
                if self.rows.iter().any(|(r, _)| r == name) {
                    return Err(err(line, format!("duplicate row `{name}`")));
                }
                if kind == RowType::N {
                    if self.objective_row.is_none() {
                        self.objective_row = Some(name.to_string());
                    }
                } else {
                    self.row_index.insert(name.to_string(), self.rhs.len());
                    self.rhs.push(0.0);
                    self.range.push(None);
                }
                self.rows.push((name.to_string(), kind));
                Ok(())
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    return Err(err(line, "integer markers are not supported"));
                }
                let Some((col, rest)) = toks.split_first() else { return Err(err(line, "empty line")) };
                let j = self.column(col);
                for (r, v) in self.pairs(line, rest)? {
                    if self.objective_row.as_deref() == Some(r.as_str()) {
                        self.c[j] += v;
                    } else if let Some(i) = self.row(line, &r)? {
                        self.a.row.push(i);
                        self.a.col.push(j);
                        self.a.val.push(v);
                    }
                }
                Ok(())
            }
            Section::Rhs | Section::Ranges => {
                // The set name is optional.
                let rest = if toks.len() % 2 == 1 { &toks[1..] } else { toks };
                for (r, v) in self.pairs(line, rest)? {
                    if self.objective_row.as_deref() == Some(r.as_str()) {
                        if section == Section::Ranges {
                            return Err(err(line, "range on the objective row"));
                        }
                        self.constant = -v;
                    } else if let Some(i) = self.row(line, &r)? {
                        if section == Section::Rhs {
                            self.rhs[i] = v;
                        } else {
                            self.range[i] = Some(v);
                        }
                    }
                }
                Ok(())
            }
            Section::Bounds => {
                let (kind, col, value) = match toks {
                    [k, _, c, v] => (*k, *c, Some(*v)),
                    [k, c, v] if !matches!(*k, "FR" | "MI" | "PL") => (*k, *c, Some(*v)),
                    [k, _, c] if matches!(*k, "FR" | "MI" | "PL") => (*k, *c, None),
                    [k, c] => (*k, *c, None),
                    _ => return Err(err(line, "malformed bound")),
                };
                let j = self.known_column(line, col)?;
                let v = value.map(|v| number(line, v)).transpose()?;
                let need = |v: Option<f64>| v.ok_or_else(|| err(line, format!("bound type {kind} needs a value")));
                match kind {
                    "UP" => {
                        let v = need(v)?;
                        self.hi[j] = v;
                        // Customary MPS reading: a negative upper bound with no
                        // explicit lower bound frees the lower bound.
                        if v < 0.0 && !self.lower_set[j] {
                            self.lo[j] = f64::NEG_INFINITY;
                        }
                    }
                    "LO" => {
                        self.lo[j] = need(v)?;
                        self.lower_set[j] = true;
                    }
                    "FX" => {
                        let v = need(v)?;
                        self.lo[j] = v;
                        self.hi[j] = v;
                        self.lower_set[j] = true;
                    }
                    "FR" => {
                        self.lo[j] = f64::NEG_INFINITY;
                        self.hi[j] = f64::INFINITY;
                        self.lower_set[j] = true;
                    }
                    "MI" => {
                        self.lo[j] = f64::NEG_INFINITY;
                        self.lower_set[j] = true;
                    }
                    "PL" => self.hi[j] = f64::INFINITY,
                    other => return Err(err(line, format!("unsupported bound type `{other}`"))),
                }
                Ok(())
            }
            Section::Quad { full } => {
                let [c1, c2, v] = toks else { return Err(err(line, "expected `<col> <col> <value>`")) };
                let (i, j, v) = (self.known_column(line, c1)?, self.known_column(line, c2)?, number(line, v)?);
                self.h.row.push(i);
                self.h.col.push(j);
                self.h.val.push(v);
                if !full && i != j {
                    self.h.row.push(j);
                    self.h.col.push(i);
                    self.h.val.push(v);
                }
                Ok(())
            }
        }
    }

    fn finish(self) -> Result<ProblemFile, IoError> {
        if self.objective_row.is_none() {
            return Err(err(0, "no objective (N) row"));
        }
        if self.cols.is_empty() {
            return Err(err(0, "no columns"));
        }
        let m = self.rhs.len();
        let mut bl = vec![None; m];
        let mut bu = vec![None; m];
        for (name, kind) in &self.rows {
            let Some(&i) = self.row_index.get(name) else { continue };
            let (b, r) = (self.rhs[i], self.range[i]);
            let (l, u) = match (kind, r) {
                (RowType::L, None) => (None, Some(b)),
                (RowType::G, None) => (Some(b), None),
                (RowType::E, None) => (Some(b), Some(b)),
                (RowType::L, Some(r)) => (Some(b - r.abs()), Some(b)),
                (RowType::G, Some(r)) => (Some(b), Some(b + r.abs())),
                (RowType::E, Some(r)) if r >= 0.0 => (Some(b), Some(b + r)),
                (RowType::E, Some(r)) => (Some(b + r), Some(b)),
                (RowType::N, _) => unreachable!(),
            };
            bl[i] = l;
            bu[i] = u;
        }
        let n = self.cols.len();
        let bound = |v: &[f64]| v.iter().map(|x| x.is_finite().then_some(*x)).collect::<Vec<_>>();
        let objective = if self.h.val.is_empty() {
            ObjectiveSpec::Linear { c: self.c, constant: self.constant }
        } else {
            ObjectiveSpec::Quadratic { h: self.h, c: Some(self.c), constant: self.constant }
        };
        Ok(ProblemFile {
            name: self.name,
            n,
            m,
            a: (m > 0).then_some(self.a),
            bl: (m > 0).then_some(bl),
            bu: (m > 0).then_some(bu),
            lo: Some(bound(&self.lo)),
            hi: Some(bound(&self.hi)),
            x0: None,
            objective,
        })
    }
}

/// Converts QPS text into a problem file.
pub fn parse_qps(text: &str) -> Result<ProblemFile, IoError> {
    let mut r = Reader::new();
    let mut section = Section::None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with([' ', '\t']) {
            section = match toks[0] {
                "NAME" => {
                    r.name = toks.get(1).map(|s| s.to_string());
                    Section::None
                }
                "OBJSENSE" => match toks.get(1) {
                    None => Section::ObjSense,
                    Some(&"MIN") | Some(&"MINIMIZE") => Section::None,
                    Some(s) => return Err(err(line, format!("unsupported objective sense `{s}`"))),
                },
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "QUADOBJ" | "QSECTION" => Section::Quad { full: false },
                "QMATRIX" => Section::Quad { full: true },
                "ENDATA" => return r.finish(),
                other => return Err(err(line, format!("unsupported section `{other}`"))),
            };
            continue;
        }
        r.line(section, line, &toks)?;
    }
    Err(err(text.lines().count(), "missing ENDATA"))
}
