//! Suite runs and wall-time performance profiles.
//!
//! For a group of problems `P` and configurations `C`, let `t(p, c)` be the
//! solve time, or `∞` when the run failed. The profile of `c` is the step
//! function `ρ_c(φ) = |{p : t(p, c) ≤ φ · min_c' t(p, c')}| / |P|`, sampled at
//! every finite ratio that occurs in the group. Profiles are produced for
//! each of the five groups and for the union of all problems (`composite`).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::driver::{solve, Options};
use crate::io::{Group, IoError, Problem};

/// Name used for the profile over every problem.
pub const COMPOSITE: &str = "composite";

/// Status recorded when the problem file could not be loaded.
pub const PARSE_ERROR: &str = "parse_error";
/// Status recorded when the solver rejected its input.
pub const SOLVE_ERROR: &str = "solve_error";

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub name: String,
    pub options: Options,
}

impl Config {
    pub fn new(name: impl Into<String>, options: Options) -> Self {
        Self { name: name.into(), options }
    }

    /// The default options and the monotone line search.
    pub fn standard_pair() -> Vec<Config> {
        vec![Config::new("default", Options::default()), Config::new("monotone", Options::default().monotone())]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    /// Empty when the file could not be parsed.
    pub group: String,
    pub config: String,
    pub status: String,
    pub solved: bool,
    /// Seconds, from a monotonic clock.
    pub time: f64,
    pub f: f64,
    pub global_error: f64,
    pub iterations: usize,
    pub phase_one_iters: usize,
    pub phase_two_iters: usize,
    pub value_calls: usize,
    pub grad_calls: usize,
}

impl RunRecord {
    fn failed(problem: &str, group: &str, config: &str, status: &str) -> Self {
        RunRecord {
            problem: problem.to_string(),
            group: group.to_string(),
            config: config.to_string(),
            status: status.to_string(),
            solved: false,
            time: f64::INFINITY,
            f: f64::NAN,
            global_error: f64::NAN,
            iterations: 0,
            phase_one_iters: 0,
            phase_two_iters: 0,
            value_calls: 0,
            grad_calls: 0,
        }
    }

    /// The time used by the profile: `∞` for failed runs.
    pub fn profile_time(&self) -> f64 {
        if self.solved {
            self.time
        } else {
            f64::INFINITY
        }
    }
}

pub fn run_problem(problem: &Problem, config: &Config) -> RunRecord {
    let group = problem.group().as_str();
    match solve(&problem.objective, &problem.polyhedron, &problem.x0, &config.options) {
        Ok(r) => RunRecord {
            problem: problem.name.clone(),
            group: group.to_string(),
            config: config.name.clone(),
            status: r.status.as_str().to_string(),
            solved: r.status.is_success(),
            time: r.stats.wall_time.as_secs_f64(),
            f: r.f,
            global_error: r.global_error,
            iterations: r.stats.iterations,
            phase_one_iters: r.stats.phase_one_iters,
            phase_two_iters: r.stats.phase_two_iters,
            value_calls: r.stats.value_calls,
            grad_calls: r.stats.grad_calls,
        },
        Err(_) => RunRecord::failed(&problem.name, group, &config.name, SOLVE_ERROR),
    }
}

/// `*.json` files directly inside `dir`, sorted by name.
pub fn problem_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && !p.to_string_lossy().ends_with(".sol.json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every configuration on every problem in `dir`. Files that fail to
/// load are recorded as failures for every configuration.
pub fn run_suite(dir: &Path, configs: &[Config]) -> std::io::Result<Vec<RunRecord>> {
    let mut records = Vec::new();
    for path in problem_files(dir)? {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("problem").to_string();
        match Problem::load(&path) {
            Ok(problem) => records.extend(configs.iter().map(|c| run_problem(&problem, c))),
            Err(IoError::Read { source, .. }) => return Err(source),
            Err(_) => records.extend(configs.iter().map(|c| RunRecord::failed(&stem, "", &c.name, PARSE_ERROR))),
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub group: String,
    pub config: String,
    pub factor: f64,
    pub fraction: f64,
}

/// Profiles for every group present in `records` and for the composite.
pub fn performance_profile(records: &[RunRecord]) -> Vec<ProfilePoint> {
    let mut configs: Vec<&str> = Vec::new();
    for r in records {
        if !configs.contains(&r.config.as_str()) {
            configs.push(&r.config);
        }
    }
    let mut out = Vec::new();
    for g in Group::ALL {
        let members: Vec<&RunRecord> = records.iter().filter(|r| r.group == g.as_str()).collect();
        out.extend(profile_group(g.as_str(), &members, &configs));
    }
    let all: Vec<&RunRecord> = records.iter().collect();
    out.extend(profile_group(COMPOSITE, &all, &configs));
    out
}

fn profile_group(group: &str, records: &[&RunRecord], configs: &[&str]) -> Vec<ProfilePoint> {
    // problem → config → time
    let mut times: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        times.entry(r.problem.as_str()).or_default().insert(r.config.as_str(), r.profile_time());
    }
    if times.is_empty() {
        return Vec::new();
    }
    let mut ratios: BTreeMap<&str, Vec<f64>> = configs.iter().map(|c| (*c, Vec::new())).collect();
    for per_config in times.values() {
        let t = |c: &str| per_config.get(c).copied().unwrap_or(f64::INFINITY);
        let best = configs.iter().map(|c| t(c)).fold(f64::INFINITY, f64::min);
        for c in configs {
            let tc = t(c);
            let r = if !tc.is_finite() {
                f64::INFINITY
            } else if tc == best {
                1.0
            } else {
                tc / best
            };
            ratios.get_mut(c).unwrap().push(r);
        }
    }
    let mut factors: Vec<f64> = ratios.values().flatten().copied().filter(|r| r.is_finite()).collect();
    factors.sort_by(f64::total_cmp);
    factors.dedup();
    let total = times.len() as f64;
    let mut out = Vec::new();
    for c in configs {
        let rs = &ratios[c];
        for &factor in &factors {
            let count = rs.iter().filter(|&&r| r <= factor).count();
            out.push(ProfilePoint { group: group.to_string(), config: c.to_string(), factor, fraction: count as f64 / total });
        }
    }
    out
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> csv::Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
