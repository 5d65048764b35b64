use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pasa::bench::{self, Config, RunRecord};
use pasa::driver::{solve, Options, SolveError, SolveReport, Status};
use pasa::io::{self, GeneratedKind, Problem};

const EXIT_FAILURE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "pasa", version, about = "Minimize a smooth function over a polyhedron")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem file.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solution vector here, one entry per line.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a per-iteration CSV trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve every problem in a directory and write run records and profiles.
    Suite {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Configurations to compare.
        #[arg(long, value_delimiter = ',', default_value = "default,monotone")]
        configs: Vec<ConfigName>,
        /// Run records CSV.
        #[arg(long, default_value = "records.csv")]
        records: PathBuf,
        /// Performance profile CSV.
        #[arg(long, default_value = "profile.csv")]
        profile: PathBuf,
    },
    /// Recompute a performance profile from a run records CSV.
    Profile {
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a QPS file to the JSON problem format.
    Convert { input: PathBuf, output: PathBuf },
    /// Write a random problem.
    Generate {
        #[arg(long, value_enum, default_value = "qp")]
        kind: Kind,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Monotone line search (memory 1).
    #[arg(long)]
    monotone: bool,
}

impl SolverArgs {
    fn options(&self) -> Options {
        let mut o = Options::default();
        if let Some(v) = self.tau {
            o.tau = v;
        }
        if let Some(v) = self.theta {
            o.theta = v;
        }
        if let Some(v) = self.mu {
            o.mu = v;
        }
        if let Some(v) = self.max_iter {
            o.max_iter = v;
        }
        if self.monotone {
            o = o.monotone();
        }
        o
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfigName {
    Default,
    Monotone,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Qp,
    Lp,
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    phase: &'static str,
    step: &'static str,
    f: f64,
    global_error: f64,
    local_error: f64,
    theta: f64,
    episode: usize,
    active: usize,
    max_violation: f64,
    step_length: f64,
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("pasa: {msg}");
    ExitCode::from(code)
}

fn create(path: &Path) -> Result<BufWriter<File>, ExitCode> {
    File::create(path).map(BufWriter::new).map_err(|e| fail(EXIT_FAILURE, format!("cannot write {}: {e}", path.display())))
}

fn print_report(problem: &Problem, opts: &Options, r: &SolveReport) {
    let s = &r.stats;
    println!("problem      {}", problem.name);
    println!("group        {}", problem.group());
    println!("status       {}", r.status);
    println!("tolerance    {:e}", opts.tau);
    println!("f            {:.16e}", r.f);
    println!("E            {:.3e}", r.global_error);
    println!("e            {:.3e}", r.local_error);
    println!("iterations   {} (phase one {}, phase two {})", s.iterations, s.phase_one_iters, s.phase_two_iters);
    println!("evaluations  {} values, {} gradients", s.value_calls, s.grad_calls);
    println!("time         {:.6} s", s.wall_time.as_secs_f64());
}

fn write_trace(path: &Path, r: &SolveReport) -> Result<(), ExitCode> {
    let rows: Vec<TraceRow> = r
        .trace
        .iter()
        .map(|t| TraceRow {
            iter: t.iter,
            phase: match t.phase {
                None => "init",
                Some(pasa::driver::Phase::One) => "one",
                Some(pasa::driver::Phase::Two) => "two",
            },
            step: match t.kind {
                pasa::driver::StepKind::Init => "init",
                pasa::driver::StepKind::GradientProjection => "gp",
                pasa::driver::StepKind::ActiveGradientProjection => "agp",
                pasa::driver::StepKind::ConjugateGradient => "cg",
            },
            f: t.f,
            global_error: t.global_error,
            local_error: t.local_error,
            theta: t.theta,
            episode: t.episode,
            active: t.active.len(),
            max_violation: t.max_violation,
            step_length: t.step,
        })
        .collect();
    bench::write_csv(create(path)?, &rows).map_err(|e| fail(EXIT_FAILURE, e))
}

fn run_solve(path: &Path, args: &SolverArgs, out: Option<&Path>, trace: Option<&Path>) -> ExitCode {
    let problem = match Problem::load(path) {
        Ok(p) => p,
        Err(e @ io::IoError::Read { .. }) => return fail(EXIT_FAILURE, e),
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", path.display())),
    };
    let mut opts = args.options();
    opts.record_trace = trace.is_some();
    let report = match solve(&problem.objective, &problem.polyhedron, &problem.x0, &opts) {
        Ok(r) => r,
        Err(e @ SolveError::InvalidOption(_)) => return fail(EXIT_PARSE, e),
        Err(e) => return fail(EXIT_FAILURE, e),
    };
    print_report(&problem, &opts, &report);
    if let Some(out) = out {
        let written = create(out).and_then(|w| io::write_vector(w, &report.x).map_err(|e| fail(EXIT_FAILURE, e)));
        if let Err(code) = written {
            return code;
        }
    }
    if let Some(trace) = trace {
        if let Err(code) = write_trace(trace, &report) {
            return code;
        }
    }
    match report.status {
        s if s.is_success() => ExitCode::SUCCESS,
        Status::InfeasibleProblem => ExitCode::from(EXIT_INFEASIBLE),
        _ => ExitCode::from(EXIT_FAILURE),
    }
}

fn write_profile(records: &[RunRecord], path: &Path) -> Result<(), ExitCode> {
    let profile = bench::performance_profile(records);
    bench::write_csv(create(path)?, &profile).map_err(|e| fail(EXIT_FAILURE, e))
}

fn run_suite(dir: &Path, args: &SolverArgs, names: &[ConfigName], records_path: &Path, profile_path: &Path) -> ExitCode {
    let base = args.options();
    if let Err(e) = base.validate() {
        return fail(EXIT_PARSE, e);
    }
    let configs: Vec<Config> = names
        .iter()
        .map(|c| match c {
            ConfigName::Default => Config::new("default", base.clone()),
            ConfigName::Monotone => Config::new("monotone", base.clone().monotone()),
        })
        .collect();
    let records = match bench::run_suite(dir, &configs) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_FAILURE, format!("{}: {e}", dir.display())),
    };
    for r in &records {
        println!("{:<24} {:<14} {:<9} {:<20} {:>10.6} s  E {:.2e}", r.problem, r.group, r.config, r.status, r.time, r.global_error);
    }
    let written = create(records_path)
        .and_then(|w| bench::write_csv(w, &records).map_err(|e| fail(EXIT_FAILURE, e)))
        .and_then(|_| write_profile(&records, profile_path));
    if let Err(code) = written {
        return code;
    }
    let solved = records.iter().filter(|r| r.solved).count();
    println!("solved {solved} of {} runs", records.len());
    if solved == records.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn run_profile(records_path: &Path, out: &Path) -> ExitCode {
    let file = match File::open(records_path) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_FAILURE, format!("{}: {e}", records_path.display())),
    };
    let records: Vec<RunRecord> = match bench::read_csv(file) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", records_path.display())),
    };
    match write_profile(&records, out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run_convert(input: &Path, output: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(input) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_FAILURE, format!("{}: {e}", input.display())),
    };
    let mut file = match io::parse_qps(&text) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", input.display())),
    };
    if file.name.is_none() {
        file.name = input.file_stem().and_then(|s| s.to_str()).map(str::to_string);
    }
    if let Err(e) = file.clone().into_problem("converted") {
        return fail(EXIT_PARSE, format!("{}: {e}", input.display()));
    }
    let written = create(output).and_then(|mut w| writeln!(w, "{}", file.to_json()).map_err(|e| fail(EXIT_FAILURE, e)));
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { problem, solver, out, trace } => run_solve(&problem, &solver, out.as_deref(), trace.as_deref()),
        Command::Suite { dir, solver, configs, records, profile } => run_suite(&dir, &solver, &configs, &records, &profile),
        Command::Profile { records, out } => run_profile(&records, &out),
        Command::Convert { input, output } => run_convert(&input, &output),
        Command::Generate { kind, n, m, seed, out } => {
            if n == 0 {
                return fail(EXIT_PARSE, "--n must be positive");
            }
            let kind = match kind {
                Kind::Qp => GeneratedKind::Qp,
                Kind::Lp => GeneratedKind::Lp,
            };
            let file = io::generate(kind, n, m, seed);
            match create(&out).and_then(|mut w| writeln!(w, "{}", file.to_json()).map_err(|e| fail(EXIT_FAILURE, e))) {
                Ok(()) => ExitCode::SUCCESS,
                Err(code) => code,
            }
        }
    }
}
