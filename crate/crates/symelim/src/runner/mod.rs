//! Batch execution of task files and the YAML-style report.
//!
//! ```text
//! Metadata:
//!     Date: '2025-04-10 17:15:38'
//!     Number of Tasks: 1
//!     Runtime Sum (s): 0.7340
//! lane-change:
//!     Result: dchange - dsafe >= _0
//!     Runtime (s): 0.7340
//!     Statistics:
//!         ...
//! ```

pub mod smtlib;

pub use smtlib::{export_smtlib, export_smtlib_with, ExportOptions};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::elim::{check_sat, generate_constraint, ConstraintResult, SatResult, Statistics};
use crate::formula::Formula;
use crate::locality::ReducedProblem;
use crate::parser::{parse_tasks_file, Mode, Task};

/// Replaces the date under `--golden`.
pub const GOLDEN_DATE: &str = "GOLDEN";

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_TASK: i32 = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Constraint(Box<ConstraintResult>),
    Sat(SatResult),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskResult {
    pub name: String,
    pub outcome: Outcome,
    pub runtime: Duration,
    pub stats: Statistics,
    pub reduced: Option<ReducedProblem>,
}

impl TaskResult {
    pub fn is_error(&self) -> bool {
        matches!(self.outcome, Outcome::Error(_))
    }

    /// The constraint, for constraint-generation tasks.
    pub fn formula(&self) -> Option<&Formula> {
        match &self.outcome {
            Outcome::Constraint(r) => Some(&r.formula),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Fixed date and zero timings, for snapshot comparison.
    pub golden: bool,
    /// Worker threads; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Append each reduced problem to the diagnostics.
    pub dump_reduction: bool,
    /// Write `<task>.smt2` per reduced problem into this directory.
    pub export_smtlib: Option<PathBuf>,
}

/// Everything a `run` invocation produces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutput {
    pub report: String,
    pub diagnostics: String,
    pub exit_code: i32,
    pub results: Vec<TaskResult>,
}

pub fn run_task(task: &Task) -> TaskResult {
    let start = Instant::now();
    let (outcome, stats, reduced) = match task.mode {
        Mode::GenerateConstraints => match generate_constraint(task) {
            Ok(r) => {
                let (stats, rp) = (r.stats.clone(), r.reduced.clone());
                (Outcome::Constraint(Box::new(r)), stats, Some(rp))
            }
            Err(e) => (Outcome::Error(e.to_string()), Statistics::default(), None),
        },
        Mode::CheckSat => {
            let mut stats = Statistics::default();
            let t = Instant::now();
            let r = check_sat(&task.problem);
            stats.steps.push(crate::elim::Step { name: "check_sat", time: t.elapsed(), counters: Vec::new() });
            match r {
                Ok((s, rp)) => (Outcome::Sat(s), stats, Some(rp)),
                Err(e) => (Outcome::Error(e.to_string()), stats, None),
            }
        }
    };
    TaskResult { name: task.name.clone(), outcome, runtime: start.elapsed(), stats, reduced }
}

/// Runs every task; results keep the input order whatever `jobs` is.
pub fn run_tasks(tasks: &[Task], jobs: usize) -> Vec<TaskResult> {
    if jobs <= 1 {
        return tasks.iter().map(run_task).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| tasks.par_iter().map(run_task).collect()),
        Err(_) => tasks.iter().map(run_task).collect(),
    }
}

fn secs(d: Duration, golden: bool) -> String {
    if golden {
        "0.0000".into()
    } else {
        format!("{:.4}", d.as_secs_f64())
    }
}

fn millis(d: Duration, golden: bool) -> String {
    if golden {
        "0.0000".into()
    } else {
        format!("{:.4}", d.as_secs_f64() * 1e3)
    }
}

/// `true`/`false` are quoted so the report stays a string-valued mapping.
fn result_text(f: &Formula) -> String {
    match f {
        Formula::True => "'true'".into(),
        Formula::False => "'false'".into(),
        f => f.to_string(),
    }
}

/// The report for `results`; `date` is written verbatim.
pub fn render_report(results: &[TaskResult], date: &str, golden: bool) -> String {
    let mut s = String::new();
    let sum: Duration = results.iter().map(|r| r.runtime).sum();
    let _ = writeln!(s, "Metadata:");
    let _ = writeln!(s, "    Date: '{date}'");
    let _ = writeln!(s, "    Number of Tasks: {}", results.len());
    let _ = writeln!(s, "    Runtime Sum (s): {}", secs(sum, golden));
    for r in results {
        let _ = writeln!(s, "{}:", r.name);
        match &r.outcome {
            Outcome::Constraint(c) => {
                let _ = writeln!(s, "    Result: {}", result_text(&c.formula));
            }
            Outcome::Sat(SatResult::Unsat) => {
                let _ = writeln!(s, "    Result: unsat");
            }
            Outcome::Sat(SatResult::Sat(model)) => {
                let _ = writeln!(s, "    Result: sat");
                if let Some(m) = model {
                    let _ = writeln!(s, "    Model:");
                    for (k, v) in m {
                        let _ = writeln!(s, "        '{k}': '{v}'");
                    }
                }
            }
            Outcome::Error(e) => {
                let _ = writeln!(s, "    Result: error");
                let _ = writeln!(s, "    Error: '{}'", e.replace('\'', "''"));
            }
        }
        let _ = writeln!(s, "    Runtime (s): {}", secs(r.runtime, golden));
        if r.stats.steps.is_empty() {
            continue;
        }
        let _ = writeln!(s, "    Statistics:");
        let _ = writeln!(s, "        (subtask) internal symbol elimination:");
        let _ = writeln!(s, "            {}_SE:", r.name);
        for step in &r.stats.steps {
            let _ = writeln!(s, "                (step) {}:", step.name);
            let _ = writeln!(s, "                    time (ms): {}", millis(step.time, golden));
            for (k, n) in &step.counters {
                let _ = writeln!(s, "                    {k}: '{n}'");
            }
        }
    }
    s
}

/// File names for exported scripts: task names with path separators and
/// other awkward characters replaced.
fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Parses and runs a task file. The report is returned whole; nothing is
/// printed here.
pub fn run(path: &Path, opts: &RunOptions) -> RunOutput {
    let tasks = match parse_tasks_file(path) {
        Ok(t) => t,
        Err(e) => {
            return RunOutput {
                report: String::new(),
                diagnostics: format!("{}: {e}\n", path.display()),
                exit_code: EXIT_PARSE,
                results: Vec::new(),
            }
        }
    };
    let results = run_tasks(&tasks, opts.jobs);
    let mut diagnostics = String::new();
    for r in &results {
        if let Outcome::Error(e) = &r.outcome {
            let _ = writeln!(diagnostics, "{}: {e}", r.name);
        }
        let Some(rp) = &r.reduced else { continue };
        if opts.dump_reduction {
            let _ = write!(diagnostics, "== {}\n{}", r.name, rp.dump());
        }
        if let Some(dir) = &opts.export_smtlib {
            let file = dir.join(format!("{}.smt2", file_stem(&r.name)));
            let res = std::fs::create_dir_all(dir).and_then(|_| write_atomic(&file, &export_smtlib(rp)));
            if let Err(e) = res {
                let _ = writeln!(diagnostics, "cannot write {}: {e}", file.display());
            }
        }
    }
    let date = if opts.golden {
        GOLDEN_DATE.to_string()
    } else {
        chrono::Local::now().format("%Y-%m-%d %H:%M:%S").to_string()
    };
    let report = render_report(&results, &date, opts.golden);
    let exit_code = if results.iter().any(TaskResult::is_error) { EXIT_TASK } else { EXIT_OK };
    RunOutput { report, diagnostics, exit_code, results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;
    use crate::qe::is_valid;

    fn tasks_dir() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks")
    }

    fn golden() -> RunOptions {
        RunOptions { golden: true, ..Default::default() }
    }

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn empty_task_file() {
        let dir = tempfile::tempdir().unwrap();
        for text in ["", "tasks:\n"] {
            let out = run(&write(dir.path(), "empty.yaml", text), &golden());
            assert_eq!(out.exit_code, EXIT_OK);
            assert_eq!(
                out.report,
                "Metadata:\n    Date: 'GOLDEN'\n    Number of Tasks: 0\n    Runtime Sum (s): 0.0000\n"
            );
        }
    }

    #[test]
    fn check_sat_verdicts() {
        let out = run(&tasks_dir().join("check_sat.yaml"), &golden());
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.diagnostics);
        let results: Vec<&str> = out.report.lines().filter_map(|l| l.trim().strip_prefix("Result: ")).collect();
        assert_eq!(results, ["sat", "unsat", "unsat"]);
        assert!(out.report.contains("contradiction:\n    Result: unsat\n"));
    }

    #[test]
    fn lane_change_report() {
        let out = run(&tasks_dir().join("lane_change.yaml"), &golden());
        assert_eq!(out.exit_code, EXIT_OK, "{}", out.diagnostics);
        let line = out.report.lines().find(|l| l.trim().starts_with("Result:")).unwrap();
        let got = parse_formula(line.trim().trim_start_matches("Result:").trim()).unwrap();
        let want = parse_formula("dchange - dsafe >= _0").unwrap();
        assert!(is_valid(&Formula::iff(got, want)).unwrap(), "{line}");
        assert!(out.report.contains("num_atoms_before: '"));
    }

    #[test]
    fn golden_reports_are_stable_and_ordered() {
        let path = tasks_dir().join("water_tank_flow_s2.yaml");
        let a = run(&path, &golden());
        let b = run(&path, &RunOptions { jobs: 4, ..golden() });
        assert_eq!(a.report, b.report);
        let names: Vec<&str> = a.results.iter().map(|r| r.name.as_str()).collect();
        let from_file: Vec<String> = parse_tasks_file(&path).unwrap().into_iter().map(|t| t.name).collect();
        assert_eq!(names, from_file);
    }

    #[test]
    fn parse_failure_exit_code() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&write(dir.path(), "bad.yaml", "tasks:\n  x:\n    mode: NOPE\n"), &golden());
        assert_eq!(out.exit_code, EXIT_PARSE);
        assert!(out.report.is_empty());
        assert!(!out.diagnostics.is_empty());
    }

    #[test]
    fn task_failure_is_recorded() {
        // a parameter function applied to a non-parameter argument
        let dir = tempfile::tempdir().unwrap();
        let text = "tasks:\n  bad:\n    mode: GENERATE_CONSTRAINTS\n    options:\n      parameter: [f]\n    specification:\n      file: |\n        Extension_functions := {(f,1,1), (g,1,2)}\n        Clauses :=\n        Query := f(g(a)) > _0;\n";
        let out = run(&write(dir.path(), "t.yaml", text), &golden());
        assert_eq!(out.exit_code, EXIT_TASK, "{}", out.report);
        assert!(out.report.contains("Result: error"));
        assert!(out.diagnostics.starts_with("bad: "));
    }

    #[test]
    fn true_is_quoted() {
        assert_eq!(result_text(&Formula::True), "'true'");
    }

    #[test]
    fn exports_and_dumps() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { dump_reduction: true, export_smtlib: Some(dir.path().join("smt")), ..golden() };
        let out = run(&tasks_dir().join("check_sat.yaml"), &opts);
        assert!(out.diagnostics.contains("== contradiction"));
        let script = std::fs::read_to_string(dir.path().join("smt/flow-s1-unconstrained.smt2")).unwrap();
        assert!(script.starts_with("(set-logic QF_NRA)") && script.ends_with("(check-sat)\n"));
    }
}
