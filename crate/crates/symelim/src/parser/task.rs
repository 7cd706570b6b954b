//! Task files: a YAML subset listing constraint-generation or satisfiability
//! jobs, each carrying its problem text inline.
//!
//! ```text
//! tasks:
//!   lane-change:
//!     mode: GENERATE_CONSTRAINTS
//!     options:
//!       parameter: [dchange, dsafe]
//!       assumptions: ["0 <= dchange(?)", 0 <= dsafe]
//!     specification:
//!       file: |
//!         Extension_functions := ...
//! ```

use std::path::Path;

use super::problem::{parse_problem, ProblemSpec};
use super::syntax::{Parser, Scope};
use super::yaml::{self, Node};
use super::{ParseDiagnostic, ParseErrors, Span};
use crate::formula::Formula;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    CheckSat,
    GenerateConstraints,
}

/// Switches for constraint generation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskOptions {
    /// Simplify the result under the assumptions (`slfq_query`).
    pub simplify: bool,
    /// Keep 0-ary symbols mentioned in assumptions as parameters.
    pub keep_assumption_symbols: bool,
    /// Conjoin assumption instances before quantifier elimination.
    pub assumptions_in_elimination: bool,
}

impl Default for TaskOptions {
    fn default() -> Self {
        TaskOptions { simplify: true, keep_assumption_symbols: false, assumptions_in_elimination: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub mode: Mode,
    /// Accepted and ignored; elimination is always internal.
    pub solver: Option<String>,
    pub parameters: Vec<String>,
    pub assumptions: Vec<Formula>,
    pub options: TaskOptions,
    pub problem: ProblemSpec,
}

fn at_line(line: usize, msg: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic::error(Span { start: 0, end: 0, line, col: 1 }, msg)
}

/// Parses a task file; problem files referenced by path are not allowed.
pub fn parse_tasks(text: &str) -> Result<Vec<Task>, ParseErrors> {
    parse_tasks_in(text, None)
}

/// Reads and parses a task file. A `file:` value that is a single line is
/// taken as a path relative to the task file.
pub fn parse_tasks_file(path: &Path) -> Result<Vec<Task>, ParseErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| at_line(0, format!("cannot read {}: {e}", path.display())))?;
    parse_tasks_in(&text, path.parent())
}

fn parse_tasks_in(text: &str, base: Option<&Path>) -> Result<Vec<Task>, ParseErrors> {
    let root = yaml::parse(text)?;
    let mut diags = Vec::new();
    let mut out = Vec::new();
    let tasks = match root.get("tasks") {
        None if root == Node::Map(Vec::new()) => return Ok(out),
        None => return Err(at_line(1, "missing top-level `tasks:` key").into()),
        Some(Node::Scalar(s, _)) if s.is_empty() => return Ok(out),
        Some(Node::Map(es)) => es.clone(),
        Some(n) => return Err(at_line(n.line(), "`tasks` must be a mapping").into()),
    };
    for (name, node, line) in tasks {
        match task(&name, &node, line, base) {
            Ok(t) => out.push(t),
            Err(mut ds) => diags.append(&mut ds),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(ParseErrors(diags))
    }
}

fn scalar<'a>(n: &'a Node, key: &str) -> Option<(&'a str, usize)> {
    match n.get(key) {
        Some(Node::Scalar(s, l)) => Some((s.as_str(), *l)),
        _ => None,
    }
}

fn flag(n: &Node, key: &str, default: bool, diags: &mut Vec<ParseDiagnostic>) -> bool {
    match scalar(n, key) {
        None => default,
        Some(("true", _)) => true,
        Some(("false", _)) => false,
        Some((v, l)) => {
            diags.push(at_line(l, format!("`{key}` must be true or false, found `{v}`")));
            default
        }
    }
}

fn list(n: &Node, key: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<(String, usize)> {
    match n.get(key) {
        None => Vec::new(),
        Some(Node::List(xs, _)) => xs.clone(),
        Some(Node::Scalar(s, _)) if s.is_empty() => Vec::new(),
        Some(other) => {
            diags.push(at_line(other.line(), format!("`{key}` must be a list")));
            Vec::new()
        }
    }
}

fn task(name: &str, node: &Node, line: usize, base: Option<&Path>) -> Result<Task, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let mode = match scalar(node, "mode") {
        Some(("GENERATE_CONSTRAINTS", _)) => Some(Mode::GenerateConstraints),
        Some(("CHECK_SAT", _)) => Some(Mode::CheckSat),
        Some((m, l)) => {
            diags.push(at_line(l, format!("unknown mode `{m}`")));
            None
        }
        None => {
            diags.push(at_line(line, format!("task `{name}` has no mode")));
            None
        }
    };
    let solver = scalar(node, "solver").map(|(s, _)| s.to_string());
    let empty = Node::Map(Vec::new());
    let opts = node.get("options").unwrap_or(&empty);
    let options = TaskOptions {
        simplify: flag(opts, "slfq_query", true, &mut diags),
        keep_assumption_symbols: flag(opts, "keep_assumption_symbols", false, &mut diags),
        assumptions_in_elimination: flag(opts, "assumptions_in_elimination", true, &mut diags),
    };
    let params = list(opts, "parameter", &mut diags);
    let raw_assumptions = list(opts, "assumptions", &mut diags);

    let problem = match node.get("specification").and_then(|s| s.get("file")) {
        Some(Node::Block(text, first, col)) => {
            parse_problem(text).map_err(|e| e.0.into_iter().map(|d| d.shifted(first - 1, *col)).collect::<Vec<_>>())
        }
        Some(Node::Scalar(path, l)) if !path.is_empty() => match base {
            Some(dir) => match std::fs::read_to_string(dir.join(path)) {
                Ok(text) => parse_problem(&text).map_err(|e| e.0),
                Err(e) => Err(vec![at_line(*l, format!("cannot read problem file `{path}`: {e}"))]),
            },
            None => Err(vec![at_line(*l, "problem files by path need a task file location")]),
        },
        _ => Err(vec![at_line(line, format!("task `{name}` has no `specification.file`"))]),
    };
    let problem = match problem {
        Ok(p) => Some(p),
        Err(mut ds) => {
            diags.append(&mut ds);
            None
        }
    };

    let mut assumptions = Vec::new();
    if let Some(p) = &problem {
        let known = p.constant_names();
        let arities = p.arities();
        for (par, l) in &params {
            if !known.contains(par) && !arities.contains_key(par) {
                diags.push(at_line(*l, format!("parameter `{par}` is not declared in the problem")));
            }
        }
        for (a, l) in &raw_assumptions {
            match assumption(a, p) {
                Ok(f) => assumptions.push(f),
                Err(d) => diags.push(at_line(*l, format!("malformed assumption `{a}`: {}", d.message))),
            }
        }
    }
    match (mode, problem, diags.is_empty()) {
        (Some(mode), Some(problem), true) => Ok(Task {
            name: name.to_string(),
            mode,
            solver,
            parameters: params.into_iter().map(|(p, _)| p).collect(),
            assumptions,
            options,
            problem,
        }),
        _ => Err(diags),
    }
}

/// One assumption; each `?` stands for one universally quantified variable
/// shared across the assumption.
fn assumption(text: &str, p: &ProblemSpec) -> Result<Formula, ParseDiagnostic> {
    let names = p.constant_names();
    let var = ["x", "y", "z"]
        .iter()
        .map(|s| s.to_string())
        .chain((1..).map(|k| format!("x{k}")))
        .find(|n| !names.contains(n))
        .unwrap_or_default();
    let arities = p.arities();
    let mut parser = Parser::new(text)?;
    let sc = Scope { bound: &[], functions: Some(&arities), wildcard: Some(&var) };
    let f = parser.formula(&sc)?;
    if !parser.at_eof() {
        return Err(parser.unexpected("end of assumption"));
    }
    Ok(if text.contains('?') { Formula::forall(vec![var], f) } else { f })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LANE: &str = r#"tasks:
    lane-change:
        mode: GENERATE_CONSTRAINTS
        solver: REDLOG
        options:
            parameter: [dchange, dsafe]
            assumptions: ["0 <= dchange(?)", 0 <= dsafe]
        specification_type: HPILOT
        specification: &spec-lane-change
            file: |
               Extension_functions := {(front,1,2), (pos,1,3), (dchange,1,1)}
               Constants := {(i0,real), (dsafe,real)}
               Clauses :=
               (FORALL i, j). front(i)=j --> pos(j)-pos(i) >= dsafe;
               Query :=
               pos(front(i0)) - pos(i0) > dchange(i0);
"#;

    #[test]
    fn lane_change_task() {
        let ts = parse_tasks(LANE).unwrap();
        assert_eq!(ts.len(), 1);
        let t = &ts[0];
        assert_eq!(t.mode, Mode::GenerateConstraints);
        assert_eq!(t.parameters, vec!["dchange", "dsafe"]);
        assert_eq!(t.assumptions.len(), 2);
        assert_eq!(t.assumptions[0].to_string(), "(FORALL x). dchange(x) >= _0");
        assert_eq!(t.problem.clauses.len(), 1);
    }

    #[test]
    fn empty_file() {
        assert!(parse_tasks("").unwrap().is_empty());
        assert!(parse_tasks("tasks:\n").unwrap().is_empty());
    }

    #[test]
    fn no_assumptions() {
        let src = LANE.replace("            assumptions: [\"0 <= dchange(?)\", 0 <= dsafe]\n", "");
        assert!(parse_tasks(&src).unwrap()[0].assumptions.is_empty());
    }

    #[test]
    fn errors_carry_task_file_lines() {
        let e = parse_tasks(&LANE.replace("GENERATE_CONSTRAINTS", "OPTIMIZE")).unwrap_err();
        assert!(e.0[0].message.contains("unknown mode"));
        assert_eq!(e.0[0].span.line, 3);
        let e = parse_tasks(&LANE.replace("[dchange, dsafe]", "[dchange, speed]")).unwrap_err();
        assert!(e.0[0].message.contains("`speed`"));
        let e = parse_tasks(&LANE.replace("(FORALL i, j). front(i)=j", "(FORALL i, j). fron(i)=j")).unwrap_err();
        assert_eq!(e.0[0].span.line, 14);
        let e = parse_tasks(&LANE.replace("0 <= dsafe]", "0 <= ]")).unwrap_err();
        assert!(e.0[0].message.contains("malformed assumption"));
    }

    #[test]
    fn bundled_task_files_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tasks");
        let mut n = 0;
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.extension().is_some_and(|x| x == "yaml") {
                let ts = parse_tasks_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                n += ts.len();
            }
        }
        assert!(n >= 13, "{n}");
    }
}
