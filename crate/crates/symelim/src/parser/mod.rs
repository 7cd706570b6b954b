//! Problem files, task files and the printed formula dialect.

pub mod flat;
pub mod lexer;
pub mod problem;
mod syntax;
pub mod task;
mod yaml;

use std::fmt;

pub use flat::{check_flat_linear, FlatReport};
pub use problem::{parse_problem, Clause, ExtFunction, Literal, ProblemSpec, Signature};
pub use syntax::parse_formula;
pub use task::{parse_tasks, parse_tasks_file, Mode, Task, TaskOptions};

/// Byte range plus the 1-based line/column of its start.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn error(span: Span, message: impl Into<String>) -> Self {
        ParseDiagnostic { severity: Severity::Error, span, message: message.into() }
    }

    /// Moves the span down by `lines` (for text embedded in a larger file).
    pub(crate) fn shifted(mut self, lines: usize, col: usize) -> Self {
        if self.span.line == 1 {
            self.span.col += col;
        }
        self.span.line += lines;
        self
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.span.line, self.span.col, self.message)
    }
}

/// All diagnostics of a rejected input; never empty.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseErrors(pub Vec<ParseDiagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl From<ParseDiagnostic> for ParseErrors {
    fn from(d: ParseDiagnostic) -> Self {
        ParseErrors(vec![d])
    }
}
