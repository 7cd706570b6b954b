//! Flatness and linearity of clauses, and the flattening rewrite.

use std::collections::{BTreeMap, BTreeSet};

use super::problem::{Clause, Literal, ProblemSpec};
use crate::formula::{Rel, Term};

fn has_var(t: &Term) -> bool {
    match t {
        Term::Var(_) => true,
        Term::Const(_) | Term::Num(_) => false,
        Term::App(_, args) => args.iter().any(has_var),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => has_var(a) || has_var(b),
        Term::Neg(a) => has_var(a),
    }
}

fn each_app<'a>(t: &'a Term, f: &mut dyn FnMut(&'a str, &'a [Term])) {
    match t {
        Term::App(n, args) => {
            f(n, args);
            args.iter().for_each(|a| each_app(a, f));
        }
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            each_app(a, f);
            each_app(b, f);
        }
        Term::Neg(a) => each_app(a, f),
        Term::Var(_) | Term::Const(_) | Term::Num(_) => {}
    }
}

/// Every function argument is a variable or a ground term.
pub fn is_flat(c: &Clause) -> bool {
    let mut ok = true;
    for l in c.literals() {
        for t in [&l.lhs, &l.rhs] {
            each_app(t, &mut |_, args| {
                ok &= args.iter().all(|a| matches!(a, Term::Var(_)) || !has_var(a));
            });
        }
    }
    ok
}

/// A variable occurring as an argument in two application terms only does
/// so in syntactically equal terms, and no term repeats a variable.
pub fn is_linear(c: &Clause) -> bool {
    let mut seen: BTreeMap<&str, (&str, &[Term])> = BTreeMap::new();
    let mut ok = true;
    for l in c.literals() {
        for t in [&l.lhs, &l.rhs] {
            each_app(t, &mut |name, args| {
                let mut local = BTreeSet::new();
                for a in args {
                    if let Term::Var(v) = a {
                        if !local.insert(v.as_str()) {
                            ok = false;
                        }
                        match seen.get(v.as_str()) {
                            Some(&(n, xs)) if n != name || xs != args => ok = false,
                            Some(_) => {}
                            None => {
                                seen.insert(v, (name, args));
                            }
                        }
                    }
                }
            });
        }
    }
    ok
}

/// Result of [`check_flat_linear`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatReport {
    pub spec: ProblemSpec,
    /// Indices of clauses that were flattened.
    pub rewritten: Vec<usize>,
    /// Indices of clauses (after rewriting) that are not linear.
    pub nonlinear: Vec<usize>,
}

/// Flattens every clause by naming compound arguments with fresh variables
/// and defining guard equations: `out(i - 1)` becomes `out(j)` with guard
/// `j = i - 1`. Linearity is only reported.
pub fn check_flat_linear(spec: &ProblemSpec) -> FlatReport {
    let taken: BTreeSet<String> =
        spec.constant_names().into_iter().chain(spec.signature.extension.iter().map(|e| e.name.clone())).collect();
    let mut out = spec.clone();
    let mut rewritten = Vec::new();
    let mut nonlinear = Vec::new();
    for (i, c) in out.clauses.iter_mut().enumerate() {
        if !c.flat {
            *c = flatten(c, &taken);
            rewritten.push(i);
        }
        if !c.linear {
            nonlinear.push(i);
        }
    }
    FlatReport { spec: out, rewritten, nonlinear }
}

struct Namer<'a> {
    taken: &'a BTreeSet<String>,
    vars: Vec<String>,
    defs: Vec<(String, Term)>,
}

impl Namer<'_> {
    fn name_for(&mut self, t: &Term) -> String {
        if let Some((v, _)) = self.defs.iter().find(|(_, d)| d == t) {
            return v.clone();
        }
        const PREFERRED: [&str; 8] = ["j", "k", "m", "p", "q", "r", "s", "u"];
        let free = |n: &str| !self.taken.contains(n) && !self.vars.iter().any(|v| v == n);
        let name = PREFERRED
            .iter()
            .map(|s| s.to_string())
            .chain((1..).map(|k| format!("v{k}")))
            .find(|n| free(n))
            .unwrap_or_default();
        self.vars.push(name.clone());
        self.defs.push((name.clone(), t.clone()));
        name
    }

    fn term(&mut self, t: &Term) -> Term {
        match t {
            Term::App(f, args) => {
                let args = args
                    .iter()
                    .map(|a| {
                        let a = self.term(a);
                        if matches!(a, Term::Var(_)) || !has_var(&a) {
                            a
                        } else {
                            Term::Var(self.name_for(&a))
                        }
                    })
                    .collect();
                Term::App(f.clone(), args)
            }
            Term::Add(a, b) => Term::Add(Box::new(self.term(a)), Box::new(self.term(b))),
            Term::Sub(a, b) => Term::Sub(Box::new(self.term(a)), Box::new(self.term(b))),
            Term::Mul(a, b) => Term::Mul(Box::new(self.term(a)), Box::new(self.term(b))),
            Term::Neg(a) => Term::Neg(Box::new(self.term(a))),
            other => other.clone(),
        }
    }

    fn literal(&mut self, l: &Literal) -> Literal {
        Literal { lhs: self.term(&l.lhs), rel: l.rel, rhs: self.term(&l.rhs) }
    }
}

fn flatten(c: &Clause, taken: &BTreeSet<String>) -> Clause {
    let mut n = Namer { taken, vars: c.vars.clone(), defs: Vec::new() };
    let mut guard: Vec<Literal> = c.guard.iter().map(|l| n.literal(l)).collect();
    let head: Vec<Literal> = c.head.iter().map(|l| n.literal(l)).collect();
    for (v, d) in n.defs.clone() {
        guard.push(Literal { lhs: Term::Var(v), rel: Rel::EQ, rhs: d });
    }
    let mut out = Clause::new(n.vars, guard, head);
    out.line = c.line;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_problem;

    fn spec(clauses: &str) -> ProblemSpec {
        parse_problem(&format!(
            "Extension_functions := {{(in,1,3),(out,1,2),(pos,1,2),(front,1,1)}}\nClauses :=\n{clauses}\nQuery := in(c) > _0;"
        ))
        .unwrap()
    }

    #[test]
    fn shifted_argument_named() {
        let s = spec("(FORALL i). _2 <= i, i <= n --> in(i) = out(i-_1);");
        assert!(!s.clauses[0].flat);
        let r = check_flat_linear(&s);
        assert_eq!(r.rewritten, vec![0]);
        let c = &r.spec.clauses[0];
        assert!(c.flat);
        assert_eq!(c.to_string(), "(FORALL i, j). _2 <= i, i <= n, j = i - _1 --> in(i) = out(j);");
    }

    #[test]
    fn flat_clause_unchanged() {
        let s = spec("(FORALL i). in(i) >= _0;");
        let r = check_flat_linear(&s);
        assert!(r.rewritten.is_empty());
        assert_eq!(r.spec, s);
    }

    #[test]
    fn ground_arguments_are_flat() {
        let s = spec("pos(front(i0)) > _0;");
        assert!(s.clauses[0].flat);
    }

    #[test]
    fn nested_application_named() {
        let s = spec("(FORALL i). pos(front(i)) - pos(i) >= d;");
        let r = check_flat_linear(&s);
        assert_eq!(r.spec.clauses[0].to_string(), "(FORALL i, j). j = front(i) --> pos(j) - pos(i) >= d;");
    }

    #[test]
    fn linearity_reported() {
        let s = spec("(FORALL i). in(i) >= out(i);");
        let r = check_flat_linear(&s);
        assert_eq!(r.nonlinear, vec![0]);
        assert!(spec("(FORALL i). in(i) >= _1 + in(i);").clauses[0].linear);
    }
}
