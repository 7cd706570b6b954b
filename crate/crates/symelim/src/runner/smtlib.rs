//! SMT-LIB 2 export of reduced problems.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_traits::{One, Signed};

use crate::formula::{Atom, Formula, Poly, Rational, Rel, Sym};
use crate::locality::ReducedProblem;
use crate::qe::is_valid;

/// Export switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExportOptions {
    /// Leave out congruence instances whose premise is refuted by the
    /// problem's unit atoms (e.g. `t0 < t1` refutes `t0 = t1`).
    pub prune_congruence: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions { prune_congruence: true }
    }
}

/// The reduced problem as a QF_NRA script; products stay products.
pub fn export_smtlib(rp: &ReducedProblem) -> String {
    export_smtlib_with(rp, ExportOptions::default())
}

pub fn export_smtlib_with(rp: &ReducedProblem, opts: ExportOptions) -> String {
    let mut asserts: Vec<Formula> = rp.clauses.iter().map(|c| c.purified.clone()).collect();
    let units = Formula::and(asserts.iter().filter(|f| matches!(f, Formula::Atom(_))).cloned());
    for c in &rp.congruence {
        if opts.prune_congruence {
            if let Formula::Implies(premise, _) = &c.formula {
                let refuted = Formula::implies(units.clone(), Formula::not((**premise).clone()));
                if is_valid(&refuted).unwrap_or(false) {
                    continue;
                }
            }
        }
        asserts.push(c.formula.clone());
    }
    asserts.retain(|f| *f != Formula::True);

    let mut consts = BTreeSet::new();
    let mut funs: BTreeMap<String, usize> = BTreeMap::new();
    for f in &asserts {
        for s in f.syms() {
            collect(&s, &mut consts, &mut funs);
        }
    }

    let mut out = String::from("(set-logic QF_NRA)\n");
    for c in &consts {
        let _ = writeln!(out, "(declare-fun {} () Real)", symbol(c));
    }
    for (f, n) in &funs {
        let _ = writeln!(out, "(declare-fun {} ({}) Real)", symbol(f), vec!["Real"; *n].join(" "));
    }
    for f in &asserts {
        let _ = writeln!(out, "(assert {})", formula(f));
    }
    out.push_str("(check-sat)\n");
    out
}

fn collect(s: &Sym, consts: &mut BTreeSet<String>, funs: &mut BTreeMap<String, usize>) {
    match s {
        Sym::Const(c) | Sym::Var(c) => {
            consts.insert(c.clone());
        }
        Sym::App(f, args) => {
            funs.insert(f.clone(), args.len());
            for a in args {
                for t in a.syms() {
                    collect(&t, consts, funs);
                }
            }
        }
    }
}

/// Simple symbols as-is, anything else between bars.
fn symbol(name: &str) -> String {
    const EXTRA: &str = "~!@$%^&*_-+=<>.?/";
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || EXTRA.contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], ""))
    }
}

fn rational(r: &Rational) -> String {
    let mag = |r: &Rational| {
        if r.denom().is_one() {
            r.numer().to_string()
        } else {
            format!("(/ {} {})", r.numer(), r.denom())
        }
    };
    if r.is_negative() {
        format!("(- {})", mag(&r.abs()))
    } else {
        mag(r)
    }
}

fn sym(s: &Sym) -> String {
    match s {
        Sym::Const(c) | Sym::Var(c) => symbol(c),
        Sym::App(f, args) => {
            let args: Vec<String> = args.iter().map(poly).collect();
            format!("({} {})", symbol(f), args.join(" "))
        }
    }
}

fn poly(p: &Poly) -> String {
    let mut terms = Vec::new();
    for (m, c) in p.terms() {
        let mut factors = Vec::new();
        if m.is_one() || !c.is_one() {
            factors.push(rational(c));
        }
        for (s, e) in m.factors() {
            for _ in 0..*e {
                factors.push(sym(s));
            }
        }
        terms.push(if factors.len() == 1 { factors.pop().unwrap() } else { format!("(* {})", factors.join(" ")) });
    }
    match terms.len() {
        0 => "0".into(),
        1 => terms.pop().unwrap(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn atom(a: &Atom) -> String {
    let p = poly(&a.poly);
    match a.rel {
        Rel::NE => format!("(not (= {p} 0))"),
        Rel::TRUE => "true".into(),
        Rel::FALSE => "false".into(),
        r => format!("({} {p} 0)", r.symbol()),
    }
}

fn list(op: &str, xs: &[Formula]) -> String {
    let parts: Vec<String> = xs.iter().map(formula).collect();
    format!("({op} {})", parts.join(" "))
}

fn formula(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Atom(a) => atom(a),
        Formula::Not(g) => format!("(not {})", formula(g)),
        Formula::And(xs) => list("and", xs),
        Formula::Or(xs) => list("or", xs),
        Formula::Implies(a, b) => format!("(=> {} {})", formula(a), formula(b)),
        Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
            let q = if matches!(f, Formula::Forall(..)) { "forall" } else { "exists" };
            let bound: Vec<String> = vs.iter().map(|v| format!("({} Real)", symbol(v))).collect();
            format!("({q} ({}) {})", bound.join(" "), formula(b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locality::reduce_chain;
    use crate::parser::parse_problem;

    fn count(s: &str, prefix: &str) -> usize {
        s.lines().filter(|l| l.starts_with(prefix)).count()
    }

    #[test]
    fn empty_problem() {
        let s = export_smtlib(&ReducedProblem::default());
        assert_eq!(s, "(set-logic QF_NRA)\n(check-sat)\n");
    }

    #[test]
    fn tank_flow_s1_script() {
        // the purified flow system for mode s1, without the level axiom
        let spec = parse_problem(
            "Extension_functions := {(l, 1, 1)}\nClauses :=\nQuery := l(t0) <= lo; t0 < t1; l(t0) >= la; \
             l(t1) - l(t0) = (i - o)*(t1 - t0); l(t1) >= la; l(t1) > lo;",
        )
        .unwrap();
        let rp = reduce_chain(&spec).unwrap();
        assert_eq!(rp.congruence.len(), 1);
        let s = export_smtlib(&rp);
        assert_eq!(count(&s, "(declare-fun"), 8, "{s}");
        assert_eq!(count(&s, "(assert"), 6, "{s}");
        assert!(s.contains("(* "), "{s}");
        let all = export_smtlib_with(&rp, ExportOptions { prune_congruence: false });
        assert_eq!(count(&all, "(assert"), 7);
        assert!(all.contains("(=> (= "), "{all}");
    }

    #[test]
    fn numbers_and_symbols() {
        assert_eq!(rational(&crate::formula::ratio(-3, 4)), "(- (/ 3 4))");
        assert_eq!(symbol("l!1"), "l!1");
        assert_eq!(symbol("1x"), "|1x|");
        let p = Poly::cnst("x").scale(&crate::formula::rat(2)).sub(&Poly::int(1));
        let s = poly(&p);
        assert!(s == "(+ (- 1) (* 2 x))" || s == "(+ (* 2 x) (- 1))", "{s}");
    }
}
