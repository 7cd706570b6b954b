//! Ground term sets and clause instantiation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::LocalityError;
use crate::formula::{Formula, Poly, Sym, Term};
use crate::parser::{Clause, Literal};

/// Ground argument tuples per extension function (`est`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundTermSet(pub BTreeMap<String, BTreeSet<Vec<Poly>>>);

impl GroundTermSet {
    pub fn get(&self, f: &str) -> impl Iterator<Item = &Vec<Poly>> {
        self.0.get(f).into_iter().flatten()
    }

    pub fn insert(&mut self, f: &str, args: Vec<Poly>) -> bool {
        self.0.entry(f.to_string()).or_default().insert(args)
    }

    pub fn len(&self) -> usize {
        self.0.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds every ground application of a symbol in `functions` found in `f`.
    pub fn collect(&mut self, f: &Formula, functions: &BTreeSet<String>) {
        for s in f.syms() {
            self.collect_sym(&s, functions);
        }
    }

    fn collect_sym(&mut self, s: &Sym, functions: &BTreeSet<String>) {
        if let Sym::App(name, args) = s {
            if functions.contains(name) && s.is_ground() {
                self.insert(name, args.clone());
            }
        }
    }

    /// Adds the ground applications nested anywhere in `p`.
    pub fn collect_poly(&mut self, p: &Poly, functions: &BTreeSet<String>) {
        let mut syms = BTreeSet::new();
        p.syms_deep(&mut syms);
        for s in syms {
            self.collect_sym(&s, functions);
        }
    }
}

impl fmt::Display for GroundTermSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, tuples) in &self.0 {
            for t in tuples {
                if !first {
                    write!(f, ", ")?;
                }
                first = false;
                write!(f, "{}", Sym::App(name.clone(), t.clone()))?;
            }
        }
        Ok(())
    }
}

/// The clause body with its variables free (as `Sym::Var`).
pub fn clause_body(c: &Clause) -> Formula {
    Formula::implies(
        Formula::and(c.guard.iter().map(Literal::to_formula)),
        Formula::or(c.head.iter().map(Literal::to_formula)),
    )
}

/// Ground extension terms of `goal` and of the ground subterms of `clauses`,
/// restricted to `functions`.
pub fn est_terms(clauses: &[Clause], goal: &[Formula], functions: &BTreeSet<String>) -> GroundTermSet {
    let mut t = GroundTermSet::default();
    for g in goal {
        t.collect(g, functions);
    }
    for c in clauses {
        t.collect(&clause_body(c), functions);
    }
    t
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstMode {
    /// Variables are bound by matching extension terms against the term set.
    Local,
    /// Variables range over every argument occurring in the term set.
    StablyLocal,
}

/// A ground instance of clause `clause` under `subst`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub clause: usize,
    pub subst: Vec<(String, Poly)>,
    pub formula: Formula,
}

fn as_var(p: &Poly) -> Option<String> {
    let mut it = p.terms();
    let (m, c) = it.next()?;
    if it.next().is_some() || *c != crate::formula::rat(1) {
        return None;
    }
    match m.factors() {
        [(Sym::Var(v), 1)] => Some(v.clone()),
        _ => None,
    }
}

/// Instantiates clause `index` against `terms`. Extension terms of
/// `functions` drive the matching; variables left over are bound through
/// guard equations `v = t`, and any still unbound are an error.
pub fn instantiate(
    index: usize,
    clause: &Clause,
    functions: &BTreeSet<String>,
    terms: &GroundTermSet,
    mode: InstMode,
) -> Result<Vec<Instance>, LocalityError> {
    if mode == InstMode::Local && !clause.flat {
        return Err(LocalityError::NonFlat { clause: index, line: clause.line });
    }
    let body = clause_body(clause);
    let mut bindings: BTreeSet<BTreeMap<String, Poly>> = BTreeSet::new();
    match mode {
        InstMode::Local => {
            let patterns: Vec<(String, Vec<Poly>)> = body
                .syms()
                .into_iter()
                .filter_map(|s| match s {
                    Sym::App(n, args) if functions.contains(&n) && !args.iter().all(Poly::is_ground) => Some((n, args)),
                    _ => None,
                })
                .collect();
            let mut b = BTreeMap::new();
            matches(&patterns, 0, terms, &mut b, &mut bindings);
        }
        InstMode::StablyLocal => {
            let mut pool: BTreeSet<Poly> = BTreeSet::new();
            for f in functions {
                for t in terms.get(f) {
                    pool.extend(t.iter().cloned());
                }
            }
            let pool: Vec<Poly> = pool.into_iter().collect();
            let mut b = BTreeMap::new();
            product(&clause.vars, 0, &pool, &mut b, &mut bindings);
        }
    }
    let mut out = Vec::new();
    for mut b in bindings {
        bind_through_guards(clause, &mut b);
        if let Some(v) = clause.vars.iter().find(|v| !b.contains_key(*v)) {
            return Err(LocalityError::Residue { clause: index, line: clause.line, var: v.clone() });
        }
        let map: BTreeMap<Sym, Poly> = b.iter().map(|(v, p)| (Sym::Var(v.clone()), p.clone())).collect();
        let subst = clause.vars.iter().map(|v| (v.clone(), b[v].clone())).collect();
        out.push(Instance { clause: index, subst, formula: body.substitute(&map) });
    }
    Ok(out)
}

fn matches(
    patterns: &[(String, Vec<Poly>)],
    i: usize,
    terms: &GroundTermSet,
    b: &mut BTreeMap<String, Poly>,
    out: &mut BTreeSet<BTreeMap<String, Poly>>,
) {
    let Some((f, args)) = patterns.get(i) else {
        out.insert(b.clone());
        return;
    };
    for tuple in terms.get(f) {
        if tuple.len() != args.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (pat, val) in args.iter().zip(tuple) {
            match as_var(pat) {
                Some(v) => match b.get(&v) {
                    Some(old) => ok &= old == val,
                    None => {
                        b.insert(v.clone(), val.clone());
                        added.push(v);
                    }
                },
                None => ok &= pat == val,
            }
            if !ok {
                break;
            }
        }
        if ok {
            matches(patterns, i + 1, terms, b, out);
        }
        for v in added {
            b.remove(&v);
        }
    }
}

fn product(
    vars: &[String],
    i: usize,
    pool: &[Poly],
    b: &mut BTreeMap<String, Poly>,
    out: &mut BTreeSet<BTreeMap<String, Poly>>,
) {
    let Some(v) = vars.get(i) else {
        out.insert(b.clone());
        return;
    };
    for p in pool {
        b.insert(v.clone(), p.clone());
        product(vars, i + 1, pool, b, out);
    }
    b.remove(v);
}

/// Binds variables defined by guard equations `v = t` whose right-hand side
/// only mentions bound variables.
fn bind_through_guards(c: &Clause, b: &mut BTreeMap<String, Poly>) {
    loop {
        let mut progress = false;
        for l in &c.guard {
            if l.rel != crate::formula::Rel::EQ {
                continue;
            }
            for (lhs, rhs) in [(&l.lhs, &l.rhs), (&l.rhs, &l.lhs)] {
                let Term::Var(v) = lhs else { continue };
                if b.contains_key(v) {
                    continue;
                }
                let p = rhs.to_poly();
                let map: BTreeMap<Sym, Poly> = b.iter().map(|(k, x)| (Sym::Var(k.clone()), x.clone())).collect();
                let q = p.substitute(&map);
                if q.is_ground() {
                    b.insert(v.clone(), q);
                    progress = true;
                }
            }
        }
        if !progress {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{check_flat_linear, parse_formula, parse_problem};

    fn fns(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn est_of_water_tank_query() {
        let g = vec![parse_formula("l(t0) <= lo").unwrap(), parse_formula("l(t1) > lo").unwrap()];
        let t = est_terms(&[], &g, &fns(&["l"]));
        assert_eq!(t.to_string(), "l(t0), l(t1)");
        assert!(est_terms(&[], &[parse_formula("x < y").unwrap()], &fns(&["l"])).is_empty());
    }

    #[test]
    fn boundedness_instances() {
        let s = parse_problem(
            "Extension_functions := {(l,1,1)}\nClauses := (FORALL t). l(t) >= _0;\nQuery := l(t0) < l(t1);",
        )
        .unwrap();
        let t = est_terms(&s.clauses, &s.query_formulas(), &fns(&["l"]));
        let is = instantiate(0, &s.clauses[0], &fns(&["l"]), &t, InstMode::Local).unwrap();
        let got: Vec<String> = is.iter().map(|i| i.formula.to_string()).collect();
        assert_eq!(got, vec!["l(t0) >= _0", "l(t1) >= _0"]);
    }

    #[test]
    fn guard_equation_binds_shifted_index() {
        let s = parse_problem(
            "Extension_functions := {(in,1,2),(out,1,1)}\nClauses := (FORALL i). _2 <= i --> in(i) = out(i-_1);\nQuery := in(i0) > _0;",
        )
        .unwrap();
        let s = check_flat_linear(&s).spec;
        let t = est_terms(&s.clauses, &s.query_formulas(), &fns(&["in"]));
        let is = instantiate(0, &s.clauses[0], &fns(&["in"]), &t, InstMode::Local).unwrap();
        assert_eq!(is.len(), 1);
        assert_eq!(is[0].subst[1].1.to_string(), "i0 - _1");
        assert!(is[0].formula.to_string().contains("out(i0 - _1)"));
    }

    #[test]
    fn unbound_variable_rejected() {
        let s = parse_problem(
            "Extension_functions := {(f,1,1)}\nClauses := (FORALL x, y). f(x) <= y;\nQuery := f(a) > _0;",
        )
        .unwrap();
        let t = est_terms(&s.clauses, &s.query_formulas(), &fns(&["f"]));
        let e = instantiate(0, &s.clauses[0], &fns(&["f"]), &t, InstMode::Local).unwrap_err();
        assert!(matches!(e, LocalityError::Residue { ref var, .. } if var == "y"));
    }

    #[test]
    fn stably_local_takes_all_arguments() {
        let s = parse_problem(
            "Extension_functions := {(f,1,1)}\nClauses := (FORALL x, y). f(x) <= f(y);\nQuery := f(a) > f(b);",
        )
        .unwrap();
        let t = est_terms(&s.clauses, &s.query_formulas(), &fns(&["f"]));
        let is = instantiate(0, &s.clauses[0], &fns(&["f"]), &t, InstMode::StablyLocal).unwrap();
        assert_eq!(is.len(), 4);
    }

    #[test]
    fn ground_clause_is_its_own_instance() {
        let s = parse_problem("Extension_functions := {(f,1,1)}\nClauses := f(a) >= _1;\nQuery := f(a) < _0;").unwrap();
        let t = est_terms(&s.clauses, &s.query_formulas(), &fns(&["f"]));
        let is = instantiate(0, &s.clauses[0], &fns(&["f"]), &t, InstMode::Local).unwrap();
        assert_eq!(is.len(), 1);
        assert!(is[0].subst.is_empty());
    }
}
