//! Hierarchical reduction of a chain of local theory extensions to a ground
//! problem over the base theory.
//!
//! Levels are processed from the highest down. At each level the clauses of
//! that level are instantiated with the ground terms of the current goal,
//! then every term of the level is purified into a definition constant and
//! the congruence axioms between those constants are added.

pub mod instantiate;
pub mod purify;

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use crate::formula::{Formula, Poly};
use crate::parser::{check_flat_linear, ProblemSpec};

pub use instantiate::{clause_body, est_terms, instantiate, GroundTermSet, InstMode, Instance};
pub use purify::{congruence, purify, purify_formula, Congruence, Definition, DefinitionStore};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LocalityError {
    #[error("clause {clause} (line {line}) is not flat")]
    NonFlat { clause: usize, line: usize },
    #[error("clause {clause} (line {line}): variable `{var}` does not occur below an extension function")]
    Residue { clause: usize, line: usize, var: String },
}

/// Where a ground clause of the reduced problem came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Query(usize),
    Instance { clause: usize, level: u32, subst: Vec<(String, Poly)> },
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Query(i) => write!(f, "query[{i}]"),
            Source::Instance { clause, level, subst } => {
                write!(f, "clause[{clause}]@{level}")?;
                if !subst.is_empty() {
                    let s: Vec<String> = subst.iter().map(|(v, p)| format!("{v} := {p}")).collect();
                    write!(f, " {{{}}}", s.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// A ground clause before and after purification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundClause {
    pub source: Source,
    /// The instance over the original extension terms.
    pub original: Formula,
    /// The same clause over definition constants only.
    pub purified: Formula,
}

/// What happened at one level, for the debug dump.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LevelTrace {
    pub level: u32,
    pub terms: GroundTermSet,
    pub instances: Vec<Instance>,
    pub definitions: Vec<Definition>,
}

/// `K0 ∪ G0 ∪ Con0` with the definitions and the provenance of each clause.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReducedProblem {
    pub clauses: Vec<GroundClause>,
    pub congruence: Vec<Congruence>,
    pub store: DefinitionStore,
    pub trace: Vec<LevelTrace>,
}

impl ReducedProblem {
    /// The purified clauses followed by the congruence axioms.
    pub fn formulas(&self) -> Vec<Formula> {
        self.clauses
            .iter()
            .map(|c| c.purified.clone())
            .chain(self.congruence.iter().map(|c| c.formula.clone()))
            .collect()
    }

    pub fn conjunction(&self) -> Formula {
        Formula::and(self.formulas())
    }

    /// Every 0-ary constant of the reduced problem.
    pub fn constants(&self) -> BTreeSet<String> {
        self.formulas().iter().flat_map(Formula::constants).collect()
    }

    /// Plain-text listing per level: terms, instances, definitions.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for t in &self.trace {
            let _ = writeln!(s, "level {}", t.level);
            let _ = writeln!(s, "  terms: {}", t.terms);
            for i in &t.instances {
                let src = Source::Instance { clause: i.clause, level: t.level, subst: i.subst.clone() };
                let _ = writeln!(s, "  instance {src}: {}", i.formula);
            }
            for d in &t.definitions {
                let _ = writeln!(s, "  define {d}");
            }
        }
        let _ = writeln!(s, "ground clauses");
        for c in &self.clauses {
            let _ = writeln!(s, "  {}: {}", c.source, c.purified);
        }
        let _ = writeln!(s, "congruence");
        for c in &self.congruence {
            let _ = writeln!(s, "  {}", c.formula);
        }
        s
    }
}

/// Reduces `spec` level by level (highest first) to ground base clauses.
/// Non-flat clauses are flattened first.
pub fn reduce_chain(spec: &ProblemSpec) -> Result<ReducedProblem, LocalityError> {
    let spec = check_flat_linear(spec).spec;
    let mut rp = ReducedProblem::default();
    for (i, q) in spec.query_formulas().into_iter().enumerate() {
        rp.clauses.push(GroundClause { source: Source::Query(i), original: q.clone(), purified: q });
    }
    // base clauses must already be ground
    for (i, c) in spec.clauses.iter().enumerate() {
        if spec.clause_level(c) == 0 {
            if let Some(v) = c.vars.first() {
                return Err(LocalityError::Residue { clause: i, line: c.line, var: v.clone() });
            }
            let f = clause_body(c);
            let source = Source::Instance { clause: i, level: 0, subst: Vec::new() };
            rp.clauses.push(GroundClause { source, original: f.clone(), purified: f });
        }
    }
    for level in (1..=spec.max_level()).rev() {
        let functions: BTreeSet<String> =
            spec.signature.extension.iter().filter(|e| e.level == level).map(|e| e.name.clone()).collect();
        let here: Vec<(usize, &crate::parser::Clause)> =
            spec.clauses.iter().enumerate().filter(|(_, c)| spec.clause_level(c) == level).collect();

        let mut terms = GroundTermSet::default();
        for f in rp.formulas() {
            terms.collect(&f, &functions);
        }
        for d in rp.store.iter() {
            for a in &d.args {
                terms.collect_poly(a, &functions);
            }
        }
        for (_, c) in &here {
            terms.collect(&clause_body(c), &functions);
        }

        let mode = if spec.stably_local.contains(&level) { InstMode::StablyLocal } else { InstMode::Local };
        let mut trace = LevelTrace { level, terms, ..Default::default() };
        for (i, c) in &here {
            for inst in instantiate(*i, c, &functions, &trace.terms, mode)? {
                if inst.formula != Formula::True {
                    rp.clauses.push(GroundClause {
                        source: Source::Instance { clause: *i, level, subst: inst.subst.clone() },
                        original: rp.store.back_substitute(&inst.formula),
                        purified: inst.formula.clone(),
                    });
                }
                trace.instances.push(inst);
            }
        }

        let before = rp.store.len();
        let mut fs: Vec<Formula> = rp.clauses.iter().map(|c| c.purified.clone()).collect();
        fs.extend(rp.congruence.iter().map(|c| c.formula.clone()));
        let con = purify(&mut fs, &functions, &mut rp.store, level);
        let n = rp.clauses.len();
        for (c, f) in rp.clauses.iter_mut().zip(&fs[..n]) {
            c.purified = f.clone();
        }
        for (c, f) in rp.congruence.iter_mut().zip(&fs[n..]) {
            c.formula = f.clone();
        }
        rp.congruence.extend(con);
        trace.definitions = rp.store.iter().skip(before).cloned().collect();
        rp.trace.push(trace);
    }
    Ok(rp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_problem;

    const FLOW: &str = "Extension_functions := {(l, 1, 1)}
Clauses := (FORALL t). l(t) >= _0;
Query := t0 < t1; l(t0) < lo; l(t0) >= la; l(t1) = l(t0) + ((i - o)*(t1 - t0)); l(t1) >= la; l(t1) > lo;";

    #[test]
    fn water_tank_reduction() {
        let rp = reduce_chain(&parse_problem(FLOW).unwrap()).unwrap();
        assert_eq!(rp.store.len(), 2);
        assert_eq!(rp.clauses.len(), 8);
        assert_eq!(rp.congruence.len(), 1);
        assert_eq!(rp.constants().len(), 8);
        for c in &rp.clauses {
            assert!(c.purified.functions().is_empty());
            assert_eq!(rp.store.back_substitute(&c.purified), c.original);
        }
    }

    #[test]
    fn empty_clause_set_keeps_goal() {
        let s = parse_problem("Clauses :=\nQuery := x < y; y < z;").unwrap();
        let rp = reduce_chain(&s).unwrap();
        assert_eq!(rp.formulas(), s.query_formulas());
        assert!(rp.store.is_empty());
    }

    #[test]
    fn chain_purifies_nested_arguments() {
        let s = parse_problem(
            "Extension_functions := {(front,1,1),(pos,1,2)}
Clauses := (FORALL i, j). front(i) = j --> pos(j) - pos(i) >= d;
Query := pos(front(a)) - pos(a) < d;",
        )
        .unwrap();
        let rp = reduce_chain(&s).unwrap();
        assert!(rp.formulas().iter().all(|f| f.functions().is_empty()));
        assert!(rp.store.iter().any(|d| d.to_string().ends_with(":= pos(front!1)")));
        let dump = rp.dump();
        assert!(dump.contains("level 2") && dump.contains("level 1"));
    }

    #[test]
    fn residue_is_reported() {
        let s = parse_problem("Clauses := (FORALL x). x >= _0;\nQuery := a < _0;").unwrap();
        assert!(matches!(reduce_chain(&s), Err(LocalityError::Residue { .. })));
    }
}
