//! Purification: ground extension terms become fresh constants, recorded in
//! a [`DefinitionStore`], plus the congruence axioms between definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{Atom, Formula, Poly, Rel, Sym};

/// `constant := function(args)`, introduced while reducing `level`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub constant: String,
    pub function: String,
    /// Arguments in purified form: they mention lower-level definition
    /// constants once those levels have been processed.
    pub args: Vec<Poly>,
    pub level: u32,
}

impl Definition {
    pub fn term(&self) -> Sym {
        Sym::App(self.function.clone(), self.args.clone())
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.constant, self.term())
    }
}

/// Bijection between definition constants and ground extension terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefinitionStore {
    defs: Vec<Definition>,
    by_term: BTreeMap<Sym, usize>,
    by_const: BTreeMap<String, usize>,
    counters: BTreeMap<String, usize>,
}

impl DefinitionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    /// Definitions in creation order.
    pub fn iter(&self) -> impl Iterator<Item = &Definition> {
        self.defs.iter()
    }

    pub fn get(&self, constant: &str) -> Option<&Definition> {
        self.by_const.get(constant).map(|&i| &self.defs[i])
    }

    pub fn is_definition(&self, constant: &str) -> bool {
        self.by_const.contains_key(constant)
    }

    pub fn lookup(&self, term: &Sym) -> Option<&str> {
        self.by_term.get(term).map(|&i| self.defs[i].constant.as_str())
    }

    /// The constant naming `term`, created on first use.
    pub fn constant_for(&mut self, term: &Sym, level: u32) -> String {
        if let Some(c) = self.lookup(term) {
            return c.to_string();
        }
        let Sym::App(function, args) = term else { unreachable!("only applications are purified") };
        let k = self.counters.entry(function.clone()).or_insert(0);
        *k += 1;
        let constant = format!("{function}!{k}");
        let i = self.defs.len();
        self.defs.push(Definition {
            constant: constant.clone(),
            function: function.clone(),
            args: args.clone(),
            level,
        });
        self.by_term.insert(term.clone(), i);
        self.by_const.insert(constant.clone(), i);
        constant
    }

    fn reindex(&mut self) {
        self.by_term = self.defs.iter().enumerate().map(|(i, d)| (d.term(), i)).collect();
    }

    /// The original term behind `constant`, with every nested definition
    /// constant expanded.
    pub fn expand(&self, constant: &str) -> Option<Poly> {
        let d = self.get(constant)?;
        let args = d.args.iter().map(|a| self.back_substitute_poly(a)).collect();
        Some(Poly::app(&d.function, args))
    }

    pub fn back_substitute_poly(&self, p: &Poly) -> Poly {
        p.substitute_with(&mut |s| match s {
            Sym::Const(c) => self.expand(c),
            _ => None,
        })
    }

    /// Replaces every definition constant by its term (Step 4 of the
    /// elimination, and the purification round trip).
    pub fn back_substitute(&self, f: &Formula) -> Formula {
        f.substitute_with(&mut |s| match s {
            Sym::Const(c) => self.expand(c),
            _ => None,
        })
    }
}

/// One congruence axiom `args(c) = args(d) --> c = d` for a pair of
/// definitions of the same function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Congruence {
    pub function: String,
    pub left: String,
    pub right: String,
    pub formula: Formula,
}

/// Replaces every application of a symbol in `functions` by its definition
/// constant, innermost first.
pub fn purify_formula(f: &Formula, functions: &BTreeSet<String>, store: &mut DefinitionStore, level: u32) -> Formula {
    f.substitute_with(&mut |s| match s {
        Sym::App(name, _) if functions.contains(name) => Some(Poly::cnst(&store.constant_for(s, level))),
        _ => None,
    })
}

/// Purifies `clauses` and the arguments of earlier definitions with respect
/// to `functions`, returning the congruence axioms between the definitions
/// created for them.
pub fn purify(
    clauses: &mut [Formula],
    functions: &BTreeSet<String>,
    store: &mut DefinitionStore,
    level: u32,
) -> Vec<Congruence> {
    let before = store.len();
    for c in clauses.iter_mut() {
        *c = purify_formula(c, functions, store, level);
    }
    // arguments of higher-level definitions may mention this level's symbols
    for i in 0..before {
        let args = store.defs[i].args.clone();
        let args = args
            .iter()
            .map(|a| {
                a.substitute_with(&mut |s| match s {
                    Sym::App(name, _) if functions.contains(name) => Some(Poly::cnst(&store.constant_for(s, level))),
                    _ => None,
                })
            })
            .collect();
        store.defs[i].args = args;
    }
    store.reindex();
    let fresh: Vec<Definition> = store.defs[before..].to_vec();
    congruence(&fresh)
}

/// Con0 for a batch of definitions: one implication per unordered pair of
/// definitions of the same function, kept even when trivially true.
pub fn congruence(defs: &[Definition]) -> Vec<Congruence> {
    let mut out = Vec::new();
    for (i, a) in defs.iter().enumerate() {
        for b in &defs[i + 1..] {
            if a.function != b.function {
                continue;
            }
            let eqs = a.args.iter().zip(&b.args).map(|(x, y)| Atom::compare(x, Rel::EQ, y));
            let formula = Formula::implies(
                Formula::and(eqs),
                Atom::compare(&Poly::cnst(&a.constant), Rel::EQ, &Poly::cnst(&b.constant)),
            );
            out.push(Congruence {
                function: a.function.clone(),
                left: a.constant.clone(),
                right: b.constant.clone(),
                formula,
            });
        }
    }
    out
}
