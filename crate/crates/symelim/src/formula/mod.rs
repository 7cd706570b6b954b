//! Terms, polynomials, atoms and first-order formulas.
//!
//! Every arithmetic term is kept as a [`Poly`]; [`Term`] is the surface
//! syntax the parsers build before normalization.

pub mod atom;
pub mod poly;
pub mod term;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use atom::{Atom, Rel};
pub use poly::{fmt_rational, rat, ratio, DegreeError, Monomial, Poly, Rational, Sym};
pub use term::Term;

/// A first-order formula over polynomial atoms.
///
/// The smart constructors ([`Formula::and`], [`Formula::or`], [`Formula::not`])
/// flatten, drop neutral elements, sort children and remove duplicates, so
/// structurally equal inputs print identically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn from_bool(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn atom(p: Poly, rel: Rel) -> Formula {
        Atom::make(p, rel)
    }

    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => Formula::Atom(a.negate()),
            Formula::Not(g) => *g,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::True, _) => b,
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            _ => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and([Formula::implies(a.clone(), b.clone()), Formula::implies(b, a)])
    }

    pub fn forall(vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() || matches!(body, Formula::True | Formula::False) {
            return body;
        }
        Formula::Forall(vars, Box::new(body))
    }

    pub fn exists(vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() || matches!(body, Formula::True | Formula::False) {
            return body;
        }
        Formula::Exists(vars, Box::new(body))
    }

    /// Negation normal form: no `Not` (negations pushed into atoms) and no `Implies`.
    pub fn nnf(&self) -> Formula {
        self.nnf_signed(true)
    }

    fn nnf_signed(&self, pos: bool) -> Formula {
        match self {
            Formula::True => Formula::from_bool(pos),
            Formula::False => Formula::from_bool(!pos),
            Formula::Atom(a) => {
                if pos {
                    Formula::Atom(a.clone())
                } else {
                    Formula::Atom(a.negate())
                }
            }
            Formula::Not(g) => g.nnf_signed(!pos),
            Formula::And(xs) => {
                let it = xs.iter().map(|x| x.nnf_signed(pos));
                if pos {
                    Formula::and(it)
                } else {
                    Formula::or(it)
                }
            }
            Formula::Or(xs) => {
                let it = xs.iter().map(|x| x.nnf_signed(pos));
                if pos {
                    Formula::or(it)
                } else {
                    Formula::and(it)
                }
            }
            Formula::Implies(a, b) => {
                if pos {
                    Formula::or([a.nnf_signed(false), b.nnf_signed(true)])
                } else {
                    Formula::and([a.nnf_signed(true), b.nnf_signed(false)])
                }
            }
            Formula::Forall(vs, b) => {
                if pos {
                    Formula::forall(vs.clone(), b.nnf_signed(true))
                } else {
                    Formula::exists(vs.clone(), b.nnf_signed(false))
                }
            }
            Formula::Exists(vs, b) => {
                if pos {
                    Formula::exists(vs.clone(), b.nnf_signed(true))
                } else {
                    Formula::forall(vs.clone(), b.nnf_signed(false))
                }
            }
        }
    }

    /// Rebuilds the formula with every atom replaced by `f(atom)`.
    pub fn map_atoms(&self, f: &mut dyn FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => f(a),
            Formula::Not(g) => Formula::not(g.map_atoms(f)),
            Formula::And(xs) => Formula::and(xs.iter().map(|x| x.map_atoms(f)).collect::<Vec<_>>()),
            Formula::Or(xs) => Formula::or(xs.iter().map(|x| x.map_atoms(f)).collect::<Vec<_>>()),
            Formula::Implies(a, b) => Formula::implies(a.map_atoms(f), b.map_atoms(f)),
            Formula::Forall(vs, b) => Formula::forall(vs.clone(), b.map_atoms(f)),
            Formula::Exists(vs, b) => Formula::exists(vs.clone(), b.map_atoms(f)),
        }
    }

    /// Simultaneous substitution; variables bound inside the formula are left alone.
    pub fn substitute_with(&self, f: &mut dyn FnMut(&Sym) -> Option<Poly>) -> Formula {
        self.subst_bound(f, &BTreeSet::new())
    }

    fn subst_bound(&self, f: &mut dyn FnMut(&Sym) -> Option<Poly>, bound: &BTreeSet<String>) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => {
                if bound.is_empty() {
                    a.substitute_with(f)
                } else {
                    a.substitute_with(&mut |s: &Sym| match s {
                        Sym::Var(v) if bound.contains(v) => None,
                        _ => f(s),
                    })
                }
            }
            Formula::Not(g) => Formula::not(g.subst_bound(f, bound)),
            Formula::And(xs) => Formula::and(xs.iter().map(|x| x.subst_bound(f, bound)).collect::<Vec<_>>()),
            Formula::Or(xs) => Formula::or(xs.iter().map(|x| x.subst_bound(f, bound)).collect::<Vec<_>>()),
            Formula::Implies(a, b) => Formula::implies(a.subst_bound(f, bound), b.subst_bound(f, bound)),
            Formula::Forall(vs, b) | Formula::Exists(vs, b) => {
                let mut inner = bound.clone();
                inner.extend(vs.iter().cloned());
                let body = b.subst_bound(f, &inner);
                if matches!(self, Formula::Forall(..)) {
                    Formula::forall(vs.clone(), body)
                } else {
                    Formula::exists(vs.clone(), body)
                }
            }
        }
    }

    pub fn substitute(&self, map: &BTreeMap<Sym, Poly>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        self.substitute_with(&mut |s| map.get(s).cloned())
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.push(a),
            Formula::Not(g) => g.collect_atoms(out),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
            Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Forall(_, b) | Formula::Exists(_, b) => b.collect_atoms(out),
        }
    }

    /// Number of atom occurrences (the statistic reported per task).
    pub fn num_atoms(&self) -> usize {
        self.atoms().len()
    }

    /// All symbols, including those nested in application arguments.
    pub fn syms(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            a.poly.syms_deep(&mut out);
        }
        out
    }

    /// Names of 0-ary constants occurring anywhere.
    pub fn constants(&self) -> BTreeSet<String> {
        self.syms()
            .into_iter()
            .filter_map(|s| match s {
                Sym::Const(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    /// Names of applied function symbols occurring anywhere.
    pub fn functions(&self) -> BTreeSet<String> {
        self.syms()
            .into_iter()
            .filter_map(|s| match s {
                Sym::App(n, _) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(g) => g.is_quantifier_free(),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().all(Formula::is_quantifier_free),
            Formula::Implies(a, b) => a.is_quantifier_free() && b.is_quantifier_free(),
            Formula::Forall(..) | Formula::Exists(..) => false,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.atoms().iter().all(|a| a.poly.is_ground())
    }

    /// Truth value of a quantifier-free formula; `None` if a symbol has no value.
    pub fn eval(&self, f: &mut dyn FnMut(&Sym) -> Option<Rational>) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(f)?,
            Formula::Not(g) => !g.eval(f)?,
            Formula::And(xs) => {
                for x in xs {
                    if !x.eval(f)? {
                        return Some(false);
                    }
                }
                true
            }
            Formula::Or(xs) => {
                for x in xs {
                    if x.eval(f)? {
                        return Some(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !a.eval(f)? || b.eval(f)?,
            Formula::Forall(..) | Formula::Exists(..) => return None,
        })
    }

    /// Evaluates with a plain valuation of constant names.
    pub fn eval_consts(&self, val: &BTreeMap<String, Rational>) -> Option<bool> {
        self.eval(&mut |s| match s {
            Sym::Const(n) => val.get(n).cloned(),
            _ => None,
        })
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, head: &str, xs: &[Formula]) -> fmt::Result {
    write!(f, "{head}(")?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "NOT({g})"),
            Formula::And(xs) => write_list(f, "AND", xs),
            Formula::Or(xs) => write_list(f, "OR", xs),
            Formula::Implies(a, b) => write!(f, "IMPL({a}, {b})"),
            Formula::Forall(vs, b) => write!(f, "(FORALL {}). {b}", vs.join(", ")),
            Formula::Exists(vs, b) => write!(f, "(EXISTS {}). {b}", vs.join(", ")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::cnst("x")
    }

    #[test]
    fn constructors_flatten_and_short_circuit() {
        let a = Formula::atom(x(), Rel::LT);
        let b = Formula::atom(x().sub(&Poly::int(1)), Rel::GT);
        assert_eq!(Formula::and([a.clone(), Formula::True]), a);
        assert_eq!(Formula::and([a.clone(), Formula::False]), Formula::False);
        assert_eq!(Formula::or([a.clone(), a.clone()]), a);
        let nested = Formula::and([a.clone(), Formula::and([b.clone(), a.clone()])]);
        assert_eq!(nested.num_atoms(), 2);
    }

    #[test]
    fn forall_instance() {
        let body = Formula::atom(Poly::app("L", vec![Poly::var("i")]), Rel::GE);
        let f = Formula::forall(vec!["i".into()], body.clone());
        let mut m = BTreeMap::new();
        m.insert(Sym::Var("i".into()), Poly::cnst("c"));
        // bound occurrences are protected; the body instance is taken explicitly
        assert_eq!(f.substitute(&m), f);
        assert_eq!(body.substitute(&m).to_string(), "L(c) >= _0");
    }

    #[test]
    fn identity_substitution() {
        let f = Formula::atom(x().add(&Poly::cnst("y")), Rel::LE);
        let mut m = BTreeMap::new();
        m.insert(Sym::Const("x".into()), x());
        assert_eq!(f.substitute(&m), f);
    }

    #[test]
    fn term_replacement() {
        let lc = Poly::app("L", vec![Poly::cnst("c")]);
        let f = Atom::compare(&lc, Rel::LT, &Poly::cnst("La"));
        let mut m = BTreeMap::new();
        m.insert(Sym::App("L".into(), vec![Poly::cnst("c")]), Poly::cnst("l_c"));
        assert_eq!(f.substitute(&m).to_string(), "La - l_c > _0");
    }

    #[test]
    fn nnf_pushes_negation() {
        let a = Formula::atom(x(), Rel::LT);
        let b = Formula::atom(Poly::cnst("y"), Rel::EQ);
        let f = Formula::not(Formula::implies(a.clone(), b.clone()));
        let n = f.nnf();
        assert_eq!(n, Formula::and([a, Formula::atom(Poly::cnst("y"), Rel::NE)]));
    }

    #[test]
    fn printing() {
        let a = Formula::atom(Poly::cnst("la").sub(&Poly::cnst("lo")), Rel::GE);
        let b = Formula::atom(Poly::cnst("i").sub(&Poly::cnst("o")), Rel::LE);
        assert_eq!(Formula::or([a, b]).to_string(), "OR(i - o <= _0, la - lo >= _0)");
    }
}
