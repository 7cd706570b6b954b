//! Virtual substitution for formulas linear in the eliminated symbol.
//!
//! `EXISTS x. phi` becomes a disjunction of `phi` evaluated at symbolic test
//! points: minus infinity, roots `-b/a` of weak atoms, and `-b/a + eps` for
//! strict or disequation atoms. Parametric coefficients `a` get an `a != 0`
//! guard; the `a = 0` case is covered by the minus-infinity disjunct. The
//! substitution rules per relation are tabulated in `docs/virtual-substitution.md`.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::normalize::simplify_basic;
use super::QeError;
use crate::formula::{Atom, Formula, Poly, Rel, Sym};

/// A symbolic test point `x = -b/a`, optionally shifted by an infinitesimal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TestPoint {
    NegInfinity,
    Root { a: Poly, b: Poly },
    RootPlusEps { a: Poly, b: Poly },
}

/// One-line description used by QE traces.
impl std::fmt::Display for TestPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TestPoint::NegInfinity => write!(f, "-inf"),
            TestPoint::Root { a, b } => write!(f, "-({b})/({a})"),
            TestPoint::RootPlusEps { a, b } => write!(f, "-({b})/({a}) + eps"),
        }
    }
}

fn check_not_nested(x: &Sym, phi: &Formula) -> Result<(), QeError> {
    for a in phi.atoms() {
        for s in a.poly.syms() {
            if let Sym::App(_, args) = &s {
                let mut inner = BTreeSet::new();
                for arg in args {
                    arg.syms_deep(&mut inner);
                }
                if inner.contains(x) {
                    return Err(QeError::UnderFunction(x.to_string()));
                }
            }
        }
    }
    Ok(())
}

/// Linear decomposition of every atom mentioning `x`.
fn linear_atoms(x: &Sym, phi: &Formula) -> Result<Vec<(Poly, Poly, Rel)>, QeError> {
    let mut out = Vec::new();
    for at in phi.atoms() {
        if !at.poly.contains_sym(x) {
            continue;
        }
        let (a, b) = at.poly.as_linear_in(x)?;
        out.push((a, b, at.rel));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Scales `(a, b)` to a canonical representative of the point `-b/a`.
fn canonical_pair(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let marker = Sym::Const("\u{0}x".into());
    let joined = a.mul(&Poly::sym(marker.clone())).add(b);
    let (_, prim) = joined.primitive();
    prim.as_linear_in(&marker).expect("degree one by construction")
}

/// Test points for the left end of every satisfying interval.
pub fn test_points(x: &Sym, phi: &Formula) -> Result<Vec<TestPoint>, QeError> {
    let mut pts = BTreeSet::new();
    for (a, b, rel) in linear_atoms(x, phi)? {
        let has0 = rel.bits() & 0b010 != 0;
        let (root, eps) = match a.as_constant() {
            Some(c) => {
                // left-to-right sign sequence of a*x+b
                let (before, after) = if c.is_positive() { (0b001, 0b100) } else { (0b100, 0b001) };
                (has0 && rel.bits() & before == 0, !has0 && rel.bits() & after != 0)
            }
            None => (has0 && rel != Rel::TRUE, !has0),
        };
        let (ca, cb) = canonical_pair(&a, &b);
        if root {
            pts.insert(TestPoint::Root { a: ca.clone(), b: cb.clone() });
        }
        if eps {
            pts.insert(TestPoint::RootPlusEps { a: ca, b: cb });
        }
    }
    let mut v = vec![TestPoint::NegInfinity];
    v.extend(pts);
    Ok(v)
}

fn nonzero_bits(r: Rel) -> Rel {
    Rel::from_bits(r.bits() & 0b101)
}

/// `a*x + b rel 0` at `x = -inf`.
fn at_neg_inf(a: &Poly, b: &Poly, rel: Rel) -> Formula {
    Formula::or([
        Formula::atom(a.clone(), nonzero_bits(rel).mirror()),
        Formula::and([Formula::atom(a.clone(), Rel::EQ), Formula::atom(b.clone(), rel)]),
    ])
}

/// Sign-equivalent form of `(num / c) rel 0` for `c != 0`.
fn quotient_atom(num: &Poly, c: &Poly, rel: Rel) -> Formula {
    if rel == Rel::EQ || rel == Rel::NE || rel == Rel::TRUE || rel == Rel::FALSE {
        return Formula::atom(num.clone(), rel);
    }
    match c.as_constant() {
        Some(k) if k.is_negative() => Formula::atom(num.clone(), rel.mirror()),
        Some(_) => Formula::atom(num.clone(), rel),
        None => Formula::atom(num.mul(c), rel),
    }
}

/// `a*x + b rel 0` at `x = -d/c`.
fn at_root(a: &Poly, b: &Poly, rel: Rel, c: &Poly, d: &Poly) -> Formula {
    let num = b.mul(c).sub(&a.mul(d));
    quotient_atom(&num, c, rel)
}

/// `a*x + b rel 0` at `x = -d/c + eps`.
fn at_root_eps(a: &Poly, b: &Poly, rel: Rel, c: &Poly, d: &Poly) -> Formula {
    let num = b.mul(c).sub(&a.mul(d));
    let nz = nonzero_bits(rel);
    let num_zero = Formula::atom(num.clone(), Rel::EQ);
    let mut parts = vec![quotient_atom(&num, c, nz), Formula::and([num_zero.clone(), Formula::atom(a.clone(), nz)])];
    if rel.bits() & 0b010 != 0 {
        parts.push(Formula::and([num_zero, Formula::atom(a.clone(), Rel::EQ)]));
    }
    Formula::or(parts)
}

/// Substitutes a test point for `x` in every atom.
pub fn substitute_point(x: &Sym, phi: &Formula, pt: &TestPoint) -> Formula {
    phi.map_atoms(&mut |at: &Atom| {
        if !at.poly.contains_sym(x) {
            return Formula::Atom(at.clone());
        }
        let (a, b) = at.poly.as_linear_in(x).expect("checked linear");
        match pt {
            TestPoint::NegInfinity => at_neg_inf(&a, &b, at.rel),
            TestPoint::Root { a: c, b: d } => at_root(&a, &b, at.rel, c, d),
            TestPoint::RootPlusEps { a: c, b: d } => at_root_eps(&a, &b, at.rel, c, d),
        }
    })
}

/// Exact substitution `x := -b/a` for a rational `a`.
fn gauss(x: &Sym, phi: &Formula, a: &Poly, b: &Poly) -> Formula {
    let k = a.as_constant().expect("constant coefficient");
    let val = b.scale(&(-k.recip()));
    phi.substitute_with(&mut |s| (s == x).then(|| val.clone()))
}

fn mentions(x: &Sym, f: &Formula) -> bool {
    f.atoms().iter().any(|a| a.poly.contains_sym(x))
}

/// Returns a quantifier-free formula equivalent to `EXISTS x. phi`.
pub fn vs_eliminate(x: &Sym, phi: &Formula) -> Result<Formula, QeError> {
    if !phi.is_quantifier_free() {
        return Err(QeError::NotQuantifierFree);
    }
    check_not_nested(x, phi)?;
    let phi = simplify_basic(phi);
    eliminate_nnf(x, &phi)
}

fn eliminate_nnf(x: &Sym, phi: &Formula) -> Result<Formula, QeError> {
    if !mentions(x, phi) {
        return Ok(phi.clone());
    }
    match phi {
        Formula::Or(xs) => {
            let parts: Result<Vec<_>, _> = xs.iter().map(|g| eliminate_nnf(x, g)).collect();
            Ok(simplify_basic(&Formula::or(parts?)))
        }
        Formula::And(xs) => {
            let (with, without): (Vec<_>, Vec<_>) = xs.iter().cloned().partition(|g| mentions(x, g));
            // exact elimination through an equation with rational coefficient
            for g in &with {
                if let Formula::Atom(at) = g {
                    if at.rel == Rel::EQ {
                        let (a, b) = at.poly.as_linear_in(x)?;
                        if a.as_constant().is_some_and(|k| !k.is_zero()) {
                            let body = Formula::and(with.clone());
                            let sub = gauss(x, &body, &a, &b);
                            let mut all = without.clone();
                            all.push(sub);
                            return Ok(simplify_basic(&Formula::and(all)));
                        }
                    }
                }
            }
            let body = Formula::and(with);
            let core = eliminate_general(x, &body)?;
            let mut all = without;
            all.push(core);
            Ok(simplify_basic(&Formula::and(all)))
        }
        _ => eliminate_general(x, phi),
    }
}

fn eliminate_general(x: &Sym, phi: &Formula) -> Result<Formula, QeError> {
    let pts = choose_direction(x, phi)?;
    let (phi, pts) = match pts {
        Direction::Left(p) => (phi.clone(), p),
        Direction::Right(p, flipped) => (flipped, p),
    };
    let mut disjuncts = Vec::with_capacity(pts.len());
    for pt in &pts {
        let guard = match pt {
            TestPoint::NegInfinity => Formula::True,
            TestPoint::Root { a, .. } | TestPoint::RootPlusEps { a, .. } => Formula::atom(a.clone(), Rel::NE),
        };
        if guard == Formula::False {
            continue;
        }
        let sub = substitute_point(x, &phi, pt);
        disjuncts.push(simplify_basic(&Formula::and([guard, sub])));
        if disjuncts.last() == Some(&Formula::True) {
            return Ok(Formula::True);
        }
    }
    Ok(simplify_basic(&Formula::or(disjuncts)))
}

enum Direction {
    Left(Vec<TestPoint>),
    /// Points computed for `phi[x := -x]`, which is returned alongside.
    Right(Vec<TestPoint>, Formula),
}

/// Uses lower bounds with minus infinity, or upper bounds (via `x := -x`)
/// when that gives fewer test points.
fn choose_direction(x: &Sym, phi: &Formula) -> Result<Direction, QeError> {
    let left = test_points(x, phi)?;
    let neg = Poly::sym(x.clone()).neg();
    let flipped = phi.substitute_with(&mut |s| (s == x).then(|| neg.clone()));
    let right = test_points(x, &flipped)?;
    if right.len() < left.len() {
        Ok(Direction::Right(right, flipped))
    } else {
        Ok(Direction::Left(left))
    }
}

/// Number of test points the elimination of `x` would use; for ordering heuristics.
pub fn cost(x: &Sym, phi: &Formula) -> Result<usize, QeError> {
    check_not_nested(x, phi)?;
    let atoms = linear_atoms(x, phi)?;
    let symbolic = atoms.iter().filter(|(a, _, _)| a.as_constant().is_none()).count();
    if atoms.iter().any(|(a, _, r)| *r == Rel::EQ && a.as_constant().is_some()) {
        return Ok(0);
    }
    let left = test_points(x, phi)?.len();
    let neg = Poly::sym(x.clone()).neg();
    let flipped = phi.substitute_with(&mut |s| (s == x).then(|| neg.clone()));
    let right = test_points(x, &flipped)?.len();
    Ok(left.min(right) + 2 * symbolic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Poly {
        Poly::cnst(n)
    }
    fn x() -> Sym {
        Sym::Const("x".into())
    }

    #[test]
    fn equation_is_satisfiable() {
        let f = Formula::atom(c("x").sub(&c("c")), Rel::EQ);
        assert_eq!(vs_eliminate(&x(), &f).unwrap(), Formula::True);
    }

    #[test]
    fn empty_interval() {
        let f = Formula::and([Formula::atom(c("x"), Rel::LT), Formula::atom(c("x"), Rel::GT)]);
        assert_eq!(vs_eliminate(&x(), &f).unwrap(), Formula::False);
    }

    #[test]
    fn bounded_interval() {
        // exists x. a < x < b  <=>  a < b
        let f =
            Formula::and([Formula::atom(c("a").sub(&c("x")), Rel::LT), Formula::atom(c("x").sub(&c("b")), Rel::LT)]);
        let r = vs_eliminate(&x(), &f).unwrap();
        assert_eq!(r, Formula::atom(c("a").sub(&c("b")), Rel::LT));
    }

    #[test]
    fn parametric_coefficient() {
        // exists x. e*x > 1  <=>  e != 0
        let f = Formula::atom(c("e").mul(&c("x")).sub(&Poly::int(1)), Rel::GT);
        let r = vs_eliminate(&x(), &f).unwrap();
        assert_eq!(r, Formula::atom(c("e"), Rel::NE));
    }

    #[test]
    fn quadratic_rejected() {
        let f = Formula::atom(c("x").mul(&c("x")), Rel::GT);
        assert!(matches!(vs_eliminate(&x(), &f), Err(QeError::Degree(_))));
    }
}
