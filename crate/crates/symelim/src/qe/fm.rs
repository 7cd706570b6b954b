//! Fourier-Motzkin satisfiability over the rationals.
//!
//! Independent of the virtual-substitution code; used as a numeric oracle
//! and to back-solve witnesses. Strictness is tracked per derived bound.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use super::QeError;
use crate::formula::{Atom, Formula, Poly, Rational, Rel, Sym};

/// `coeffs . x + constant (< | <= | =) 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Lin {
    coeffs: BTreeMap<Sym, Rational>,
    constant: Rational,
    kind: Kind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Lt,
    Le,
    Eq,
}

impl Lin {
    fn from_poly(p: &Poly, kind: Kind) -> Result<Lin, QeError> {
        let mut coeffs = BTreeMap::new();
        let mut constant = Rational::zero();
        for (m, c) in p.terms() {
            match m.factors() {
                [] => constant = c.clone(),
                [(s, 1)] => {
                    coeffs.insert(s.clone(), c.clone());
                }
                _ => return Err(QeError::Nonlinear(p.to_string())),
            }
        }
        Ok(Lin { coeffs, constant, kind })
    }

    fn scale(&self, k: &Rational) -> Lin {
        Lin {
            coeffs: self.coeffs.iter().map(|(s, c)| (s.clone(), c * k)).collect(),
            constant: &self.constant * k,
            kind: self.kind,
        }
    }

    fn add(&self, o: &Lin, kind: Kind) -> Lin {
        let mut coeffs = self.coeffs.clone();
        for (s, c) in &o.coeffs {
            let e = coeffs.entry(s.clone()).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                coeffs.remove(s);
            }
        }
        Lin { coeffs, constant: &self.constant + &o.constant, kind }
    }

    /// Replaces `x` by `expr` (given as coefficient map plus constant).
    fn subst(&self, x: &Sym, expr: &Lin) -> Lin {
        match self.coeffs.get(x) {
            None => self.clone(),
            Some(a) => {
                let mut base = self.clone();
                base.coeffs.remove(x);
                base.add(&expr.scale(a), self.kind)
            }
        }
    }

    fn holds_ground(&self) -> bool {
        match self.kind {
            Kind::Lt => self.constant.is_negative(),
            Kind::Le => !self.constant.is_positive(),
            Kind::Eq => self.constant.is_zero(),
        }
    }

    fn eval_rest(&self, x: &Sym, model: &BTreeMap<Sym, Rational>) -> Rational {
        let mut v = self.constant.clone();
        for (s, c) in &self.coeffs {
            if s != x {
                v += c * model.get(s).cloned().unwrap_or_else(Rational::zero);
            }
        }
        v
    }
}

enum Step {
    /// `x = expr` where expr has no `x`.
    Solved(Sym, Lin),
    /// Bounds on `x` at the time it was eliminated.
    Projected(Sym, Vec<Lin>),
}

/// Decides a conjunction of linear atoms; returns a witness when satisfiable.
pub fn fm_conjunction(atoms: &[Atom]) -> Result<Option<BTreeMap<Sym, Rational>>, QeError> {
    // split disequations into two branches
    if let Some(pos) = atoms.iter().position(|a| a.rel == Rel::NE) {
        for rel in [Rel::LT, Rel::GT] {
            let mut branch = atoms.to_vec();
            branch[pos] = Atom { poly: atoms[pos].poly.clone(), rel };
            if let Some(m) = fm_conjunction(&branch)? {
                return Ok(Some(m));
            }
        }
        return Ok(None);
    }
    let mut cons = Vec::new();
    for a in atoms {
        let p = &a.poly;
        let lin = match a.rel {
            Rel::LT => Lin::from_poly(p, Kind::Lt)?,
            Rel::LE => Lin::from_poly(p, Kind::Le)?,
            Rel::EQ => Lin::from_poly(p, Kind::Eq)?,
            Rel::GT => Lin::from_poly(&p.neg(), Kind::Lt)?,
            Rel::GE => Lin::from_poly(&p.neg(), Kind::Le)?,
            Rel::TRUE => continue,
            _ => return Ok(None),
        };
        cons.push(lin);
    }
    let mut vars: BTreeSet<Sym> = cons.iter().flat_map(|c| c.coeffs.keys().cloned()).collect();
    let all_vars = vars.clone();
    let mut steps = Vec::new();

    // equalities first
    while let Some(i) = cons.iter().position(|c| c.kind == Kind::Eq && !c.coeffs.is_empty()) {
        let eq = cons.remove(i);
        let (x, a) = eq.coeffs.iter().next().map(|(s, c)| (s.clone(), c.clone())).unwrap();
        let mut expr = eq.scale(&(-a.recip()));
        expr.coeffs.remove(&x);
        cons = cons.iter().map(|c| c.subst(&x, &expr)).collect();
        vars.remove(&x);
        steps.push(Step::Solved(x, expr));
    }
    // every remaining constraint is an inequality or ground
    while let Some(x) = pick_var(&cons, &vars) {
        vars.remove(&x);
        let (with, mut rest): (Vec<Lin>, Vec<Lin>) = cons.into_iter().partition(|c| c.coeffs.contains_key(&x));
        let lowers: Vec<&Lin> = with.iter().filter(|c| c.coeffs[&x].is_negative()).collect();
        let uppers: Vec<&Lin> = with.iter().filter(|c| c.coeffs[&x].is_positive()).collect();
        for l in &lowers {
            for u in &uppers {
                let kl = -l.coeffs[&x].recip();
                let ku = u.coeffs[&x].recip();
                let kind = if l.kind == Kind::Lt || u.kind == Kind::Lt { Kind::Lt } else { Kind::Le };
                let mut comb = l.scale(&kl).add(&u.scale(&ku), kind);
                comb.coeffs.remove(&x);
                rest.push(comb);
            }
        }
        rest.sort();
        rest.dedup();
        steps.push(Step::Projected(x, with));
        cons = rest;
        if cons.iter().any(|c| c.coeffs.is_empty() && !c.holds_ground()) {
            return Ok(None);
        }
    }
    if cons.iter().any(|c| !c.holds_ground()) {
        return Ok(None);
    }
    let mut model = back_solve(steps);
    for v in all_vars {
        model.entry(v).or_insert_with(Rational::zero);
    }
    Ok(Some(model))
}

fn pick_var(cons: &[Lin], vars: &BTreeSet<Sym>) -> Option<Sym> {
    vars.iter()
        .filter(|v| cons.iter().any(|c| c.coeffs.contains_key(*v)))
        .min_by_key(|v| {
            let lo = cons.iter().filter(|c| c.coeffs.get(*v).is_some_and(|a| a.is_negative())).count();
            let up = cons.iter().filter(|c| c.coeffs.get(*v).is_some_and(|a| a.is_positive())).count();
            lo * up
        })
        .cloned()
}

fn back_solve(steps: Vec<Step>) -> BTreeMap<Sym, Rational> {
    let mut model: BTreeMap<Sym, Rational> = BTreeMap::new();
    for step in steps.into_iter().rev() {
        match step {
            Step::Solved(x, expr) => {
                let v = expr.eval_rest(&x, &model);
                model.insert(x, v);
            }
            Step::Projected(x, bounds) => {
                // a*x + r (<|<=) 0 with r evaluated
                let mut lo: Option<(Rational, bool)> = None;
                let mut hi: Option<(Rational, bool)> = None;
                for b in &bounds {
                    let a = &b.coeffs[&x];
                    let r = b.eval_rest(&x, &model);
                    let bound = -r / a;
                    let strict = b.kind == Kind::Lt;
                    if a.is_positive() {
                        if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !s)) {
                            hi = Some((bound, strict));
                        }
                    } else if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s)) {
                        lo = Some((bound, strict));
                    }
                }
                let v = match (lo, hi) {
                    (None, None) => Rational::zero(),
                    (Some((l, s)), None) => {
                        if s {
                            l + Rational::one()
                        } else {
                            l
                        }
                    }
                    (None, Some((h, s))) => {
                        if s {
                            h - Rational::one()
                        } else {
                            h
                        }
                    }
                    (Some((l, ls)), Some((h, hs))) => {
                        if l == h && !ls && !hs {
                            l
                        } else {
                            (l + h) / Rational::from_integer(2.into())
                        }
                    }
                };
                model.insert(x, v);
            }
        }
    }
    model
}

/// Satisfiability of an arbitrary quantifier-free formula whose atoms are
/// linear once `valuation` is applied. Disjunctions are split.
pub fn numeric_fm_sat(phi: &Formula, valuation: &BTreeMap<String, Rational>) -> Result<bool, QeError> {
    Ok(fm_model(phi, valuation)?.is_some())
}

/// Like [`numeric_fm_sat`] but returns the witness for the remaining symbols.
pub fn fm_model(
    phi: &Formula,
    valuation: &BTreeMap<String, Rational>,
) -> Result<Option<BTreeMap<Sym, Rational>>, QeError> {
    if !phi.is_quantifier_free() {
        return Err(QeError::NotQuantifierFree);
    }
    let grounded = phi
        .substitute_with(&mut |s| match s {
            Sym::Const(n) => valuation.get(n).map(|v| Poly::constant(v.clone())),
            _ => None,
        })
        .nnf();
    let mut lits = Vec::new();
    search(&[grounded], &mut lits)
}

fn search(pending: &[Formula], lits: &mut Vec<Atom>) -> Result<Option<BTreeMap<Sym, Rational>>, QeError> {
    let Some((first, rest)) = pending.split_first() else {
        return fm_conjunction(lits);
    };
    match first {
        Formula::True => search(rest, lits),
        Formula::False => Ok(None),
        Formula::Atom(a) => {
            lits.push(a.clone());
            let r = search(rest, lits);
            lits.pop();
            r
        }
        Formula::And(xs) => {
            let mut next: Vec<Formula> = xs.clone();
            next.extend_from_slice(rest);
            search(&next, lits)
        }
        Formula::Or(xs) => {
            for x in xs {
                let mut next = vec![x.clone()];
                next.extend_from_slice(rest);
                if let Some(m) = search(&next, lits)? {
                    return Ok(Some(m));
                }
            }
            Ok(None)
        }
        other => search(&[other.nnf()], lits),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::rat;

    fn at(p: Poly, r: Rel) -> Atom {
        match Formula::atom(p, r) {
            Formula::Atom(a) => a,
            f => panic!("degenerate {f}"),
        }
    }

    #[test]
    fn contradictory_bounds() {
        let x = Poly::cnst("x");
        let r = fm_conjunction(&[at(x.clone(), Rel::LE), at(x.sub(&Poly::int(1)), Rel::GE)]).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn empty_is_sat() {
        assert!(fm_conjunction(&[]).unwrap().is_some());
    }

    #[test]
    fn strictness_matters() {
        let x = Poly::cnst("x");
        let y = Poly::cnst("y");
        // x < y, y <= x is unsat; x <= y, y <= x is sat
        let strict = [at(x.sub(&y), Rel::LT), at(y.sub(&x), Rel::LE)];
        assert!(fm_conjunction(&strict).unwrap().is_none());
        let weak = [at(x.sub(&y), Rel::LE), at(y.sub(&x), Rel::LE)];
        assert!(fm_conjunction(&weak).unwrap().is_some());
    }

    #[test]
    fn witness_satisfies() {
        let x = Poly::cnst("x");
        let y = Poly::cnst("y");
        let atoms = [
            at(x.sub(&Poly::int(1)), Rel::GT),
            at(y.sub(&x).sub(&Poly::int(2)), Rel::GE),
            at(y.sub(&Poly::int(5)), Rel::LT),
            at(x.add(&y).sub(&Poly::int(6)), Rel::NE),
        ];
        let m = fm_conjunction(&atoms).unwrap().unwrap();
        for a in &atoms {
            assert_eq!(a.eval(&mut |s| m.get(s).cloned()), Some(true), "{a} under {m:?}");
        }
        let _ = rat(0);
    }
}
