//! Context-based Boolean/polynomial simplification.
//!
//! Atoms over the same polynomial combine exactly through their sign masks.
//! Inside `AND(a, B)` the subformula `B` is simplified assuming `a`; inside
//! `OR(a, B)` assuming the negation of `a`.

use std::collections::BTreeMap;

use crate::formula::{Atom, Formula, Poly, Rel};

type Ctx = BTreeMap<Poly, Rel>;

/// Simplifies a quantifier-free formula; the result is in negation normal form.
pub fn simplify_basic(f: &Formula) -> Formula {
    let n = f.nnf();
    simp(&n, &Ctx::new())
}

/// Splits off squared linear factors: with `p = q*q*r` for a linear `q`
/// taken from the formula's own linear atoms, `p rel 0` becomes
/// `(q = 0 AND 0 rel 0) OR (q != 0 AND r rel 0)`.
pub fn factor_squares(f: &Formula) -> Formula {
    let mut cands: Vec<Poly> = Vec::new();
    for a in f.atoms() {
        if a.poly.total_degree() == 1 && !cands.contains(&a.poly) {
            cands.push(a.poly.clone());
        }
    }
    if cands.is_empty() {
        return f.clone();
    }
    let squares: Vec<(Poly, Poly)> = cands.iter().map(|q| (q.clone(), q.mul(q))).collect();
    f.map_atoms(&mut |a| split_square(&a.poly, a.rel, &squares))
}

fn split_square(p: &Poly, rel: Rel, squares: &[(Poly, Poly)]) -> Formula {
    if p.total_degree() >= 2 {
        for (q, q2) in squares {
            if let Some(r) = p.div_exact(q2) {
                return Formula::or([
                    Formula::and([Formula::atom(q.clone(), Rel::EQ), Atom::make(Poly::zero(), rel)]),
                    Formula::and([Formula::atom(q.clone(), Rel::NE), split_square(&r, rel, squares)]),
                ]);
            }
        }
    }
    Atom::make(p.clone(), rel)
}

fn refine(ctx: &Ctx, a: &Atom) -> Formula {
    match ctx.get(&a.poly) {
        None => Formula::Atom(a.clone()),
        Some(known) => {
            let m = a.rel.meet(*known);
            if m == Rel::FALSE {
                Formula::False
            } else if m == *known {
                Formula::True
            } else {
                // equivalent under the context, and never weaker
                Atom::make(a.poly.clone(), m)
            }
        }
    }
}

fn extend(ctx: &Ctx, facts: &[(Poly, Rel)]) -> Ctx {
    let mut out = ctx.clone();
    for (p, r) in facts {
        let e = out.entry(p.clone()).or_insert(Rel::TRUE);
        *e = e.meet(*r);
    }
    out
}

fn simp(f: &Formula, ctx: &Ctx) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => refine(ctx, a),
        Formula::And(xs) => simp_junction(xs, ctx, true),
        Formula::Or(xs) => simp_junction(xs, ctx, false),
        Formula::Forall(vs, b) => Formula::forall(vs.clone(), simp(b, &Ctx::new())),
        Formula::Exists(vs, b) => Formula::exists(vs.clone(), simp(b, &Ctx::new())),
        // nnf removes these
        Formula::Not(_) | Formula::Implies(..) => simp(&f.nnf(), ctx),
    }
}

/// Shared AND/OR handling; `conj` selects AND.
fn simp_junction(xs: &[Formula], ctx: &Ctx, conj: bool) -> Formula {
    let mut items: Vec<Formula> = xs.to_vec();
    for _round in 0..4 {
        // merge atoms on equal polynomials
        let mut merged: BTreeMap<Poly, Rel> = BTreeMap::new();
        let mut others = Vec::new();
        for it in &items {
            match refine_or_keep(it, ctx) {
                Formula::Atom(a) => {
                    let e = merged.entry(a.poly.clone()).or_insert(if conj { Rel::TRUE } else { Rel::FALSE });
                    *e = if conj { e.meet(a.rel) } else { e.join(a.rel) };
                }
                Formula::True if conj => {}
                Formula::False if !conj => {}
                Formula::True => return Formula::True,
                Formula::False => return Formula::False,
                g => others.push(g),
            }
        }
        let mut atoms: Vec<Formula> = Vec::new();
        let mut facts: Vec<(Poly, Rel)> = Vec::new();
        for (p, r) in merged {
            let g = Atom::make(p.clone(), r);
            match g {
                Formula::True if conj => {}
                Formula::False if !conj => {}
                Formula::True => return Formula::True,
                Formula::False => return Formula::False,
                g => {
                    let g = refine_or_keep(&g, ctx);
                    match g {
                        Formula::True if conj => continue,
                        Formula::False if !conj => continue,
                        Formula::True | Formula::False => return g,
                        _ => {}
                    }
                    facts.push((p, if conj { r } else { r.complement() }));
                    atoms.push(g);
                }
            }
        }
        let inner = extend(ctx, &facts);
        let mut changed = false;
        let mut next = atoms;
        for g in others {
            let s = simp(&g, &inner);
            if s != g {
                changed = true;
            }
            next.push(s);
        }
        let rebuilt = if conj { Formula::and(next) } else { Formula::or(next) };
        match (&rebuilt, conj) {
            (Formula::And(v), true) | (Formula::Or(v), false) => {
                if !changed {
                    return absorb(v.clone(), conj);
                }
                items = v.clone();
            }
            _ => return simp(&rebuilt, ctx),
        }
    }
    if conj {
        absorb(items, true)
    } else {
        absorb(items, false)
    }
}

fn refine_or_keep(f: &Formula, ctx: &Ctx) -> Formula {
    match f {
        Formula::Atom(a) => refine(ctx, a),
        _ => f.clone(),
    }
}

/// Absorption: in `AND(a, OR(a, b))` drop the `OR`; dually for `OR`.
fn absorb(items: Vec<Formula>, conj: bool) -> Formula {
    let mut keep = Vec::with_capacity(items.len());
    for (i, it) in items.iter().enumerate() {
        let inner = match (it, conj) {
            (Formula::Or(v), true) | (Formula::And(v), false) => Some(v),
            _ => None,
        };
        let absorbed =
            inner.is_some_and(|v| items.iter().enumerate().any(|(j, other)| j != i && subsumes(other, v, conj)));
        if !absorbed {
            keep.push(it.clone());
        }
    }
    if conj {
        Formula::and(keep)
    } else {
        Formula::or(keep)
    }
}

/// In a conjunction, `other` makes `OR(v)` redundant if `other` is one of
/// `v` (or all of `other`'s disjuncts are in `v`); dually for disjunctions.
fn subsumes(other: &Formula, v: &[Formula], conj: bool) -> bool {
    match (other, conj) {
        (Formula::Or(w), true) | (Formula::And(w), false) => w.len() < v.len() && w.iter().all(|x| v.contains(x)),
        _ => v.contains(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(p: Poly, r: Rel) -> Formula {
        Formula::atom(p, r)
    }

    #[test]
    fn sibling_atoms_merge() {
        let x = Poly::cnst("x");
        let f = Formula::And(vec![at(x.clone(), Rel::LE), at(x.clone(), Rel::GE)]);
        assert_eq!(simplify_basic(&f), at(x.clone(), Rel::EQ));
        let g = Formula::And(vec![at(x.clone(), Rel::LT), at(x.clone(), Rel::GT)]);
        assert_eq!(simplify_basic(&g), Formula::False);
        let h = Formula::Or(vec![at(x.clone(), Rel::LE), at(x.clone(), Rel::GT)]);
        assert_eq!(simplify_basic(&h), Formula::True);
    }

    #[test]
    fn context_prunes_nested() {
        let x = Poly::cnst("x");
        let y = Poly::cnst("y");
        let f = Formula::And(vec![
            at(x.clone(), Rel::LT),
            Formula::Or(vec![at(x.clone(), Rel::GE), at(y.clone(), Rel::EQ)]),
        ]);
        assert_eq!(simplify_basic(&f), Formula::and([at(x, Rel::LT), at(y, Rel::EQ)]));
    }

    #[test]
    fn absorption() {
        let a = at(Poly::cnst("a"), Rel::LT);
        let b = at(Poly::cnst("b"), Rel::LT);
        let f = Formula::And(vec![a.clone(), Formula::Or(vec![a.clone(), b])]);
        assert_eq!(simplify_basic(&f), a);
    }
}
