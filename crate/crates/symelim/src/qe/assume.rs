//! Simplification of a quantifier-free formula under background assumptions.
//!
//! Each atom is checked for entailment (or refutation) by the assumptions,
//! and atoms divisible by a polynomial of known sign are reduced by it.

use std::collections::{BTreeMap, BTreeSet};

use super::normalize::factor_squares;
use super::{is_valid, simplify_basic, QeError};
use crate::formula::{Atom, Formula, Poly, Rel, Sym};

/// Counters reported by [`simplify`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimplifyStats {
    pub decided: usize,
    pub cancelled: usize,
}

/// Instances of a universally quantified assumption, matched against the
/// application terms in `terms`. Non-universal assumptions are returned as is.
///
/// Only patterns whose arguments are bare bound variables or ground terms
/// are matched; anything else yields no instances.
pub fn instantiate_universal(assumption: &Formula, terms: &BTreeSet<Sym>) -> Vec<Formula> {
    let (vars, body) = match assumption {
        Formula::Forall(vs, b) => (vs.clone(), (**b).clone()),
        f if f.is_quantifier_free() => return vec![f.clone()],
        _ => return Vec::new(),
    };
    let bound: BTreeSet<Sym> = vars.iter().map(|v| Sym::Var(v.clone())).collect();
    let patterns: Vec<Sym> = body.syms().into_iter().filter(|s| matches!(s, Sym::App(..)) && !s.is_ground()).collect();
    let mut out = BTreeSet::new();
    let mut binding = BTreeMap::new();
    enumerate(&patterns, 0, &bound, terms, &mut binding, &body, &mut out);
    out.into_iter().collect()
}

fn enumerate(
    patterns: &[Sym],
    i: usize,
    bound: &BTreeSet<Sym>,
    terms: &BTreeSet<Sym>,
    binding: &mut BTreeMap<Sym, Poly>,
    body: &Formula,
    out: &mut BTreeSet<Formula>,
) {
    if i == patterns.len() {
        if bound.iter().all(|v| binding.contains_key(v)) {
            let inst = body.substitute(binding);
            if inst.is_quantifier_free() {
                out.insert(inst);
            }
        }
        return;
    }
    let Sym::App(name, pargs) = &patterns[i] else { return };
    let mut any = false;
    for t in terms {
        let Sym::App(tn, targs) = t else { continue };
        if tn != name || targs.len() != pargs.len() {
            continue;
        }
        let mut local = binding.clone();
        if match_args(pargs, targs, bound, &mut local) {
            any = true;
            enumerate(patterns, i + 1, bound, terms, &mut local, body, out);
        }
    }
    if !any {
        // pattern unmatched; other patterns may still bind every variable
        enumerate(patterns, i + 1, bound, terms, binding, body, out);
    }
}

fn match_args(pargs: &[Poly], targs: &[Poly], bound: &BTreeSet<Sym>, b: &mut BTreeMap<Sym, Poly>) -> bool {
    for (p, t) in pargs.iter().zip(targs) {
        let syms = p.syms();
        if let Some(v) =
            syms.iter().next().filter(|v| syms.len() == 1 && bound.contains(*v) && *p == Poly::sym((*v).clone()))
        {
            match b.get(v) {
                Some(prev) if prev != t => return false,
                Some(_) => {}
                None => {
                    b.insert(v.clone(), t.clone());
                }
            }
        } else if syms.iter().any(|s| bound.contains(s)) || p != t {
            return false;
        }
    }
    true
}

fn app_terms(f: &Formula) -> BTreeSet<Sym> {
    let mut out = BTreeSet::new();
    for a in f.atoms() {
        a.poly.syms_deep(&mut out);
    }
    out.retain(|s| matches!(s, Sym::App(..)));
    out
}

/// Simplifies `phi` under the conjunction of `assumptions`.
pub fn simplify(phi: &Formula, assumptions: &[Formula]) -> Result<(Formula, SimplifyStats), QeError> {
    let terms = app_terms(phi);
    let ctx = Formula::and(assumptions.iter().flat_map(|a| instantiate_universal(a, &terms)));
    let mut stats = SimplifyStats::default();
    let base = simplify_basic(&factor_squares(phi));
    if ctx == Formula::True {
        let out = simplify_basic(&prune_siblings(&base, &ctx, &mut stats));
        return Ok((out, stats));
    }
    // candidate divisors: assumption polynomials with a decided sign
    let mut divisors: Vec<(Poly, bool)> = Vec::new();
    for a in ctx.atoms() {
        let p = &a.poly;
        if p.total_degree() == 0 || divisors.iter().any(|(q, _)| q == p) {
            continue;
        }
        if entails(&ctx, Formula::atom(p.clone(), Rel::GT)) {
            divisors.push((p.clone(), true));
        } else if entails(&ctx, Formula::atom(p.clone(), Rel::LT)) {
            divisors.push((p.clone(), false));
        }
    }
    let mut memo: BTreeMap<Atom, Formula> = BTreeMap::new();
    let mut err = None;
    let out = base.map_atoms(&mut |a| {
        if let Some(r) = memo.get(a) {
            return r.clone();
        }
        let r = match reduce_atom(a, &ctx, &divisors, &mut stats) {
            Ok(r) => r,
            Err(e) => {
                err = Some(e);
                Formula::Atom(a.clone())
            }
        };
        memo.insert(a.clone(), r.clone());
        r
    });
    if let Some(e) = err {
        return Err(e);
    }
    let out = simplify_basic(&out);
    let out = simplify_basic(&prune_siblings(&out, &ctx, &mut stats));
    Ok((out, stats))
}

/// `ctx ⊨ f`. When the exact check leaves the linear fragment, falls back to
/// [`linearized_entails`]; anything still undecided counts as not entailed.
fn entails(ctx: &Formula, f: Formula) -> bool {
    // exact elimination with parametric products blows up on larger contexts
    const EXACT_NONLINEAR_ATOMS: usize = 6;
    let ctx = &relevant(ctx, &f);
    let phi = Formula::implies(ctx.clone(), f.clone());
    let nonlinear = phi.atoms().iter().any(|a| a.poly.total_degree() >= 2);
    if nonlinear && phi.num_atoms() > EXACT_NONLINEAR_ATOMS {
        return linearized_entails(ctx, &f);
    }
    match is_valid(&phi) {
        Ok(b) => b,
        Err(_) => linearized_entails(ctx, &f),
    }
}

/// The conjuncts of `ctx` connected to `goal` through shared symbols. The
/// others cannot contribute to an entailment unless `ctx` is inconsistent.
fn relevant(ctx: &Formula, goal: &Formula) -> Formula {
    let Formula::And(xs) = ctx else { return ctx.clone() };
    let mut syms = goal.syms();
    let mut taken = vec![false; xs.len()];
    loop {
        let mut grew = false;
        for (i, x) in xs.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let xsyms = x.syms();
            if xsyms.iter().any(|s| syms.contains(s)) {
                taken[i] = true;
                syms.extend(xsyms);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Formula::and(xs.iter().zip(&taken).filter(|(_, t)| **t).map(|(x, _)| x.clone()))
}

/// Sign set of `p * q` given the sign sets of `p` and `q`.
fn product_rel(a: Rel, b: Rel) -> Rel {
    let signs = |r: Rel| (0..3).filter(move |i| r.bits() & (1 << i) != 0).map(|i| i as i8 - 1);
    let mut out = 0u8;
    for x in signs(a) {
        for y in signs(b) {
            out |= 1 << ((x * y) + 1);
        }
    }
    Rel::from_bits(out)
}

/// A sound, incomplete entailment check for polynomial atoms: products of
/// pairs of top-level hypothesis atoms are added as facts, then every
/// nonlinear monomial is treated as an opaque constant and the resulting
/// linear problem is decided exactly.
pub fn linearized_entails(ctx: &Formula, goal: &Formula) -> bool {
    let hyps: Vec<Atom> = match ctx {
        Formula::And(xs) => {
            xs.iter().filter_map(|x| if let Formula::Atom(a) = x { Some(a.clone()) } else { None }).collect()
        }
        Formula::Atom(a) => vec![a.clone()],
        _ => Vec::new(),
    };
    let wanted: BTreeSet<crate::formula::Monomial> = goal
        .atoms()
        .iter()
        .chain(&hyps.iter().collect::<Vec<_>>())
        .flat_map(|a| a.poly.terms().map(|(m, _)| m.clone()).collect::<Vec<_>>())
        .filter(|m| m.degree() >= 2)
        .collect();
    let mut facts = vec![ctx.clone()];
    for (i, a) in hyps.iter().enumerate() {
        for b in &hyps[i..] {
            let rel = product_rel(a.rel, b.rel);
            let p = a.poly.mul(&b.poly);
            if rel != Rel::TRUE && p.total_degree() >= 2 && p.terms().any(|(m, _)| wanted.contains(m)) {
                facts.push(Atom::make(p, rel));
            }
        }
    }
    let mut names: BTreeMap<crate::formula::Monomial, Poly> = BTreeMap::new();
    let mut abstract_poly = |p: &Poly| {
        Poly::from_terms(p.terms().map(|(m, c)| {
            if m.degree() < 2 {
                return (m.clone(), c.clone());
            }
            let n = names.len();
            let s = names.entry(m.clone()).or_insert_with(|| Poly::cnst(&format!("mono!{n}")));
            let Some((m2, _)) = s.leading() else { unreachable!() };
            (m2.clone(), c.clone())
        }))
    };
    let phi = Formula::implies(Formula::and(facts), goal.clone());
    let lin = phi.map_atoms(&mut |a| Atom::make(abstract_poly(&a.poly), a.rel));
    is_valid(&lin).unwrap_or(false)
}

/// Drops small children of AND/OR nodes that the atomic siblings make
/// redundant under `ctx`: a disjunct refuted when the other atoms fail, a
/// conjunct entailed by the other atoms.
fn prune_siblings(f: &Formula, ctx: &Formula, stats: &mut SimplifyStats) -> Formula {
    const MAX_CHILDREN: usize = 12;
    const MAX_ATOMS: usize = 16;
    const SMALL_CHILD: usize = 4;
    match f {
        Formula::And(xs) | Formula::Or(xs) => {
            let is_or = matches!(f, Formula::Or(_));
            let mut kids: Vec<Formula> = xs.iter().map(|x| prune_siblings(x, ctx, stats)).collect();
            if kids.len() <= MAX_CHILDREN && f.num_atoms() <= MAX_ATOMS {
                let mut i = 0;
                while i < kids.len() {
                    if kids[i].num_atoms() <= SMALL_CHILD {
                        let others = kids
                            .iter()
                            .enumerate()
                            .filter(|(j, k)| *j != i && matches!(k, Formula::Atom(_)))
                            .map(|(_, k)| if is_or { Formula::not(k.clone()).nnf() } else { k.clone() });
                        let local = Formula::and(std::iter::once(ctx.clone()).chain(others));
                        let goal = if is_or { Formula::not(kids[i].clone()).nnf() } else { kids[i].clone() };
                        if local.is_quantifier_free() && entails(&local, goal) {
                            stats.decided += 1;
                            kids.remove(i);
                            continue;
                        }
                    }
                    i += 1;
                }
            }
            if is_or {
                Formula::or(kids)
            } else {
                Formula::and(kids)
            }
        }
        _ => f.clone(),
    }
}

fn reduce_atom(
    a: &Atom,
    ctx: &Formula,
    divisors: &[(Poly, bool)],
    stats: &mut SimplifyStats,
) -> Result<Formula, QeError> {
    let mut cur = a.clone();
    loop {
        let f = Formula::Atom(cur.clone());
        if entails(ctx, f.clone()) {
            stats.decided += 1;
            return Ok(Formula::True);
        }
        if entails(ctx, Formula::not(f.clone())) {
            stats.decided += 1;
            return Ok(Formula::False);
        }
        let mut next = None;
        for (q, pos) in divisors {
            if q.total_degree() >= cur.poly.total_degree() {
                continue;
            }
            if let Some(r) = cur.poly.div_exact(q) {
                let rel = if *pos { cur.rel } else { cur.rel.mirror() };
                next = Some(Atom::make(r, rel));
                break;
            }
        }
        match next {
            Some(Formula::Atom(b)) => {
                stats.cancelled += 1;
                cur = b;
            }
            Some(g) => {
                stats.cancelled += 1;
                return Ok(g);
            }
            None => return Ok(f),
        }
    }
}
