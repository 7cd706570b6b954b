//! Quantifier elimination over ordered fields for the linear-per-variable
//! fragment, validity checking, simplification and a Fourier-Motzkin oracle.

pub mod assume;
pub mod fm;
pub mod normalize;
pub mod vs;

use std::collections::{BTreeMap, BTreeSet};

use crate::formula::{DegreeError, Formula, Poly, Rational, Sym};

pub use assume::{instantiate_universal, simplify, SimplifyStats};
pub use fm::{fm_conjunction, fm_model, numeric_fm_sat};
pub use normalize::simplify_basic;
pub use vs::{vs_eliminate, TestPoint};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QeError {
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error("`{0}` occurs inside a function argument and cannot be eliminated")]
    UnderFunction(String),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
    #[error("nonlinear residue `{0}` in a linear-only procedure")]
    Nonlinear(String),
    #[error("no elimination order keeps every remaining symbol linear: {0}")]
    NoLinearOrder(String),
}

/// Eliminates `vars` (each step is `EXISTS x`), cheapest first: fewest test
/// points, then fewest atoms touched. Returns the order taken.
pub fn eliminate_block(vars: &[Sym], phi: &Formula) -> Result<Formula, QeError> {
    let mut cur = simplify_basic(phi);
    for x in vars {
        cur = vs_eliminate(x, &cur)?;
    }
    Ok(cur)
}

/// Eliminates every symbol in `vars`, choosing the order greedily by
/// test-point count. Returns the order used alongside the result.
pub fn eliminate_all(vars: &BTreeSet<Sym>, phi: &Formula) -> Result<(Formula, Vec<Sym>), QeError> {
    let mut chain = Vec::new();
    let res = eliminate_chain(vars, phi, &mut chain)?;
    Ok((res, chain.into_iter().map(|(s, _)| s).collect()))
}

/// As [`eliminate_all`], also recording the formula before each step.
fn eliminate_chain(vars: &BTreeSet<Sym>, phi: &Formula, chain: &mut Vec<(Sym, Formula)>) -> Result<Formula, QeError> {
    let mut cur = simplify_basic(phi);
    let mut remaining: BTreeSet<Sym> = vars.clone();
    loop {
        let present = cur.syms();
        remaining.retain(|s| present.contains(s));
        if remaining.is_empty() {
            return Ok(cur);
        }
        // ties go to the symbol in fewer atoms: its substitution rewrites less
        let mut best: Option<((usize, usize), Sym)> = None;
        let mut last_err = None;
        let atoms = cur.atoms();
        for x in &remaining {
            // symbols nested in arguments of other remaining symbols go later
            if remaining.iter().any(|o| o != x && nested_in(x, o)) {
                continue;
            }
            match vs::cost(x, &cur) {
                Ok(c) => {
                    let key = (c, atoms.iter().filter(|a| a.poly.contains_sym(x)).count());
                    if best.as_ref().is_none_or(|(bk, _)| key < *bk) {
                        best = Some((key, x.clone()));
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let Some((_, x)) = best else {
            let e = last_err.map(|e| e.to_string()).unwrap_or_default();
            return Err(QeError::NoLinearOrder(e));
        };
        let next = vs_eliminate(&x, &cur)?;
        chain.push((x.clone(), cur));
        cur = next;
        remaining.remove(&x);
    }
}

fn nested_in(x: &Sym, outer: &Sym) -> bool {
    if let Sym::App(_, args) = outer {
        let mut inner = BTreeSet::new();
        for a in args {
            a.syms_deep(&mut inner);
        }
        inner.contains(x)
    } else {
        false
    }
}

/// Removes all quantifiers, innermost first.
pub fn eliminate_quantifiers(phi: &Formula) -> Result<Formula, QeError> {
    Ok(match phi {
        Formula::True | Formula::False | Formula::Atom(_) => phi.clone(),
        Formula::Not(g) => Formula::not(eliminate_quantifiers(g)?),
        Formula::And(xs) => Formula::and(xs.iter().map(eliminate_quantifiers).collect::<Result<Vec<_>, _>>()?),
        Formula::Or(xs) => Formula::or(xs.iter().map(eliminate_quantifiers).collect::<Result<Vec<_>, _>>()?),
        Formula::Implies(a, b) => Formula::implies(eliminate_quantifiers(a)?, eliminate_quantifiers(b)?),
        Formula::Exists(vs, b) => {
            let body = eliminate_quantifiers(b)?;
            let vars: BTreeSet<Sym> = vs.iter().map(|v| Sym::Var(v.clone())).collect();
            eliminate_all(&vars, &body)?.0
        }
        Formula::Forall(vs, b) => {
            let body = eliminate_quantifiers(b)?;
            let vars: BTreeSet<Sym> = vs.iter().map(|v| Sym::Var(v.clone())).collect();
            let neg = simplify_basic(&Formula::not(body));
            Formula::not(eliminate_all(&vars, &neg)?.0).nnf()
        }
    })
}

/// Replaces the variables of outermost universal quantifiers by fresh constants.
pub fn strip_universal(phi: &Formula) -> Formula {
    let mut cur = phi.clone();
    let mut counter = 0usize;
    while let Formula::Forall(vs, body) = cur {
        let mut map = BTreeMap::new();
        for v in vs {
            counter += 1;
            map.insert(Sym::Var(v.clone()), Poly::cnst(&format!("{v}!u{counter}")));
        }
        cur = body.substitute_with(&mut |s| map.get(s).cloned());
    }
    cur
}

/// Decides whether the universal closure of `phi` holds over the reals.
///
/// Function applications are treated as independent unknowns, which is
/// sound for validity (it can only under-report validity when two
/// applications with distinct argument terms must coincide).
pub fn is_valid(phi: &Formula) -> Result<bool, QeError> {
    let body = eliminate_quantifiers(&strip_universal(phi))?;
    let neg = simplify_basic(&Formula::not(body));
    let syms = neg.syms();
    let (res, _) = eliminate_all(&syms, &neg)?;
    match res {
        Formula::False => Ok(true),
        Formula::True => Ok(false),
        other => {
            // ground but unsimplified residue
            match other.eval(&mut |_| None) {
                Some(b) => Ok(!b),
                None => Err(QeError::Nonlinear(other.to_string())),
            }
        }
    }
}

/// Satisfiability of a quantifier-free formula, by eliminating every symbol.
pub fn is_sat(phi: &Formula) -> Result<bool, QeError> {
    let syms = phi.syms();
    let (res, _) = eliminate_all(&syms, phi)?;
    Ok(res == Formula::True)
}

/// Outcome of [`find_model`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelSearch {
    Unsat,
    /// Satisfiable; the witness is absent when exact sampling failed.
    Sat(Option<BTreeMap<Sym, Rational>>),
}

/// Decides satisfiability by full elimination and, if satisfiable, builds a
/// rational witness by choosing values backwards along the elimination chain.
pub fn find_model(phi: &Formula) -> Result<ModelSearch, QeError> {
    let syms = phi.syms();
    let mut chain = Vec::new();
    let res = eliminate_chain(&syms, phi, &mut chain)?;
    if res != Formula::True {
        return Ok(ModelSearch::Unsat);
    }
    let mut model: BTreeMap<Sym, Rational> = BTreeMap::new();
    for (x, before) in chain.iter().rev() {
        let known = &model;
        let uni = simplify_basic(&before.substitute_with(&mut |s| known.get(s).map(|v| Poly::constant(v.clone()))));
        if model.contains_key(x) {
            continue;
        }
        // symbols that vanished from later steps are solved together with x
        let others: BTreeSet<Sym> = uni.syms().into_iter().filter(|s| s != x).collect();
        if !others.is_empty() {
            let proj = eliminate_all(&others, &uni)?.0;
            let Some(v) = pick_value(x, &proj) else { return Ok(ModelSearch::Sat(None)) };
            let rest = simplify_basic(&uni.substitute_with(&mut |s| (s == x).then(|| Poly::constant(v.clone()))));
            model.insert(x.clone(), v);
            match find_model(&rest)? {
                ModelSearch::Sat(Some(m)) => model.extend(m),
                _ => return Ok(ModelSearch::Sat(None)),
            }
            continue;
        }
        match pick_value(x, &uni) {
            Some(v) => {
                model.insert(x.clone(), v);
            }
            None => return Ok(ModelSearch::Sat(None)),
        }
    }
    for s in syms {
        model.entry(s).or_insert_with(|| Rational::from_integer(0.into()));
    }
    Ok(ModelSearch::Sat(Some(model)))
}

/// A rational value for `x` satisfying the univariate formula `phi`.
fn pick_value(x: &Sym, phi: &Formula) -> Option<Rational> {
    let mut roots: Vec<Rational> = Vec::new();
    for a in phi.atoms() {
        if let Ok((ca, cb)) = a.poly.as_linear_in(x) {
            if let (Some(k), Some(d)) = (ca.as_constant(), cb.as_constant()) {
                if k != Rational::from_integer(0.into()) {
                    roots.push(-d / k);
                }
            }
        }
    }
    roots.sort();
    roots.dedup();
    let one = Rational::from_integer(1.into());
    let two = Rational::from_integer(2.into());
    let mut cands = vec![Rational::from_integer(0.into())];
    if let (Some(lo), Some(hi)) = (roots.first(), roots.last()) {
        cands.push(lo - &one);
        cands.push(hi + &one);
    }
    for w in roots.windows(2) {
        cands.push((&w[0] + &w[1]) / &two);
    }
    cands.extend(roots.iter().cloned());
    for c in cands {
        let ok = phi.eval(&mut |s| if s == x { Some(c.clone()) } else { None });
        if ok == Some(true) {
            return Some(c);
        }
    }
    None
}
