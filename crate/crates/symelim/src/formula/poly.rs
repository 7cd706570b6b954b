//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Monomials range over [`Sym`]: constants, bound variables, and function
//! applications whose arguments are themselves polynomials. An application
//! such as `out(i0 - 1)` is opaque to the arithmetic and only changes when a
//! substitution rewrites it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// Shorthand for an integer rational.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Shorthand for `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// An atomic symbol inside a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Sym {
    Const(String),
    Var(String),
    App(String, Vec<Poly>),
}

impl Sym {
    pub fn name(&self) -> &str {
        match self {
            Sym::Const(n) | Sym::Var(n) | Sym::App(n, _) => n,
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Sym::Const(_) => 0,
            Sym::Var(_) => 1,
            Sym::App(..) => 2,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Sym::Const(_) => true,
            Sym::Var(_) => false,
            Sym::App(_, args) => args.iter().all(Poly::is_ground),
        }
    }

    /// Rewrites arguments bottom-up, then offers the rebuilt symbol to `f`.
    fn substitute(&self, f: &mut dyn FnMut(&Sym) -> Option<Poly>) -> Poly {
        let rebuilt = match self {
            Sym::App(name, args) => Sym::App(name.clone(), args.iter().map(|a| a.substitute_with(f)).collect()),
            other => other.clone(),
        };
        match f(&rebuilt) {
            Some(p) => p,
            None => Poly::sym(rebuilt),
        }
    }
}

impl Ord for Sym {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name().cmp(other.name()).then_with(|| self.kind_rank().cmp(&other.kind_rank())).then_with(|| {
            match (self, other) {
                (Sym::App(_, a), Sym::App(_, b)) => a.cmp(b),
                _ => Ordering::Equal,
            }
        })
    }
}

impl PartialOrd for Sym {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A power product, kept sorted by symbol with positive exponents.
///
/// `Ord` is graded lexicographic with the leading monomial first, so a
/// `BTreeMap<Monomial, _>` iterates in print order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(Vec<(Sym, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn of(s: Sym) -> Self {
        Monomial(vec![(s, 1)])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Sym, u32)] {
        &self.0
    }

    pub fn exponent(&self, s: &Sym) -> u32 {
        self.0.iter().find(|(t, _)| t == s).map(|(_, e)| *e).unwrap_or(0)
    }

    /// The monomial with `s` removed entirely.
    pub fn without(&self, s: &Sym) -> Monomial {
        Monomial(self.0.iter().filter(|(t, _)| t != s).cloned().collect())
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out: Vec<(Sym, u32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let by_degree = other.degree().cmp(&self.degree());
        if by_degree != Ordering::Equal {
            return by_degree;
        }
        // Compare the expanded factor sequences; the smaller symbol leads.
        let (mut i, mut j) = (0, 0);
        let (mut ri, mut rj) = (self.0.first().map(|f| f.1).unwrap_or(0), other.0.first().map(|f| f.1).unwrap_or(0));
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Equal => {}
                ord => return ord,
            }
            let step = ri.min(rj);
            ri -= step;
            rj -= step;
            if ri == 0 {
                i += 1;
                ri = self.0.get(i).map(|f| f.1).unwrap_or(0);
            }
            if rj == 0 {
                j += 1;
                rj = other.0.get(j).map(|f| f.1).unwrap_or(0);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Raised by [`Poly::as_linear_in`] when the variable occurs with degree two or more.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("`{symbol}` occurs with degree {degree}; only linear occurrences can be eliminated")]
pub struct DegreeError {
    pub symbol: String,
    pub degree: u32,
}

/// A polynomial: map from monomial to non-zero coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(rat(n))
    }

    pub fn sym(s: Sym) -> Self {
        let mut p = Poly::zero();
        p.terms.insert(Monomial::of(s), Rational::one());
        p
    }

    pub fn cnst(name: &str) -> Self {
        Poly::sym(Sym::Const(name.to_string()))
    }

    pub fn var(name: &str) -> Self {
        Poly::sym(Sym::Var(name.to_string()))
    }

    pub fn app(name: &str, args: Vec<Poly>) -> Self {
        Poly::sym(Sym::App(name.to_string(), args))
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The value if the polynomial has no symbols.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Rational::zero)
    }

    /// Leading term in graded-lex order.
    pub fn leading(&self) -> Option<(&Monomial, &Rational)> {
        self.terms.iter().next()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect() }
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, s: &Sym) -> u32 {
        self.terms.keys().map(|m| m.exponent(s)).max().unwrap_or(0)
    }

    pub fn contains_sym(&self, s: &Sym) -> bool {
        self.degree_in(s) > 0
    }

    /// Splits `self = a*s + b` with `a`, `b` free of `s`.
    pub fn as_linear_in(&self, s: &Sym) -> Result<(Poly, Poly), DegreeError> {
        let mut a = Poly::zero();
        let mut b = Poly::zero();
        for (m, c) in &self.terms {
            match m.exponent(s) {
                0 => b.add_term(m.clone(), c.clone()),
                1 => a.add_term(m.without(s), c.clone()),
                d => {
                    return Err(DegreeError { symbol: s.to_string(), degree: d });
                }
            }
        }
        Ok((a, b))
    }

    /// Top-level symbols of the monomials (application arguments are not entered).
    pub fn syms(&self) -> BTreeSet<Sym> {
        self.terms.keys().flat_map(|m| m.0.iter().map(|(s, _)| s.clone())).collect()
    }

    /// Every symbol, including those nested inside application arguments.
    pub fn syms_deep(&self, out: &mut BTreeSet<Sym>) {
        for m in self.terms.keys() {
            for (s, _) in &m.0 {
                if let Sym::App(_, args) = s {
                    for a in args {
                        a.syms_deep(out);
                    }
                }
                out.insert(s.clone());
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        self.terms.keys().all(|m| m.0.iter().all(|(s, _)| s.is_ground()))
    }

    /// Replaces symbols bottom-up; `f` sees applications with rewritten arguments.
    pub fn substitute_with(&self, f: &mut dyn FnMut(&Sym) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut prod = Poly::constant(c.clone());
            for (s, e) in &m.0 {
                let base = s.substitute(f);
                for _ in 0..*e {
                    prod = prod.mul(&base);
                }
            }
            out = out.add(&prod);
        }
        out
    }

    pub fn substitute(&self, map: &BTreeMap<Sym, Poly>) -> Poly {
        if map.is_empty() {
            return self.clone();
        }
        self.substitute_with(&mut |s| map.get(s).cloned())
    }

    /// Evaluates with `f` providing values for symbols.
    pub fn eval(&self, f: &mut dyn FnMut(&Sym) -> Option<Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (s, e) in &m.0 {
                let x = f(s)?;
                for _ in 0..*e {
                    v *= &x;
                }
            }
            acc += v;
        }
        Some(acc)
    }

    /// Scales to coprime integer coefficients with a positive leading
    /// coefficient; returns the positive-or-negative factor applied.
    pub fn primitive(&self) -> (Rational, Poly) {
        if self.is_zero() {
            return (Rational::one(), Poly::zero());
        }
        let mut den_lcm = BigInt::one();
        let mut num_gcd = BigInt::zero();
        for c in self.terms.values() {
            den_lcm = den_lcm.lcm(c.denom());
            num_gcd = num_gcd.gcd(c.numer());
        }
        let mut k = Rational::new(den_lcm, BigInt::one()) / Rational::from_integer(num_gcd);
        if self.leading().unwrap().1.is_negative() {
            k = -k;
        }
        let scaled = self.scale(&k);
        (k, scaled)
    }

    /// Exact division by `d`; `None` if the remainder is non-zero.
    ///
    /// Uses graded-lex leading terms, so it only succeeds when `d` divides
    /// `self` as polynomials.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        while let Some((m, c)) = rem.leading() {
            let qm = monomial_div(m, dm)?;
            let qc = c / dc;
            let t = Poly::from_terms([(qm, qc)]);
            rem = rem.sub(&t.mul(d));
            quot = quot.add(&t);
        }
        Some(quot)
    }
}

fn monomial_div(m: &Monomial, d: &Monomial) -> Option<Monomial> {
    let mut out = m.0.clone();
    for (s, e) in &d.0 {
        let pos = out.iter().position(|(t, _)| t == s)?;
        if out[pos].1 < *e {
            return None;
        }
        out[pos].1 -= e;
        if out[pos].1 == 0 {
            out.remove(pos);
        }
    }
    Some(Monomial(out))
}

/// Formats a rational in the underscore literal dialect (`_3`, `_1/2`).
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        format!("_{}", r.numer())
    } else {
        format!("_{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Const(n) | Sym::Var(n) => write!(f, "{n}"),
            Sym::App(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, e) in &self.0 {
            for _ in 0..*e {
                if !first {
                    write!(f, "*")?;
                }
                write!(f, "{s}")?;
                first = false;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "_0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&mag))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Poly {
        Poly::cnst(n)
    }

    #[test]
    fn grlex_print_order() {
        let p = c("lo").sub(&c("la"));
        assert_eq!(p.to_string(), "-la + lo");
        let q = c("in0").mul(&c("t0")).sub(&c("in0").mul(&c("t1"))).sub(&c("la")).add(&c("lo"));
        assert_eq!(q.to_string(), "in0*t0 - in0*t1 - la + lo");
        let r = c("i0").sub(&Poly::int(1));
        assert_eq!(r.to_string(), "i0 - _1");
    }

    #[test]
    fn higher_power_leads() {
        let x = c("x");
        let y = c("y");
        let p = x.mul(&y).add(&x.mul(&x)).add(&y.mul(&y));
        assert_eq!(p.to_string(), "x*x + x*y + y*y");
    }

    #[test]
    fn linear_split() {
        let t = Sym::Const("t".into());
        let p = c("in").mul(&c("t")).sub(&c("in").mul(&c("t0"))).sub(&c("lo"));
        let (a, b) = p.as_linear_in(&t).unwrap();
        assert_eq!(a, c("in"));
        assert_eq!(b, c("in").mul(&c("t0")).neg().sub(&c("lo")));
        assert_eq!(Poly::int(3).as_linear_in(&t).unwrap(), (Poly::zero(), Poly::int(3)));
        assert!(c("t").mul(&c("t")).as_linear_in(&t).is_err());
    }

    #[test]
    fn primitive_part() {
        let p = c("x").scale(&rat(-4)).add(&Poly::constant(ratio(2, 3)));
        let (_, q) = p.primitive();
        assert_eq!(q.to_string(), "_6*x - _1");
    }

    #[test]
    fn exact_division() {
        let a = c("i").sub(&c("o"));
        let b = c("t1").sub(&c("t0"));
        let prod = a.mul(&b);
        assert_eq!(prod.div_exact(&b), Some(a.clone()));
        assert_eq!(prod.add(&Poly::int(1)).div_exact(&b), None);
    }

    #[test]
    fn substitution_reaches_arguments() {
        let p = Poly::app("out", vec![Poly::var("i").sub(&Poly::int(1))]);
        let mut map = BTreeMap::new();
        map.insert(Sym::Var("i".into()), Poly::int(2));
        let q = p.substitute(&map);
        assert_eq!(q.to_string(), "out(_1)");
    }
}
