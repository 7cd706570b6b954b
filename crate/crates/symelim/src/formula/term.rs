use std::fmt;

use num_traits::{One, Signed, Zero};

use super::poly::{fmt_rational, Poly, Rational, Sym};

/// Surface syntax of a term, as written in problem files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
    Num(Rational),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Neg(Box<Term>),
}

impl Term {
    /// Expands to the polynomial normal form.
    pub fn to_poly(&self) -> Poly {
        match self {
            Term::Var(v) => Poly::var(v),
            Term::Const(c) => Poly::cnst(c),
            Term::App(f, args) => Poly::app(f, args.iter().map(Term::to_poly).collect()),
            Term::Num(r) => Poly::constant(r.clone()),
            Term::Add(a, b) => a.to_poly().add(&b.to_poly()),
            Term::Sub(a, b) => a.to_poly().sub(&b.to_poly()),
            Term::Mul(a, b) => a.to_poly().mul(&b.to_poly()),
            Term::Neg(a) => a.to_poly().neg(),
        }
    }
}

impl Term {
    pub fn from_sym(s: &Sym) -> Term {
        match s {
            Sym::Const(c) => Term::Const(c.clone()),
            Sym::Var(v) => Term::Var(v.clone()),
            Sym::App(f, args) => Term::App(f.clone(), args.iter().map(Term::from_poly).collect()),
        }
    }

    /// A sum of products in the order of `p`; `to_poly` inverts it.
    pub fn from_poly(p: &Poly) -> Term {
        let mut out: Option<Term> = None;
        for (m, c) in p.terms() {
            let mut t: Option<Term> = None;
            for (s, e) in m.factors() {
                for _ in 0..*e {
                    let f = Term::from_sym(s);
                    t = Some(match t {
                        None => f,
                        Some(t) => Term::Mul(Box::new(t), Box::new(f)),
                    });
                }
            }
            let a = c.abs();
            let t = match t {
                None => Term::Num(a),
                Some(t) if a.is_one() => t,
                Some(t) => Term::Mul(Box::new(Term::Num(a)), Box::new(t)),
            };
            out = Some(match out {
                None if c.is_negative() => Term::Neg(Box::new(t)),
                None => t,
                Some(o) if c.is_negative() => Term::Sub(Box::new(o), Box::new(t)),
                Some(o) => Term::Add(Box::new(o), Box::new(t)),
            });
        }
        out.unwrap_or_else(|| Term::Num(Rational::zero()))
    }

    /// Like `Display`, without parentheses around a top-level sum.
    pub fn to_string_bare(&self) -> String {
        match self {
            Term::Add(a, b) => format!("{a} + {b}"),
            Term::Sub(a, b) => format!("{a} - {b}"),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) | Term::Const(n) => write!(f, "{n}"),
            Term::App(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Num(r) => write!(f, "{}", fmt_rational(r)),
            Term::Add(a, b) => write!(f, "({a} + {b})"),
            Term::Sub(a, b) => write!(f, "({a} - {b})"),
            Term::Mul(a, b) => write!(f, "({a}*{b})"),
            Term::Neg(a) => write!(f, "-({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::rat;

    #[test]
    fn poly_roundtrip() {
        let l = |t: &str| Poly::app("l", vec![Poly::cnst(t)]);
        let p = l("t1")
            .sub(&l("t0"))
            .sub(&Poly::cnst("i").mul(&Poly::cnst("t1").sub(&Poly::cnst("t0"))))
            .add(&Poly::int(3));
        assert_eq!(Term::from_poly(&p).to_poly(), p);
        let q = Poly::cnst("x").mul(&Poly::cnst("x")).scale(&rat(-2));
        assert_eq!(Term::from_poly(&q).to_poly(), q);
        assert_eq!(Term::from_poly(&Poly::zero()).to_poly(), Poly::zero());
    }
}
