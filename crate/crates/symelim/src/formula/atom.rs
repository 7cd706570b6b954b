//! Arithmetic atoms `p rel 0` in canonical form.

use std::fmt;

use num_traits::{Signed, Zero};

use super::poly::{Poly, Rational, Sym};
use super::Formula;

/// A relation against zero, stored as the set of admissible signs of `p`.
///
/// Bit 0 is "negative", bit 1 "zero", bit 2 "positive". Every subset is a
/// relation: the empty set is `false`, the full set `true`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rel(u8);

impl Rel {
    pub const FALSE: Rel = Rel(0);
    pub const LT: Rel = Rel(0b001);
    pub const EQ: Rel = Rel(0b010);
    pub const LE: Rel = Rel(0b011);
    pub const GT: Rel = Rel(0b100);
    pub const NE: Rel = Rel(0b101);
    pub const GE: Rel = Rel(0b110);
    pub const TRUE: Rel = Rel(0b111);

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_bits(b: u8) -> Rel {
        Rel(b & 0b111)
    }

    /// Relation of `-p` equivalent to `p rel 0`.
    pub fn mirror(self) -> Rel {
        Rel(((self.0 & 1) << 2) | (self.0 & 2) | ((self.0 >> 2) & 1))
    }

    pub fn complement(self) -> Rel {
        Rel(!self.0 & 0b111)
    }

    pub fn meet(self, o: Rel) -> Rel {
        Rel(self.0 & o.0)
    }

    pub fn join(self, o: Rel) -> Rel {
        Rel(self.0 | o.0)
    }

    pub fn holds(self, value: &Rational) -> bool {
        let bit = if value.is_negative() {
            1
        } else if value.is_zero() {
            2
        } else {
            4
        };
        self.0 & bit != 0
    }

    pub fn is_strict(self) -> bool {
        self == Rel::LT || self == Rel::GT
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::LT => "<",
            Rel::EQ => "=",
            Rel::LE => "<=",
            Rel::GT => ">",
            Rel::NE => "!=",
            Rel::GE => ">=",
            Rel::TRUE => "true",
            _ => "false",
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `poly rel 0`, with `poly` primitive and positive-leading.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub poly: Poly,
    pub rel: Rel,
}

impl Atom {
    /// Canonicalizes `p rel 0`; degenerate atoms collapse to `true`/`false`.
    pub fn make(p: Poly, rel: Rel) -> Formula {
        if rel == Rel::TRUE {
            return Formula::True;
        }
        if rel == Rel::FALSE {
            return Formula::False;
        }
        if let Some(c) = p.as_constant() {
            return Formula::from_bool(rel.holds(&c));
        }
        let (k, q) = p.primitive();
        let rel = if k.is_negative() { rel.mirror() } else { rel };
        Formula::Atom(Atom { poly: q, rel })
    }

    /// `lhs rel rhs`, moved to `lhs - rhs rel 0`.
    pub fn compare(lhs: &Poly, rel: Rel, rhs: &Poly) -> Formula {
        Atom::make(lhs.sub(rhs), rel)
    }

    pub fn negate(&self) -> Atom {
        Atom { poly: self.poly.clone(), rel: self.rel.complement() }
    }

    pub fn eval(&self, f: &mut dyn FnMut(&Sym) -> Option<Rational>) -> Option<bool> {
        self.poly.eval(f).map(|v| self.rel.holds(&v))
    }

    pub fn substitute_with(&self, f: &mut dyn FnMut(&Sym) -> Option<Poly>) -> Formula {
        Atom::make(self.poly.substitute_with(f), self.rel)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} _0", self.poly, self.rel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::poly::rat;

    #[test]
    fn mirror_and_complement() {
        assert_eq!(Rel::LT.mirror(), Rel::GT);
        assert_eq!(Rel::LE.mirror(), Rel::GE);
        assert_eq!(Rel::EQ.mirror(), Rel::EQ);
        assert_eq!(Rel::NE.mirror(), Rel::NE);
        assert_eq!(Rel::LT.complement(), Rel::GE);
        assert_eq!(Rel::EQ.complement(), Rel::NE);
    }

    #[test]
    fn move_and_cancel() {
        let x = Poly::cnst("x");
        let f = Atom::compare(&x.scale(&rat(2)), Rel::LE, &x.add(&Poly::int(4)));
        assert_eq!(f.to_string(), "x - _4 <= _0");
    }

    #[test]
    fn expansion() {
        let l1 = Poly::app("L", vec![Poly::cnst("t1")]);
        let l0 = Poly::app("L", vec![Poly::cnst("t0")]);
        let rhs = l0.add(&Poly::cnst("in").mul(&Poly::cnst("t1").sub(&Poly::cnst("t0"))));
        let f = Atom::compare(&l1, Rel::EQ, &rhs);
        assert_eq!(f.to_string(), "in*t0 - in*t1 - L(t0) + L(t1) = _0");
    }

    #[test]
    fn degenerate() {
        assert_eq!(Atom::make(Poly::zero(), Rel::LT), Formula::False);
        assert_eq!(Atom::make(Poly::zero(), Rel::LE), Formula::True);
    }

    #[test]
    fn negative_leading_flips() {
        let f = Atom::make(Poly::cnst("a").neg().add(&Poly::int(1)), Rel::LT);
        assert_eq!(f.to_string(), "a - _1 > _0");
    }
}
