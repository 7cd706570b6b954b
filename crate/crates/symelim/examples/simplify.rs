//! Simplification under assumptions, including universally quantified
//! assumptions over function symbols (`?` marks the instantiated slot in
//! task files; here the quantifier is written out).
//!
//! cargo run --example simplify

use symelim::parser::parse_formula;
use symelim::qe::simplify;

fn main() {
    let cases = [
        ("OR(la - lo > _0, i - o <= _0)", vec!["la < lo"]),
        ("AND(la - lo <= _0, OR(la - lo < _0, i > _0))", vec!["_0 < i"]),
        ("(FORALL x). OR(m(x) > M(x), M(x) <= _0)", vec!["(FORALL x). m(x) <= M(x)"]),
        ("OR(dsafe - dchange(i0) <= _0, dchange(i0) < _0)", vec!["(FORALL x). _0 <= dchange(x)"]),
    ];
    for (phi, assumptions) in cases {
        let phi = parse_formula(phi).unwrap();
        let ctx: Vec<_> = assumptions.iter().map(|a| parse_formula(a).unwrap()).collect();
        let (out, stats) = simplify(&phi, &ctx).unwrap();
        println!("{phi}");
        println!("  under {}", assumptions.join("; "));
        println!("  = {out}   ({stats:?})");
    }
}
