//! Virtual substitution on the mode-s1 water-tank system: eliminate the
//! level values and the time points, leaving a condition on i, o, la, lo.
//!
//! cargo run --example quantifier_elimination

use std::collections::BTreeSet;

use symelim::formula::{Formula, Sym};
use symelim::parser::parse_formula;
use symelim::qe::vs::test_points;
use symelim::qe::{eliminate_all, simplify, simplify_basic, vs_eliminate};

fn main() {
    let phi = parse_formula("AND(l <= lo, t0 < t, l >= la, lp - l = (i - o)*(t - t0), lp >= la, lp > lo)").unwrap();
    println!("phi        = {phi}");

    let lp = Sym::Const("lp".into());
    for p in test_points(&lp, &phi).unwrap() {
        println!("  test point for lp: {p}");
    }
    let step = vs_eliminate(&lp, &phi).unwrap();
    println!("EX lp. phi = {step}");

    let vars: BTreeSet<Sym> = ["l", "lp", "t0", "t"].iter().map(|v| Sym::Const(v.to_string())).collect();
    let (res, order) = eliminate_all(&vars, &phi).unwrap();
    let order: Vec<&str> = order.iter().map(Sym::name).collect();
    println!("order      = {}", order.join(", "));
    println!("result     = {res}");
    let (res, _) = simplify(&res, &[]).unwrap();
    println!("simplified = {res}");
    println!("negated    = {}", simplify_basic(&Formula::not(res).nnf()));
}
