//! Randomized checks of the invariants the modules promise.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use symelim::elim::{check_sat, SatResult};
use symelim::formula::{rat, ratio, Atom, Formula, Poly, Rational, Rel, Sym};
use symelim::hybrid::{check_update_exclusivity, parse_model, Model, UpdateCase, UpdateRule};
use symelim::locality::{reduce_chain, Source};
use symelim::parser::{parse_formula, parse_problem};
use symelim::qe::{eliminate_all, eliminate_quantifiers, is_valid, numeric_fm_sat, simplify};

const RELS: [Rel; 6] = [Rel::LT, Rel::LE, Rel::EQ, Rel::NE, Rel::GE, Rel::GT];

fn c(name: &str) -> Poly {
    Poly::cnst(name)
}

fn rel() -> impl Strategy<Value = Rel> {
    prop::sample::select(RELS.to_vec())
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=3).prop_map(|(n, d)| ratio(n, d))
}

/// Sum of up to four terms `k * m` over the given symbols, degree <= 2.
fn poly_over(names: &'static [&'static str]) -> impl Strategy<Value = Poly> {
    let term =
        (-3i64..=3, prop::sample::select(names.to_vec()), prop::option::of(prop::sample::select(names.to_vec())));
    (prop::collection::vec(term, 0..4), -4i64..=4).prop_map(|(terms, k)| {
        let mut p = Poly::int(k);
        for (coef, a, b) in terms {
            let mut m = c(a).scale(&rat(coef));
            if let Some(b) = b {
                m = m.mul(&c(b));
            }
            p = p.add(&m);
        }
        p
    })
}

/// `k0 + k1*x + k2*y + ...` with constant or parameter coefficients.
fn linear_over(vars: &'static [&'static str], params: &'static [&'static str]) -> impl Strategy<Value = Poly> {
    let number = (-3i64..=3).prop_map(Poly::int);
    let (coef, k) = if params.is_empty() {
        (number.clone().boxed(), number.boxed())
    } else {
        (
            prop_oneof![3 => number, 1 => prop::sample::select(params.to_vec()).prop_map(c)].boxed(),
            poly_over(params).prop_filter("linear", |p| p.total_degree() <= 1).boxed(),
        )
    };
    (prop::collection::vec(coef, vars.len()), k).prop_map(move |(coefs, k)| {
        let mut p = k;
        for (q, v) in coefs.iter().zip(vars) {
            p = p.add(&q.mul(&c(v)));
        }
        p
    })
}

fn formula_from(atom: BoxedStrategy<Formula>) -> impl Strategy<Value = Formula> {
    atom.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn qf_formula() -> impl Strategy<Value = Formula> {
    formula_from((poly_over(&["x", "y", "z"]), rel()).prop_map(|(p, r)| Atom::make(p, r)).boxed())
}

fn valuation(names: &[&str]) -> impl Strategy<Value = BTreeMap<String, Rational>> {
    let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    prop::collection::vec(small_rational(), names.len()).prop_map(move |vs| names.iter().cloned().zip(vs).collect())
}

fn syms(names: &[&str]) -> BTreeSet<Sym> {
    names.iter().map(|n| Sym::Const(n.to_string())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_is_idempotent(p in poly_over(&["x", "y", "z"]), r in rel()) {
        let f = Atom::make(p, r);
        if let Formula::Atom(a) = &f {
            prop_assert_eq!(Atom::make(a.poly.clone(), a.rel), f.clone());
            let (k, _) = a.poly.primitive();
            prop_assert_eq!(k, rat(1));
        }
    }

    #[test]
    fn normalization_keeps_truth(p in poly_over(&["x", "y", "z"]), r in rel(), val in valuation(&["x", "y", "z"])) {
        let raw = Atom { poly: p.clone(), rel: r };
        let mut get = |s: &Sym| val.get(s.name()).cloned();
        prop_assert_eq!(raw.eval(&mut get), Atom::make(p, r).eval_consts(&val));
    }

    #[test]
    fn linear_split_reexpands(a in poly_over(&["y", "z"]), b in poly_over(&["y", "z"])) {
        let x = Sym::Const("x".into());
        let p = a.mul(&c("x")).add(&b);
        let (a2, b2) = p.as_linear_in(&x).unwrap();
        prop_assert_eq!(a2.mul(&c("x")).add(&b2), p);
    }

    #[test]
    fn substitutions_compose(f in qf_formula(), s1 in poly_over(&["y", "z"]), s2 in poly_over(&["z", "w"])) {
        let x = Sym::Const("x".into());
        let y = Sym::Const("y".into());
        let first = BTreeMap::from([(x.clone(), s1.clone())]);
        let second = BTreeMap::from([(y.clone(), s2.clone())]);
        let composed = BTreeMap::from([(x, s1.substitute(&second)), (y, s2)]);
        prop_assert_eq!(f.substitute(&first).substitute(&second), f.substitute(&composed));
    }

    #[test]
    fn printing_round_trips(f in qf_formula(), val in valuation(&["x", "y", "z"])) {
        let g = parse_formula(&f.to_string()).unwrap();
        prop_assert_eq!(parse_formula(&g.to_string()).unwrap(), g.clone());
        prop_assert_eq!(g.eval_consts(&val), f.eval_consts(&val));
    }

    #[test]
    fn closed_elimination_matches_evaluation(
        atoms in prop::collection::vec((linear_over(&["x"], &["k"]), rel()), 1..5),
    ) {
        // no parameters left once k is fixed: the result must be a truth value
        let k = BTreeMap::from([(Sym::Const("k".into()), Poly::int(2))]);
        let body = Formula::and(atoms.into_iter().map(|(p, r)| Atom::make(p.substitute(&k), r)));
        let closed = eliminate_quantifiers(&Formula::exists(vec!["x".into()], body.substitute(&BTreeMap::from([(
            Sym::Const("x".into()),
            Poly::var("x"),
        )]))))
        .unwrap();
        let want = numeric_fm_sat(&body, &BTreeMap::new()).unwrap();
        prop_assert!(closed == Formula::from_bool(want), "{} vs {}", closed, want);
    }
}

fn elimination_body() -> impl Strategy<Value = Formula> {
    let atom = (linear_over(&["x", "y"], &["a", "b"]), rel()).prop_map(|(p, r)| Atom::make(p, r)).boxed();
    formula_from(atom)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn elimination_agrees_with_fm(
        phi in elimination_body(),
        vals in prop::collection::vec(valuation(&["a", "b"]), 20),
    ) {
        let (res, order) = eliminate_all(&syms(&["x", "y"]), &phi).unwrap();
        prop_assert!(order.iter().all(|s| s.name() == "x" || s.name() == "y"));
        let left = res.constants();
        prop_assert!(!left.contains("x") && !left.contains("y"), "{}", res);
        for val in &vals {
            let got = res.eval_consts(val).unwrap();
            prop_assert_eq!(got, numeric_fm_sat(&phi, val).unwrap(), "{} at {:?}", res, val);
        }
    }

    #[test]
    fn simplification_is_equivalent_under_assumptions(
        phi in formula_from((linear_over(&["a", "b"], &[]), rel()).prop_map(|(p, r)| Atom::make(p, r)).boxed()),
        assm in prop::collection::vec((linear_over(&["a", "b"], &[]), rel()), 1..3),
    ) {
        let assm: Vec<Formula> = assm.into_iter().map(|(p, r)| Atom::make(p, r)).collect();
        let (s, _) = simplify(&phi, &assm).unwrap();
        let claim = Formula::implies(Formula::and(assm), Formula::iff(phi.clone(), s.clone()));
        prop_assert!(is_valid(&claim).unwrap(), "{} ~> {}", phi, s);
    }
}

const PROBLEM_HEAD: &str =
    "Extension_functions := {(f,1,1)}\nClauses :=\n(FORALL x). f(x) <= x;\n(FORALL x). x - _1 <= f(x);\nQuery :=\n";

fn query_literal() -> impl Strategy<Value = String> {
    let arg = prop::sample::select(vec!["a", "b", "c"]);
    let op = prop::sample::select(vec!["<", "<=", "=", ">=", ">"]);
    let k = 0i64..=2;
    prop_oneof![
        (arg.clone(), op.clone(), arg.clone()).prop_map(|(l, o, r)| format!("f({l}) {o} f({r})")),
        (arg.clone(), op.clone(), k.clone()).prop_map(|(l, o, k)| format!("f({l}) {o} _{k}")),
        (arg.clone(), op, arg).prop_map(|(l, o, r)| format!("{l} {o} {r}")),
    ]
}

fn query(lits: &[String]) -> String {
    let mut s = PROBLEM_HEAD.to_string();
    for l in lits {
        s.push_str(l);
        s.push_str("; ");
    }
    s
}

fn instances(text: &str) -> BTreeSet<String> {
    let rp = reduce_chain(&parse_problem(text).unwrap()).unwrap();
    rp.clauses.iter().filter(|g| matches!(g.source, Source::Instance { .. })).map(|g| g.original.to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn congruence_is_complete(lits in prop::collection::vec(query_literal(), 1..5)) {
        let rp = reduce_chain(&parse_problem(&query(&lits)).unwrap()).unwrap();
        let defs: Vec<_> = rp.store.iter().collect();
        let mut want = BTreeSet::new();
        for (i, a) in defs.iter().enumerate() {
            for b in &defs[i + 1..] {
                if a.function == b.function {
                    want.insert(BTreeSet::from([a.constant.clone(), b.constant.clone()]));
                }
            }
        }
        let got: Vec<BTreeSet<String>> =
            rp.congruence.iter().map(|k| BTreeSet::from([k.left.clone(), k.right.clone()])).collect();
        prop_assert_eq!(got.len(), want.len());
        prop_assert_eq!(got.into_iter().collect::<BTreeSet<_>>(), want);
    }

    #[test]
    fn more_goal_literals_keep_instances(
        lits in prop::collection::vec(query_literal(), 1..4),
        extra in query_literal(),
    ) {
        let before = instances(&query(&lits));
        let mut more = lits.clone();
        more.push(extra);
        let after = instances(&query(&more));
        prop_assert!(before.is_subset(&after));
    }

    #[test]
    fn reduced_models_give_function_models(lits in prop::collection::vec(query_literal(), 1..5)) {
        let spec = parse_problem(&query(&lits)).unwrap();
        let (res, rp) = check_sat(&spec).unwrap();
        let SatResult::Sat(Some(model)) = res else { return Ok(()) };
        let value = |p: &Poly| p.eval(&mut |s: &Sym| model.get(s.name()).cloned()).unwrap_or_else(|| rat(0));
        // equal arguments must get equal values, so f is a function
        let mut f: BTreeMap<Rational, Rational> = BTreeMap::new();
        for d in rp.store.iter() {
            let arg = value(&d.args[0]);
            // the witness names extension terms as printed
            let v = model.get(&d.term().to_string()).cloned().unwrap_or_else(|| rat(0));
            if let Some(old) = f.insert(arg.clone(), v.clone()) {
                prop_assert_eq!(old, v, "f({}) twice", arg);
            }
        }
        let mut eval = |s: &Sym| match s {
            Sym::App(_, args) => f.get(&value(&args[0])).cloned(),
            other => model.get(other.name()).cloned().or(Some(rat(0))),
        };
        for g in &rp.clauses {
            prop_assert_eq!(g.original.eval(&mut eval), Some(true), "{} under {:?}", g.original, model);
        }
    }
}

const LANES: &str = "family lanes\nindex: i\nvariables: pos\nparameters: dchange, dsafe\npointers: front, sidefront\n\
                     safe: pos(front(i)) - pos(i) >= dsafe\n";

proptest! {
    #[test]
    fn guards_exclusive_iff_disjoint(lo in -5i64..5, hi in -5i64..5) {
        let Model::Family(fam, _) = parse_model(LANES).unwrap() else { unreachable!() };
        let gap = "pos(sidefront(i)) - pos(i)";
        let guard = |s: String| parse_formula(&s).unwrap();
        let num = |k: i64| if k < 0 { format!("(_0 - _{})", -k) } else { format!("_{k}") };
        let rule = UpdateRule {
            name: "split".into(),
            cases: vec![
                UpdateCase::new("split", &guard(format!("{gap} > {}", num(hi))), &guard("post(front(i)) = sidefront(i)".into())).unwrap(),
                UpdateCase::new("split", &guard(format!("{gap} <= {}", num(lo))), &guard("post(front(i)) = front(i)".into())).unwrap(),
            ],
        };
        prop_assert_eq!(check_update_exclusivity(&fam, &rule).is_ok(), lo <= hi);
    }
}
