//! Parametric linear hybrid automata and the verification conditions that
//! make a safety property an inductive invariant.
//!
//! Automaton constraints are conjunctions of atoms over the continuous
//! variables. A derivative is written `dot(x)`, the value after a jump
//! `post(x)`. In the emitted problems every variable becomes a unary
//! extension function of time: `x(t0)` before, `x(t1)` after a flow or jump.

pub mod family;
pub mod file;

use std::collections::BTreeSet;

use crate::formula::{Atom, Formula, Poly, Rel, Sym, Term};
use crate::parser::{Clause, ExtFunction, Literal, Mode as TaskMode, ProblemSpec, Task, TaskOptions};

pub use family::{
    check_update_exclusivity, sflha_flow_vc, sflha_jump_vc, sflha_topology_vc, Family, Sensed, Sensing, UpdateCase,
    UpdateRule,
};
pub use file::{parse_model, Model};

pub const T0: &str = "t0";
pub const T1: &str = "t1";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HybridError {
    #[error("{what}: `{formula}` is not a conjunction of linear constraints")]
    NotConvex { what: String, formula: String },
    #[error("flow of mode {mode}: strict constraint `{atom}`")]
    StrictFlow { mode: String, atom: String },
    #[error("flow of mode {mode}: `{atom}` mentions the variable {var} outside a derivative")]
    FlowDependence { mode: String, atom: String, var: String },
    #[error("flow of mode {mode}: `{atom}` is not linear in the derivatives")]
    NonlinearFlow { mode: String, atom: String },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("update rule {rule}: {reason}")]
    UnsupportedUpdate { rule: String, reason: String },
    #[error("update rule {rule}: cases {a} and {b} can hold together")]
    OverlappingCases { rule: String, a: usize, b: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mode {
    pub name: String,
    pub inv: Vec<Atom>,
    pub init: Vec<Atom>,
    pub flow: Vec<Atom>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub from: String,
    pub to: String,
    pub guard: Vec<Atom>,
    pub jump: Vec<Atom>,
}

/// A parametric linear hybrid automaton.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Plha {
    pub name: String,
    pub variables: Vec<String>,
    /// Parametric constants and functions, the symbols constraints are
    /// generated for.
    pub parameters: Vec<String>,
    /// Constraints on the variables holding at every moment (`l >= 0`).
    pub axioms: Vec<Atom>,
    /// Parameter constraints used to simplify generated constraints; not
    /// part of the conditions themselves.
    pub assumptions: Vec<Formula>,
    pub modes: Vec<Mode>,
    pub edges: Vec<Edge>,
}

impl Plha {
    pub fn mode(&self, name: &str) -> Result<&Mode, HybridError> {
        self.modes.iter().find(|m| m.name == name).ok_or_else(|| HybridError::UnknownMode(name.to_string()))
    }

    pub fn edge(&self, name: &str) -> Result<&Edge, HybridError> {
        self.edges.iter().find(|e| e.name == name).ok_or_else(|| HybridError::UnknownEdge(name.to_string()))
    }

    fn is_var(&self, s: &Sym) -> bool {
        matches!(s, Sym::Const(c) if self.variables.contains(c))
    }
}

/// A verification condition: unsatisfiable iff the property is preserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vc {
    pub name: String,
    pub spec: ProblemSpec,
    pub parameters: Vec<String>,
}

impl Vc {
    /// A constraint-generation task for this condition.
    pub fn task(&self, assumptions: Vec<Formula>) -> Task {
        Task {
            name: self.name.clone(),
            mode: TaskMode::GenerateConstraints,
            solver: None,
            parameters: self.parameters.clone(),
            assumptions,
            options: TaskOptions::default(),
            problem: self.spec.clone(),
        }
    }
}

/// The atoms of a conjunction of non-disequational constraints.
pub fn conjuncts(f: &Formula, what: &str) -> Result<Vec<Atom>, HybridError> {
    let bad = || HybridError::NotConvex { what: what.to_string(), formula: f.to_string() };
    match f {
        Formula::True => Ok(Vec::new()),
        Formula::Atom(a) if a.rel != Rel::NE => Ok(vec![a.clone()]),
        Formula::And(xs) => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(conjuncts(x, what).map_err(|_| bad())?);
            }
            Ok(out)
        }
        _ => Err(bad()),
    }
}

/// Rejects atoms of degree above one in the symbols `is_var` accepts.
pub(crate) fn check_linear(atoms: &[Atom], what: &str, is_var: &dyn Fn(&Sym) -> bool) -> Result<(), HybridError> {
    for a in atoms {
        for (m, _) in a.poly.terms() {
            let d: u32 = m.factors().iter().filter(|(s, _)| is_var(s) || is_dot(s).is_some()).map(|(_, e)| e).sum();
            if d > 1 {
                return Err(HybridError::NotConvex {
                    what: what.to_string(),
                    formula: Formula::Atom(a.clone()).to_string(),
                });
            }
        }
    }
    Ok(())
}

fn is_dot(s: &Sym) -> Option<&Poly> {
    match s {
        Sym::App(n, args) if n == "dot" && args.len() == 1 => Some(&args[0]),
        _ => None,
    }
}

fn single_sym(p: &Poly) -> Option<&Sym> {
    let mut it = p.terms();
    let (m, c) = it.next()?;
    if it.next().is_some() || *c != crate::formula::rat(1) {
        return None;
    }
    match m.factors() {
        [(s, 1)] => Some(s),
        _ => None,
    }
}

/// Which copy of the state a variable refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum State {
    Pre,
    Post,
}

/// Replaces variables by their pre- or post-state terms. `post(x)` always
/// denotes the post-state.
pub(crate) fn at_state(
    a: &Atom,
    st: State,
    is_var: &dyn Fn(&Sym) -> bool,
    at: &dyn Fn(&Sym, State) -> Poly,
) -> Formula {
    // primes first: the rewrite is bottom-up and would map `x` inside `post(x)`
    let p = a.poly.substitute_with(&mut |s| match s {
        Sym::App(n, args) if n == "post" && args.len() == 1 => {
            single_sym(&args[0]).filter(|x| is_var(x)).map(|x| at(x, State::Post))
        }
        _ => None,
    });
    let p = p.substitute_with(&mut |s| is_var(s).then(|| at(s, st)));
    Atom::make(p, a.rel)
}

/// Turns each flow conjunct `sum c_i dot(x_i) rel c` into
/// `sum c_i (x_i(t1) - x_i(t0)) rel c (t1 - t0)`.
pub(crate) fn underline(
    mode: &str,
    flow: &[Atom],
    is_var: &dyn Fn(&Sym) -> bool,
    at: &dyn Fn(&Sym, State) -> Poly,
    dt: &Poly,
) -> Result<Vec<Formula>, HybridError> {
    let mut out = Vec::new();
    for a in flow {
        let shown = || Formula::Atom(a.clone()).to_string();
        if a.rel.is_strict() || a.rel == Rel::NE {
            return Err(HybridError::StrictFlow { mode: mode.to_string(), atom: shown() });
        }
        let mut p = Poly::zero();
        for (m, c) in a.poly.terms() {
            let mut dots = Vec::new();
            let mut rest = Poly::constant(c.clone());
            for (s, e) in m.factors() {
                if let Some(x) = is_dot(s) {
                    let x = single_sym(x).filter(|x| is_var(x));
                    match x {
                        Some(x) if *e == 1 => dots.push(x.clone()),
                        _ => return Err(HybridError::NonlinearFlow { mode: mode.to_string(), atom: shown() }),
                    }
                } else if is_var(s) {
                    return Err(HybridError::FlowDependence {
                        mode: mode.to_string(),
                        atom: shown(),
                        var: s.to_string(),
                    });
                } else {
                    for _ in 0..*e {
                        rest = rest.mul(&Poly::sym(s.clone()));
                    }
                }
            }
            match dots.as_slice() {
                [] => p = p.add(&rest.mul(dt)),
                [x] => p = p.add(&rest.mul(&at(x, State::Post).sub(&at(x, State::Pre)))),
                _ => return Err(HybridError::NonlinearFlow { mode: mode.to_string(), atom: shown() }),
            }
        }
        out.push(Atom::make(p, a.rel));
    }
    Ok(out)
}

fn time(t: &str) -> Poly {
    Poly::cnst(t)
}

fn plha_at(x: &Sym, st: State) -> Poly {
    let t = match st {
        State::Pre => T0,
        State::Post => T1,
    };
    Poly::app(x.name(), vec![time(t)])
}

/// The discretized flow of `mode` between `t0` and `t1`, as a conjunction.
pub fn underline_flow(plha: &Plha, mode: &str, t0: &str, t1: &str) -> Result<Formula, HybridError> {
    let m = plha.mode(mode)?;
    let at = |x: &Sym, st: State| Poly::app(x.name(), vec![time(if st == State::Pre { t0 } else { t1 })]);
    let dt = time(t1).sub(&time(t0));
    Ok(Formula::and(underline(mode, &m.flow, &|s| plha.is_var(s), &at, &dt)?))
}

/// `lhs rel rhs` with the negative monomials of `a` moved to the right.
pub fn atom_literal(a: &Atom) -> Literal {
    let (pos, neg): (Vec<_>, Vec<_>) =
        a.poly.terms().map(|(m, c)| (m.clone(), c.clone())).partition(|(_, c)| *c > num_traits::Zero::zero());
    let lhs = Poly::from_terms(pos);
    let rhs = Poly::from_terms(neg).neg();
    Literal { lhs: Term::from_poly(&lhs), rel: a.rel, rhs: Term::from_poly(&rhs) }
}

/// Literals of a conjunction; `false` becomes `0 < 0`.
pub(crate) fn literals(f: &Formula) -> Vec<Literal> {
    match f {
        Formula::True => Vec::new(),
        Formula::Atom(a) => vec![atom_literal(a)],
        Formula::And(xs) => xs.iter().flat_map(literals).collect(),
        _ => vec![Literal {
            lhs: Term::Num(num_traits::Zero::zero()),
            rel: Rel::LT,
            rhs: Term::Num(num_traits::Zero::zero()),
        }],
    }
}

/// Builds a problem: declarations are derived from what occurs.
#[derive(Default)]
pub(crate) struct SpecBuilder {
    pub levels: Vec<(String, u32)>,
    pub clauses: Vec<Clause>,
    pub query: Vec<Literal>,
}

impl SpecBuilder {
    /// Adds `neg`, the negation of a convex property: a single literal goes
    /// into the query, several become one ground disjunctive clause.
    pub fn negated(&mut self, phi: &[Formula]) {
        let neg: Vec<Literal> = phi
            .iter()
            .filter_map(|f| match Formula::not(f.clone()).nnf() {
                Formula::Atom(a) => Some(atom_literal(&a)),
                Formula::False => None,
                _ => Some(Literal {
                    lhs: Term::Num(num_traits::Zero::zero()),
                    rel: Rel::EQ,
                    rhs: Term::Num(num_traits::Zero::zero()),
                }),
            })
            .collect();
        match neg.len() {
            0 => self.query.push(literals(&Formula::False).remove(0)),
            1 => self.query.extend(neg),
            _ => self.clauses.push(Clause::new(Vec::new(), Vec::new(), neg)),
        }
    }

    pub fn build(self) -> ProblemSpec {
        let mut spec = ProblemSpec::default();
        spec.signature.base_functions =
            ["-", "+", "*"].iter().map(|o| vec![o.to_string(), "2".into(), "0".into(), "real".into()]).collect();
        spec.signature.relations = ["<", "<=", ">", ">="].iter().map(|r| (r.to_string(), 2)).collect();
        spec.clauses = self.clauses;
        spec.query = self.query;
        let mut used = BTreeSet::new();
        for l in spec.clauses.iter().flat_map(|c| c.literals()).chain(&spec.query) {
            crate::parser::problem::collect_apps(&l.lhs, &mut used);
            crate::parser::problem::collect_apps(&l.rhs, &mut used);
        }
        let mut levels = self.levels;
        levels.sort_by_key(|(_, l)| *l);
        spec.signature.extension = levels
            .into_iter()
            .filter(|(n, _)| used.contains(n))
            .map(|(name, level)| ExtFunction { name, arity: 1, level, sort: None })
            .collect();
        spec.signature.constants = spec.constant_names().into_iter().map(|c| (c, "real".to_string())).collect();
        spec
    }
}

fn plha_spec(plha: &Plha) -> SpecBuilder {
    let mut b = SpecBuilder { levels: plha.variables.iter().map(|v| (v.clone(), 1)).collect(), ..Default::default() };
    for a in &plha.axioms {
        let f = at_state(a, State::Pre, &|s| plha.is_var(s), &|x, _| Poly::app(x.name(), vec![Poly::var("t")]));
        for l in literals(&f) {
            b.clauses.push(Clause::new(vec!["t".into()], Vec::new(), vec![l]));
        }
    }
    b
}

fn states(plha: &Plha, atoms: &[Atom], st: State) -> Vec<Formula> {
    atoms.iter().map(|a| at_state(a, st, &|s| plha.is_var(s), &plha_at)).collect()
}

fn vc(name: String, plha: &Plha, b: SpecBuilder) -> Vc {
    Vc { name, spec: b.build(), parameters: plha.parameters.clone() }
}

fn check_property(plha: &Plha, phi: &[Atom]) -> Result<(), HybridError> {
    check_linear(phi, "safety property", &|s| plha.is_var(s))
}

/// `Init_q and not phi`.
pub fn vc_init(plha: &Plha, phi: &[Atom], mode: &str) -> Result<Vc, HybridError> {
    check_property(plha, phi)?;
    let m = plha.mode(mode)?;
    let mut b = plha_spec(plha);
    for f in states(plha, &m.init, State::Pre) {
        b.query.extend(literals(&f));
    }
    b.negated(&states(plha, phi, State::Pre));
    Ok(vc(format!("init-{mode}"), plha, b))
}

/// `t0 < t1`, phi and `Inv_q` at `t0`, the discretized flow, `Inv_q` and
/// `not phi` at `t1`.
pub fn vc_flow(plha: &Plha, phi: &[Atom], mode: &str) -> Result<Vc, HybridError> {
    check_property(plha, phi)?;
    let m = plha.mode(mode)?;
    let mut b = plha_spec(plha);
    b.query.extend(literals(&Atom::compare(&time(T0), Rel::LT, &time(T1))));
    for f in states(plha, phi, State::Pre).into_iter().chain(states(plha, &m.inv, State::Pre)) {
        b.query.extend(literals(&f));
    }
    let dt = time(T1).sub(&time(T0));
    for f in underline(mode, &m.flow, &|s| plha.is_var(s), &plha_at, &dt)? {
        b.query.extend(literals(&f));
    }
    for f in states(plha, &m.inv, State::Post) {
        b.query.extend(literals(&f));
    }
    b.negated(&states(plha, phi, State::Post));
    Ok(vc(format!("flow-{mode}"), plha, b))
}

/// phi, `guard_e` and `jump_e` before the jump (`t0`), `Inv` of the target
/// mode and `not phi` after it (`t1`).
pub fn vc_jump(plha: &Plha, phi: &[Atom], edge: &str) -> Result<Vc, HybridError> {
    check_property(plha, phi)?;
    let e = plha.edge(edge)?;
    let target = plha.mode(&e.to)?;
    let mut b = plha_spec(plha);
    let pre = states(plha, phi, State::Pre).into_iter().chain(states(plha, &e.guard, State::Pre));
    for f in pre.chain(states(plha, &e.jump, State::Pre)).chain(states(plha, &target.inv, State::Post)) {
        b.query.extend(literals(&f));
    }
    b.negated(&states(plha, phi, State::Post));
    Ok(vc(format!("jump-{edge}"), plha, b))
}

/// Every condition of the inductive-invariant check, init and flow per mode
/// then jump per edge.
pub fn all_vcs(plha: &Plha, phi: &[Atom]) -> Result<Vec<Vc>, HybridError> {
    let mut out = Vec::new();
    for m in &plha.modes {
        out.push(vc_init(plha, phi, &m.name)?);
    }
    for m in &plha.modes {
        out.push(vc_flow(plha, phi, &m.name)?);
    }
    for e in &plha.edges {
        out.push(vc_jump(plha, phi, &e.name)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elim::{check_sat, generate_constraint, SatResult};
    use crate::locality::reduce_chain;
    use crate::parser::{parse_formula, parse_problem};
    use crate::qe::is_valid;

    pub(crate) const TANK: &str = include_str!("../../models/water_tank.ha");

    fn tank() -> (Plha, Vec<Atom>) {
        match parse_model(TANK).unwrap() {
            Model::Automaton(p, phi) => (p, phi),
            _ => unreachable!(),
        }
    }

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn underline_of_tank_flows() {
        let (p, _) = tank();
        let got = underline_flow(&p, "s1", "t0", "t").unwrap();
        assert_eq!(got, f("l(t) - l(t0) = (i - o)*(t - t0)"));
        assert_eq!(underline_flow(&p, "s2", "t0", "t").unwrap(), f("l(t) - l(t0) = i*(t - t0)"));
        let mut q = p.clone();
        q.modes[0].flow.clear();
        assert_eq!(underline_flow(&q, "s1", "t0", "t1").unwrap(), Formula::True);
    }

    #[test]
    fn flow_shape_errors() {
        let (mut p, _) = tank();
        p.modes[0].flow = conjuncts(&f("dot(l) < i"), "flow").unwrap();
        assert!(matches!(underline_flow(&p, "s1", "t0", "t1"), Err(HybridError::StrictFlow { .. })));
        p.modes[0].flow = conjuncts(&f("dot(l) <= l"), "flow").unwrap();
        assert!(matches!(underline_flow(&p, "s1", "t0", "t1"), Err(HybridError::FlowDependence { .. })));
        p.modes[0].flow = conjuncts(&f("dot(l)*dot(l) <= i"), "flow").unwrap();
        assert!(matches!(underline_flow(&p, "s1", "t0", "t1"), Err(HybridError::NonlinearFlow { .. })));
    }

    #[test]
    fn flow_vc_is_the_listed_problem() {
        let (p, phi) = tank();
        let vc = vc_flow(&p, &phi, "s1").unwrap();
        let listed = parse_problem(
            "Extension_functions := {(l, 1, 1)}
Clauses := (FORALL t). l(t) >= _0;
Query := t0 < t1; l(t0) <= lo; l(t0) >= la; l(t1) = l(t0) + ((i - o)*(t1 - t0)); l(t1) >= la; l(t1) > lo;",
        )
        .unwrap();
        assert_eq!(vc.spec.query_formulas(), listed.query_formulas());
        assert_eq!(vc.spec.clauses, listed.clauses);
        // printed form parses back to the same problem
        assert_eq!(parse_problem(&vc.spec.to_string()).unwrap(), vc.spec);
    }

    #[test]
    fn jump_vcs_unsat() {
        let (p, phi) = tank();
        for e in ["e1", "e2"] {
            let vc = vc_jump(&p, &phi, e).unwrap();
            let q: Vec<String> = vc.spec.query.iter().map(|l| l.to_string()).collect();
            assert!(q.contains(&"l(t1) = l(t0)".to_string()) || q.contains(&"l(t0) = l(t1)".to_string()), "{q:?}");
            assert_eq!(check_sat(&vc.spec).unwrap().0, SatResult::Unsat);
            assert_eq!(generate_constraint(&vc.task(Vec::new())).unwrap().formula, Formula::True);
        }
    }

    #[test]
    fn init_synthesis() {
        let (p, phi) = tank();
        let la_pos = f("la > _0");
        let c1 = generate_constraint(&vc_init(&p, &phi, "s1").unwrap().task(vec![la_pos.clone()])).unwrap();
        assert!(is_valid(&Formula::implies(
            la_pos.clone(),
            Formula::iff(c1.formula.clone(), f("OR(l1 <= lo, l1 < la)"))
        ))
        .unwrap());
        let c2 = generate_constraint(&vc_init(&p, &phi, "s2").unwrap().task(vec![la_pos.clone()])).unwrap();
        // the axiom l >= 0 adds the disjunct l2 < 0
        let want2 = f("OR(l2 <= lo, l2 >= la, l2 < _0)");
        assert!(is_valid(&Formula::iff(c2.formula.clone(), want2)).unwrap(), "{}", c2.formula);
        let inv = Formula::and([f("l1 >= la"), f("l2 < la"), f("l2 >= _0")]);
        let both = Formula::and([c1.formula, c2.formula]);
        assert!(is_valid(&Formula::implies(inv, Formula::iff(both, f("AND(l1 <= lo, l2 <= lo)")))).unwrap());
    }

    #[test]
    fn flow_vc_reduces_to_purified_system() {
        let (p, phi) = tank();
        let rp = reduce_chain(&vc_flow(&p, &phi, "s2").unwrap().spec).unwrap();
        assert!(rp.clauses.iter().all(|c| c.purified.functions().is_empty()));
        let got: BTreeSet<Formula> = rp.clauses.iter().map(|c| c.original.clone()).collect();
        let want: BTreeSet<Formula> = [
            "l(t0) <= lo",
            "t0 < t1",
            "l(t0) < la",
            "l(t1) - l(t0) = i*(t1 - t0)",
            "l(t1) < la",
            "l(t1) > lo",
            "l(t0) >= _0",
            "l(t1) >= _0",
        ]
        .iter()
        .map(|s| f(s))
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn multi_atom_property_becomes_clause() {
        let (p, _) = tank();
        let phi = conjuncts(&f("AND(l <= lo, l >= _0)"), "safe").unwrap();
        let vc = vc_init(&p, &phi, "s1").unwrap();
        assert_eq!(vc.spec.clauses.len(), 2);
        assert_eq!(vc.spec.clauses[1].head.len(), 2);
        assert!(vc_init(&p, &conjuncts(&f("l*l <= lo"), "safe").unwrap(), "s1").is_err());
    }

    #[test]
    fn all_conditions() {
        let (p, phi) = tank();
        let names: Vec<String> = all_vcs(&p, &phi).unwrap().into_iter().map(|v| v.name).collect();
        assert_eq!(names, ["init-s1", "init-s2", "flow-s1", "flow-s2", "jump-e1", "jump-e2"]);
        assert!(matches!(vc_flow(&p, &phi, "s3"), Err(HybridError::UnknownMode(_))));
    }
}
