//! Symbol elimination: from a task to the weakest universal constraint on
//! its parameters, and satisfiability checking of a task's problem.
//!
//! The pipeline is reduce (locality), classify constants, eliminate the
//! non-parameter constants, substitute parameter terms back, negate and
//! close universally, then simplify under the task's assumptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use crate::formula::{Formula, Poly, Rational, Sym, Term};
use crate::locality::{reduce_chain, LocalityError, ReducedProblem};
use crate::parser::{Clause, ProblemSpec, Task};
use crate::qe::{eliminate_all, find_model, instantiate_universal, simplify, simplify_basic, ModelSearch, QeError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ElimError {
    #[error(transparent)]
    Locality(#[from] LocalityError),
    #[error(transparent)]
    Qe(#[from] QeError),
    #[error("parameter `{function}` is applied to `{argument}`, which is not a parameter or an eliminable constant")]
    ParameterArgument { function: String, argument: String },
}

/// The three-way split of the reduced problem's constants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConstantClassification {
    /// Parameter constants and constants defined as parameter terms.
    pub c_f: BTreeSet<String>,
    /// Constants occurring as arguments of parameter terms.
    pub c_p: BTreeSet<String>,
    /// Everything else; eliminated.
    pub c: BTreeSet<String>,
}

/// Which symbols count as parameters during classification.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Parameters {
    pub constants: BTreeSet<String>,
    pub functions: BTreeSet<String>,
}

/// Splits the constants of `rp` per the parameter set.
pub fn classify_constants(rp: &ReducedProblem, params: &Parameters) -> Result<ConstantClassification, ElimError> {
    let all = rp.constants();
    let mut out = ConstantClassification::default();
    for c in &all {
        match rp.store.get(c) {
            Some(d) if params.functions.contains(&d.function) => {
                out.c_f.insert(c.clone());
            }
            Some(_) => {}
            None if params.constants.contains(c) => {
                out.c_f.insert(c.clone());
            }
            None => {}
        }
    }
    for c in out.c_f.clone() {
        let Some(d) = rp.store.get(&c) else { continue };
        for a in &d.args {
            let mut syms = BTreeSet::new();
            a.syms_deep(&mut syms);
            for s in syms {
                let Sym::Const(k) = s else { continue };
                if out.c_f.contains(&k) {
                    continue;
                }
                if rp.store.is_definition(&k) {
                    let arg = rp.store.back_substitute_poly(a).to_string();
                    return Err(ElimError::ParameterArgument { function: d.function.clone(), argument: arg });
                }
                out.c_p.insert(k);
            }
        }
    }
    out.c = all.into_iter().filter(|c| !out.c_f.contains(c) && !out.c_p.contains(c)).collect();
    Ok(out)
}

/// Switches for [`generate_constraint_with`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElimOptions {
    pub simplify: bool,
    pub keep_assumption_symbols: bool,
    pub assumptions_in_elimination: bool,
    /// Parameter functions given only by explicit definitions are eliminated.
    pub eliminate_defined_parameters: bool,
}

impl Default for ElimOptions {
    fn default() -> Self {
        ElimOptions {
            simplify: true,
            keep_assumption_symbols: false,
            assumptions_in_elimination: true,
            eliminate_defined_parameters: true,
        }
    }
}

impl From<&crate::parser::TaskOptions> for ElimOptions {
    fn from(o: &crate::parser::TaskOptions) -> Self {
        ElimOptions {
            simplify: o.simplify,
            keep_assumption_symbols: o.keep_assumption_symbols,
            assumptions_in_elimination: o.assumptions_in_elimination,
            ..Default::default()
        }
    }
}

/// One timed step, with optional counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub name: &'static str,
    pub time: Duration,
    pub counters: Vec<(&'static str, usize)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Statistics {
    pub steps: Vec<Step>,
}

impl Statistics {
    fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let r = f();
        self.steps.push(Step { name, time: start.elapsed(), counters: Vec::new() });
        r
    }

    fn count(&mut self, key: &'static str, n: usize) {
        if let Some(s) = self.steps.last_mut() {
            s.counters.push((key, n));
        }
    }

    pub fn total(&self) -> Duration {
        self.steps.iter().map(|s| s.time).sum()
    }

    pub fn counter(&self, key: &str) -> Option<usize> {
        self.steps.iter().flat_map(|s| &s.counters).find(|(k, _)| *k == key).map(|(_, n)| *n)
    }
}

/// `∀ȳ Γ(ȳ)` plus how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintResult {
    pub task: String,
    pub formula: Formula,
    pub classification: ConstantClassification,
    /// Parameter functions whose definition constants were eliminated.
    pub defined_parameters: BTreeSet<String>,
    /// Clauses over parameters only, used as simplification context.
    pub parameter_axioms: Vec<Formula>,
    pub reduced: ReducedProblem,
    pub stats: Statistics,
}

impl fmt::Display for ConstraintResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)
    }
}

fn apps_of(c: &Clause) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for l in c.literals() {
        crate::parser::problem::collect_apps(&l.lhs, &mut out);
        crate::parser::problem::collect_apps(&l.rhs, &mut out);
    }
    out
}

fn is_definition_of(c: &Clause, f: &str) -> bool {
    let [h] = c.head.as_slice() else { return false };
    if h.rel != crate::formula::Rel::EQ {
        return false;
    }
    let pattern =
        |t: &Term| matches!(t, Term::App(n, args) if n == f && args.iter().all(|a| matches!(a, Term::Var(_))));
    let mentions = |t: &Term| {
        let mut s = BTreeSet::new();
        crate::parser::problem::collect_apps(t, &mut s);
        s.contains(f)
    };
    let guard_free = c.guard.iter().all(|l| !mentions(&l.lhs) && !mentions(&l.rhs));
    guard_free && ((pattern(&h.lhs) && !mentions(&h.rhs)) || (pattern(&h.rhs) && !mentions(&h.lhs)))
}

/// Parameter functions whose every clause at their own level is an
/// explicit definition `f(x̄) = t`.
pub fn defined_parameters(spec: &ProblemSpec, functions: &BTreeSet<String>) -> BTreeSet<String> {
    functions
        .iter()
        .filter(|f| {
            let Some(level) = spec.level_of(f) else { return false };
            let own: Vec<&Clause> =
                spec.clauses.iter().filter(|c| spec.clause_level(c) == level && apps_of(c).contains(*f)).collect();
            !own.is_empty() && own.iter().all(|c| is_definition_of(c, f))
        })
        .cloned()
        .collect()
}

/// Runs symbol elimination on `task` with its own options.
pub fn generate_constraint(task: &Task) -> Result<ConstraintResult, ElimError> {
    generate_constraint_with(task, &ElimOptions::from(&task.options))
}

pub fn generate_constraint_with(task: &Task, opts: &ElimOptions) -> Result<ConstraintResult, ElimError> {
    let mut stats = Statistics::default();
    let spec = &task.problem;
    let ext: BTreeSet<String> = spec.signature.extension.iter().map(|e| e.name.clone()).collect();
    let mut params = Parameters::default();
    for p in &task.parameters {
        if ext.contains(p) {
            params.functions.insert(p.clone());
        } else {
            params.constants.insert(p.clone());
        }
    }
    let defined =
        if opts.eliminate_defined_parameters { defined_parameters(spec, &params.functions) } else { BTreeSet::new() };
    params.functions.retain(|f| !defined.contains(f));
    if opts.keep_assumption_symbols {
        for a in &task.assumptions {
            params.constants.extend(a.constants());
        }
    }

    // clauses over parameters only are context, not part of the reduction
    let mut reduced_spec = spec.clone();
    let (kp, rest): (Vec<Clause>, Vec<Clause>) = spec.clauses.iter().cloned().partition(|c| {
        let a = apps_of(c);
        !a.is_empty() && a.is_subset(&params.functions)
    });
    reduced_spec.clauses = rest;
    let parameter_axioms: Vec<Formula> = kp.iter().map(Clause::to_formula).collect();

    let rp = stats.time("reduction", || reduce_chain(&reduced_spec))?;
    stats.count("definitions", rp.store.len());
    let class = stats.time("classification", || classify_constants(&rp, &params))?;

    let mut g1 = rp.formulas();
    if opts.assumptions_in_elimination {
        g1.extend(assumption_instances(&rp, &task.assumptions));
    }
    let g1 = Formula::and(g1);
    let elim: BTreeSet<Sym> = class.c.iter().map(|c| Sym::Const(c.clone())).collect();
    let gamma1 = stats.time("quantifier elimination", || eliminate_all(&elim, &g1))?.0;
    stats.count("num_atoms_before", g1.num_atoms());
    stats.count("num_atoms_after", gamma1.num_atoms());

    let (gamma2, negated) = stats.time("back-substitution", || {
        let g2 = rp.store.back_substitute(&gamma1);
        let neg = simplify_basic(&Formula::not(g2.clone()).nnf());
        (g2, neg)
    });
    let _ = gamma2;

    let mut context = task.assumptions.clone();
    context.extend(parameter_axioms.iter().cloned());
    let before = negated.num_atoms();
    let body = if opts.simplify { stats.time("simplification", || simplify(&negated, &context))?.0 } else { negated };
    stats.count("num_atoms_formula_before_assumptions", before);
    stats.count("num_atoms_formula_after_assumptions", body.num_atoms());

    let formula = generalize(&body, &class.c_p);
    Ok(ConstraintResult {
        task: task.name.clone(),
        formula,
        classification: class,
        defined_parameters: defined,
        parameter_axioms,
        reduced: rp,
        stats,
    })
}

/// Ground instances of the assumptions over the reduced problem's
/// definitions, in purified form.
fn assumption_instances(rp: &ReducedProblem, assumptions: &[Formula]) -> Vec<Formula> {
    let back = definition_terms(rp);
    let terms: BTreeSet<Sym> = back.keys().cloned().collect();
    assumptions
        .iter()
        .flat_map(|a| instantiate_universal(a, &terms))
        .map(|f| {
            f.substitute_with(&mut |s| match s {
                Sym::App(..) => back.get(s).map(|c| Poly::cnst(c)),
                _ => None,
            })
        })
        .collect()
}

/// Each definition's term, arguments expanded, mapped to its constant.
fn definition_terms(rp: &ReducedProblem) -> BTreeMap<Sym, String> {
    let mut back = BTreeMap::new();
    for d in rp.store.iter() {
        let args = d.args.iter().map(|a| rp.store.back_substitute_poly(a)).collect();
        back.insert(Sym::App(d.function.clone(), args), d.constant.clone());
    }
    back
}

/// Turns the constants `c_p` into universally quantified variables.
fn generalize(body: &Formula, c_p: &BTreeSet<String>) -> Formula {
    let present = body.constants();
    let vars: Vec<String> = c_p.iter().filter(|c| present.contains(*c)).cloned().collect();
    if vars.is_empty() {
        return body.clone();
    }
    let map: BTreeMap<Sym, Poly> = vars.iter().map(|v| (Sym::Const(v.clone()), Poly::var(v))).collect();
    Formula::forall(vars, body.substitute(&map))
}

/// Outcome of [`check_sat`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Unsat,
    /// Satisfiable, with a witness over constants and extension terms when
    /// one could be built.
    Sat(Option<BTreeMap<String, Rational>>),
}

/// Decides satisfiability of the task's problem (all clauses and the query).
pub fn check_sat(spec: &ProblemSpec) -> Result<(SatResult, ReducedProblem), ElimError> {
    let rp = reduce_chain(spec)?;
    let res = match find_model(&rp.conjunction())? {
        ModelSearch::Unsat => SatResult::Unsat,
        ModelSearch::Sat(None) => SatResult::Sat(None),
        ModelSearch::Sat(Some(m)) => {
            let mut out = BTreeMap::new();
            for (s, v) in m {
                let Sym::Const(c) = s else { continue };
                let key = match rp.store.expand(&c) {
                    Some(t) => t.to_string(),
                    None => c,
                };
                out.insert(key, v);
            }
            SatResult::Sat(Some(out))
        }
    };
    Ok((res, rp))
}

/// The reduced problem together with the constraint's instance at the
/// `c_p` constants and the ground instances of the assumptions and
/// parameter axioms, all over the purified constants.
pub fn recheck_formula(task: &Task, r: &ConstraintResult) -> Formula {
    let mut extra = task.assumptions.clone();
    extra.extend(r.parameter_axioms.iter().cloned());
    let mut g = r.reduced.formulas();
    g.extend(assumption_instances(&r.reduced, &extra));
    let back = definition_terms(&r.reduced);
    g.push(open_universal(&r.formula).substitute_with(&mut |s| match s {
        Sym::App(..) => back.get(s).map(|c| Poly::cnst(c)),
        _ => None,
    }));
    Formula::and(g)
}

/// Re-checks a generated constraint: [`recheck_formula`] must be
/// unsatisfiable.
pub fn recheck(task: &Task, r: &ConstraintResult) -> Result<SatResult, ElimError> {
    Ok(match find_model(&recheck_formula(task, r))? {
        ModelSearch::Unsat => SatResult::Unsat,
        ModelSearch::Sat(_) => SatResult::Sat(None),
    })
}

/// Drops outer universal quantifiers, turning each bound variable into a
/// constant of the same name. Used to compare constraints over `c_p`.
pub fn open_universal(f: &Formula) -> Formula {
    let mut cur = f.clone();
    while let Formula::Forall(vs, body) = cur {
        let map: BTreeMap<Sym, Poly> = vs.iter().map(|v| (Sym::Var(v.clone()), Poly::cnst(v))).collect();
        cur = body.substitute(&map);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_problem, parse_tasks};
    use crate::qe::is_valid;

    fn tasks(src: &str) -> Vec<Task> {
        parse_tasks(src).unwrap()
    }

    /// Equivalence under the task's assumptions, with `c_p` opened up.
    fn equivalent(t: &Task, got: &Formula, want: &str) -> bool {
        let want = open_universal(&parse_formula(want).unwrap());
        let ctx = Formula::and(t.assumptions.iter().map(open_universal));
        is_valid(&Formula::implies(ctx, Formula::iff(open_universal(got), want))).unwrap()
    }

    #[test]
    fn bounded_slopes() {
        let ts = tasks(include_str!("../../tasks/bounded_slopes.yaml"));
        let r = generate_constraint(&ts[0]).unwrap();
        let cl = &r.classification;
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(cl.c_f, set(&["M!1", "m!1"]));
        assert_eq!(cl.c_p, set(&["c"]));
        assert_eq!(cl.c, set(&["L!1", "L1!1", "lmax", "t"]));
        assert!(matches!(&r.formula, Formula::Forall(vs, _) if vs == &["c".to_string()]));
        assert!(equivalent(&ts[0], &r.formula, "OR(m(c) - M(c) > _0, M(c) <= _0)"));

        let r = generate_constraint(&ts[1]).unwrap();
        assert_eq!(r.parameter_axioms.len(), 1);
        assert!(equivalent(&ts[1], &r.formula, "M(c) <= _0"));
    }

    #[test]
    fn water_tank_s1() {
        let ts = tasks(include_str!("../../tasks/water_tank_flow_s1.yaml"));
        let r = generate_constraint(&ts[0]).unwrap();
        assert!(equivalent(&ts[0], &r.formula, "OR(la - lo >= _0, i - o <= _0)"));
        let r = generate_constraint(&ts[1]).unwrap();
        assert!(equivalent(&ts[1], &r.formula, "i - o <= _0"));
        assert!(r.stats.counter("num_atoms_formula_after_assumptions").is_some());
    }

    #[test]
    fn lane_change() {
        let ts = tasks(include_str!("../../tasks/lane_change.yaml"));
        let r = generate_constraint(&ts[0]).unwrap();
        assert!(equivalent(&ts[0], &r.formula, "dchange - dsafe >= _0"));
        let r = generate_constraint(&ts[1]).unwrap();
        assert_eq!(r.classification.c_p, ["i0".to_string()].into_iter().collect());
        assert!(equivalent(&ts[1], &r.formula, "(FORALL i0). dsafe - dchange(i0) <= _0"));
    }

    #[test]
    fn no_parameters_means_everything_eliminated() {
        let src = include_str!("../../tasks/bounded_slopes.yaml").replace("parameter: [m, M]", "parameter: []");
        let r = generate_constraint(&tasks(&src)[0]).unwrap();
        assert!(r.classification.c_f.is_empty() && r.classification.c_p.is_empty());
        // the goal is satisfiable, so no constraint excludes it
        assert_eq!(r.formula, Formula::False);
    }

    #[test]
    fn unsat_goal() {
        let spec = parse_problem("Clauses :=\nQuery := _0 < _0;").unwrap();
        assert_eq!(check_sat(&spec).unwrap().0, SatResult::Unsat);
    }

    #[test]
    fn witness_satisfies_query() {
        let spec = parse_problem("Extension_functions := {(l,1,1)}\nClauses := (FORALL t). l(t) >= _0;\nQuery := t0 < t1; l(t1) > l(t0) + _1;").unwrap();
        let (res, _) = check_sat(&spec).unwrap();
        let SatResult::Sat(Some(m)) = res else { panic!("expected a witness") };
        let get = |k: &str| m[k].clone();
        assert!(get("t0") < get("t1"));
        assert!(get("l(t1)") > get("l(t0)") + crate::formula::rat(1));
    }
}
