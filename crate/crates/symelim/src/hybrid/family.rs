//! Families of similar automata indexed by a scalar sort, linked through
//! neighbour pointers and linking clauses.
//!
//! Component constraints mention the index as the constant named by
//! [`Family::index`], variables as unary applications `x(i)`. In the emitted
//! problems `x(i)` is the state at `t0` (or before a jump) and `xp(i)` the
//! state after; the negated property is Skolemized with a fresh `i0`.

use std::collections::{BTreeMap, BTreeSet};

use super::{at_state, check_linear, literals, underline, Edge, HybridError, Plha, SpecBuilder, State, Vc, T0, T1};
use crate::formula::{Atom, Formula, Poly, Rel, Sym};
use crate::locality::{purify_formula, DefinitionStore};
use crate::parser::{Clause, Literal};
use crate::qe::is_valid;

/// How `x_p(i)`, the value of `x` at the neighbour `p(i)`, is observed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Sensing {
    /// Always the current value of `x(p(i))`.
    #[default]
    Current,
    /// The value sensed at the last update of `p`; updates refresh it.
    LastUpdate,
}

/// `var(i)` observes `source(pointer(i))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sensed {
    pub var: String,
    pub source: String,
    pub pointer: String,
}

/// One guarded case of a topology update: `guard(i) -> effect(p'(i), i)`.
/// Primed pointers are written `post(p(i))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateCase {
    pub guard: Vec<Atom>,
    pub effect: Vec<Atom>,
}

impl UpdateCase {
    /// Only quantifier-free guards and effects over the single affected
    /// index are supported.
    pub fn new(rule: &str, guard: &Formula, effect: &Formula) -> Result<UpdateCase, HybridError> {
        for f in [guard, effect] {
            if !f.is_quantifier_free() {
                return Err(HybridError::UnsupportedUpdate {
                    rule: rule.to_string(),
                    reason: format!(
                        "`{f}` quantifies over indices; only updates of the single affected index are supported"
                    ),
                });
            }
        }
        Ok(UpdateCase {
            guard: super::conjuncts(guard, "update guard")?,
            effect: super::conjuncts(effect, "update effect")?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateRule {
    pub name: String,
    pub cases: Vec<UpdateCase>,
}

/// A family `{ S(i) }` of copies of a template automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    pub template: Plha,
    pub index: String,
    /// Range constraints on the index (`1 <= i`, `i <= n`); empty means
    /// unrestricted.
    pub range: Vec<Atom>,
    /// Clauses relating components, e.g. `in(i) = out(i - 1)`.
    pub links: Vec<Clause>,
    pub pointers: Vec<String>,
    pub sensed: Vec<Sensed>,
    pub sensing: Sensing,
    pub updates: Vec<UpdateRule>,
    /// Add `Inv_q` after the flow as in the single-automaton condition. Off
    /// reproduces encodings that rely on the mode-case axioms alone.
    pub invariant_after_flow: bool,
}

impl Family {
    pub fn new(template: Plha, index: &str) -> Family {
        Family {
            template,
            index: index.to_string(),
            range: Vec::new(),
            links: Vec::new(),
            pointers: Vec::new(),
            sensed: Vec::new(),
            sensing: Sensing::Current,
            updates: Vec::new(),
            invariant_after_flow: true,
        }
    }

    fn is_var(&self, s: &Sym) -> bool {
        matches!(s, Sym::App(n, args) if args.len() == 1 && self.template.variables.contains(n))
    }

    fn is_param_fn(&self, name: &str) -> bool {
        self.template.parameters.iter().any(|p| p == name) && !self.pointers.iter().any(|p| p == name)
    }

    /// A name not used by the family, for the Skolem index.
    fn fresh(&self, base: &str, taken: &BTreeSet<String>) -> String {
        let mut k = 0;
        loop {
            let n = format!("{base}{k}");
            if !taken.contains(&n) && n != self.index {
                return n;
            }
            k += 1;
        }
    }

    fn names(&self) -> BTreeSet<String> {
        let t = &self.template;
        let mut out: BTreeSet<String> =
            t.variables.iter().chain(&t.parameters).chain(&self.pointers).cloned().collect();
        out.extend(self.sensed.iter().map(|s| s.var.clone()));
        let atoms = t
            .modes
            .iter()
            .flat_map(|m| m.inv.iter().chain(&m.init).chain(&m.flow))
            .chain(t.edges.iter().flat_map(|e| e.guard.iter().chain(&e.jump)))
            .chain(&t.axioms)
            .chain(&self.range);
        for a in atoms {
            out.extend(Formula::Atom(a.clone()).constants());
        }
        for c in &self.links {
            out.extend(c.to_formula().constants());
            out.extend(c.vars.iter().cloned());
        }
        out
    }
}

fn post_name(x: &str) -> String {
    format!("{x}p")
}

fn pointer_post(p: &str) -> String {
    format!("{p}1")
}

/// Rewrites the index constant to `to` in an atom.
fn at_index(a: &Atom, index: &str, to: &Poly) -> Atom {
    match a.substitute_with(&mut |s| matches!(s, Sym::Const(c) if c == index).then(|| to.clone())) {
        Formula::Atom(b) => b,
        other => Atom { poly: Poly::zero(), rel: if other == Formula::True { Rel::EQ } else { Rel::NE } },
    }
}

/// The component's state at `st` with the index replaced by `to`.
fn component(fam: &Family, atoms: &[Atom], st: State, to: &Poly) -> Vec<Formula> {
    let at = |x: &Sym, st: State| match (x, st) {
        (Sym::App(n, args), State::Pre) => Poly::app(n, args.clone()),
        (Sym::App(n, args), State::Post) => Poly::app(&post_name(n), args.clone()),
        _ => Poly::sym(x.clone()),
    };
    atoms.iter().map(|a| at_state(&at_index(a, &fam.index, to), st, &|s| fam.is_var(s), &at)).collect()
}

fn clause(vars: &[String], guard: &[Formula], head: &Formula) -> Vec<Clause> {
    let g: Vec<Literal> = guard.iter().flat_map(literals).collect();
    // a conjunctive head is split into one clause per conjunct
    literals(head).into_iter().map(|h| Clause::new(vars.to_vec(), g.clone(), vec![h])).collect()
}

/// Functions whose value a clause head fixes as `f(..) = t`.
fn link_defined(links: &[Clause]) -> Vec<String> {
    let mut out = Vec::new();
    for c in links {
        for l in &c.head {
            if let crate::formula::Term::App(f, _) = &l.lhs {
                if l.rel == Rel::EQ && !out.contains(f) {
                    out.push(f.clone());
                }
            }
        }
    }
    out
}

fn apps_of(atoms: &[Atom], out: &mut Vec<String>) {
    for a in atoms {
        for f in Formula::Atom(a.clone()).functions() {
            if !out.contains(&f) {
                out.push(f);
            }
        }
    }
}

/// Levels: parameter functions constrained nowhere else first, then the
/// pre-state variables, the parameter functions fixed per mode, those fixed
/// by links, and the post-state variables.
fn flow_levels(fam: &Family, mode_defined: &[String]) -> Vec<(String, u32)> {
    let linked = link_defined(&fam.links);
    let t = &fam.template;
    let mut used = Vec::new();
    for m in &t.modes {
        apps_of(&m.inv, &mut used);
        apps_of(&m.flow, &mut used);
    }
    let mut levels = Vec::new();
    let mut next = 1;
    let free: Vec<&String> =
        used.iter().filter(|f| fam.is_param_fn(f) && !mode_defined.contains(f) && !linked.contains(f)).collect();
    if !free.is_empty() {
        levels.extend(free.iter().map(|f| (f.to_string(), 1)));
        next = 2;
    }
    let groups = [
        t.variables.clone(),
        mode_defined.iter().filter(|f| !linked.contains(f)).cloned().collect(),
        linked,
        t.variables.iter().map(|v| post_name(v)).collect(),
    ];
    for g in groups {
        for f in g {
            levels.push((f, next));
            next += 1;
        }
    }
    levels
}

fn has_dot(a: &Atom) -> bool {
    Formula::Atom(a.clone()).functions().contains("dot")
}

/// The flow condition for the whole family: the property at `t0` for every
/// component, per-mode axioms and discretized flows, the links, and the
/// Skolemized negated property at `t1`.
pub fn sflha_flow_vc(fam: &Family, phi: &[Atom]) -> Result<Vc, HybridError> {
    let t = &fam.template;
    if !fam.pointers.is_empty() {
        // TODO: flatten the property over pointers as the topology condition does
        return Err(HybridError::Unsupported(format!(
            "family {}: flow conditions for families with pointers are not generated",
            t.name
        )));
    }
    check_linear(phi, "safety property", &|s| fam.is_var(s))?;
    for m in &t.modes {
        check_linear(&m.inv, "invariant", &|s| fam.is_var(s))?;
        check_linear(&m.flow, "flow", &|s| fam.is_var(s))?;
    }
    let iv = Poly::var(&fam.index);
    let vars = vec![fam.index.clone()];
    let range = component(fam, &fam.range, State::Pre, &iv);
    let mut b = SpecBuilder::default();

    for f in component(fam, phi, State::Pre, &iv) {
        b.clauses.extend(clause(&vars, &range, &f));
    }

    let dt = Poly::cnst(T1).sub(&Poly::cnst(T0));
    let at = |x: &Sym, st: State| match (x, st) {
        (Sym::App(n, args), State::Post) => Poly::app(&post_name(n), args.clone()),
        _ => Poly::sym(x.clone()),
    };
    // (guard, head) per mode, mode-independent heads collected separately
    let mut per_mode: Vec<(Vec<Formula>, Vec<Formula>)> = Vec::new();
    let mut mode_defined = Vec::new();
    for m in &t.modes {
        let mut guard = range.clone();
        guard.extend(component(fam, &m.inv, State::Pre, &iv));
        let mut heads = Vec::new();
        let (dotted, plain): (Vec<Atom>, Vec<Atom>) = m.flow.iter().cloned().partition(has_dot);
        for a in &plain {
            for f in Formula::Atom(a.clone()).functions() {
                if fam.is_param_fn(&f) && !mode_defined.contains(&f) {
                    mode_defined.push(f);
                }
            }
        }
        heads.extend(component(fam, &plain, State::Pre, &iv));
        let dotted: Vec<Atom> = dotted.iter().map(|a| at_index(a, &fam.index, &iv)).collect();
        heads.extend(underline(&m.name, &dotted, &|s| fam.is_var(s), &at, &dt)?);
        if fam.invariant_after_flow {
            heads.extend(component(fam, &m.inv, State::Post, &iv));
        }
        per_mode.push((guard, heads));
    }
    let invs: Vec<Formula> = t.modes.iter().map(|m| Formula::and(component(fam, &m.inv, State::Pre, &iv))).collect();
    let exhaustive = !invs.is_empty() && is_valid(&opened(&Formula::or(invs))).unwrap_or(false);
    let mut shared = Vec::new();
    if exhaustive && per_mode.len() > 1 {
        for h in &per_mode[0].1 {
            if per_mode.iter().all(|(_, hs)| hs.contains(h)) && !shared.contains(h) {
                shared.push(h.clone());
            }
        }
    }
    // mode-case axioms before the updates, the order of the chain
    let (plain_first, rest): (Vec<_>, Vec<_>) = per_mode
        .iter()
        .flat_map(|(g, hs)| hs.iter().filter(|h| !shared.contains(h)).map(move |h| (g, h)))
        .partition(|(_, h)| !h.functions().iter().any(|f| t.variables.iter().any(|v| post_name(v) == *f)));
    for (g, h) in plain_first.into_iter().chain(rest) {
        b.clauses.extend(clause(&vars, g, h));
    }
    for h in &shared {
        b.clauses.extend(clause(&vars, &range, h));
    }
    b.clauses.extend(fam.links.iter().cloned());

    let i0 = fam.fresh("i", &fam.names());
    let ic = Poly::cnst(&i0);
    b.query.extend(literals(&Atom::compare(&Poly::cnst(T0), Rel::LT, &Poly::cnst(T1))));
    for f in component(fam, &fam.range, State::Pre, &ic) {
        b.query.extend(literals(&f));
    }
    b.negated(&component(fam, phi, State::Post, &ic));
    b.levels = flow_levels(fam, &mode_defined);
    Ok(Vc { name: format!("{}-flow", t.name), spec: b.build(), parameters: t.parameters.clone() })
}

/// A jump of one component: the property for every component before, and
/// for the jumping component `i0` guard, jump, target invariant and the
/// negated property after.
pub fn sflha_jump_vc(fam: &Family, phi: &[Atom], edge: &str) -> Result<Vc, HybridError> {
    let t = &fam.template;
    check_linear(phi, "safety property", &|s| fam.is_var(s))?;
    let e: &Edge = t.edge(edge)?;
    let target = t.mode(&e.to)?;
    let iv = Poly::var(&fam.index);
    let vars = vec![fam.index.clone()];
    let mut b = SpecBuilder::default();
    let range = component(fam, &fam.range, State::Pre, &iv);
    for f in component(fam, phi, State::Pre, &iv) {
        b.clauses.extend(clause(&vars, &range, &f));
    }
    let i0 = fam.fresh("i", &fam.names());
    let ic = Poly::cnst(&i0);
    let pre = component(fam, &fam.range, State::Pre, &ic).into_iter().chain(component(fam, &e.guard, State::Pre, &ic));
    for f in pre.chain(component(fam, &e.jump, State::Pre, &ic)).chain(component(fam, &target.inv, State::Post, &ic)) {
        b.query.extend(literals(&f));
    }
    b.negated(&component(fam, phi, State::Post, &ic));
    let mut used = Vec::new();
    apps_of(&e.guard, &mut used);
    apps_of(&e.jump, &mut used);
    apps_of(&target.inv, &mut used);
    apps_of(phi, &mut used);
    let free: Vec<String> = used.into_iter().filter(|f| fam.is_param_fn(f)).collect();
    let base = u32::from(!free.is_empty());
    b.levels = free.into_iter().map(|f| (f, 1)).collect();
    let n = t.variables.len() as u32;
    for (k, v) in t.variables.iter().enumerate() {
        b.levels.push((v.clone(), base + 1 + k as u32));
        b.levels.push((post_name(v), base + 1 + n + k as u32));
    }
    Ok(Vc { name: format!("{}-jump-{edge}", t.name), spec: b.build(), parameters: t.parameters.clone() })
}

/// Replaces pointer applications nested inside other applications by fresh
/// constants and returns the defining literals `c = p(i0)`.
struct Flattener<'a> {
    pointers: BTreeSet<String>,
    taken: &'a mut BTreeSet<String>,
    defs: BTreeMap<Sym, String>,
    order: Vec<(String, Sym)>,
}

impl Flattener<'_> {
    fn name(&mut self) -> String {
        for c in "jkmpqrsuvw".chars() {
            let n = format!("{c}0");
            if !self.taken.contains(&n) {
                self.taken.insert(n.clone());
                return n;
            }
        }
        let mut k = 1;
        loop {
            let n = format!("c{k}");
            if self.taken.insert(n.clone()) {
                return n;
            }
            k += 1;
        }
    }

    fn flatten(&mut self, f: &Formula) -> Formula {
        f.substitute_with(&mut |s| match s {
            Sym::App(n, args) if !self.pointers.contains(n) => {
                let mut changed = false;
                let args: Vec<Poly> = args
                    .iter()
                    .map(|a| match a.terms().next().map(|(m, _)| m.factors()) {
                        Some([(p @ Sym::App(pn, _), 1)]) if a.num_terms() == 1 && self.pointers.contains(pn) => {
                            changed = true;
                            let c = match self.defs.get(p) {
                                Some(c) => c.clone(),
                                None => {
                                    let c = self.name();
                                    self.defs.insert(p.clone(), c.clone());
                                    self.order.push((c.clone(), p.clone()));
                                    c
                                }
                            };
                            Poly::cnst(&c)
                        }
                        _ => a.clone(),
                    })
                    .collect();
                changed.then(|| Poly::app(n, args))
            }
            _ => None,
        })
    }
}

fn pointers_in(f: &Formula, pointers: &[String], out: &mut Vec<Sym>) {
    for s in f.syms() {
        let mut all = BTreeSet::new();
        Poly::sym(s).syms_deep(&mut all);
        for s in all {
            if matches!(&s, Sym::App(n, _) if pointers.contains(n)) && !out.contains(&s) {
                out.push(s);
            }
        }
    }
}

/// Pointers written `post(p(i))` by a case.
fn updated(case: &UpdateCase, pointers: &[String]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for a in &case.effect {
        let mut syms = BTreeSet::new();
        a.poly.syms_deep(&mut syms);
        for s in syms {
            if let Sym::App(n, args) = &s {
                if n == "post" {
                    if let Some(Sym::App(p, _)) =
                        args[0].terms().next().and_then(|(m, _)| m.factors().first().map(|(s, _)| s))
                    {
                        if pointers.contains(p) {
                            out.insert(p.clone());
                        }
                    }
                }
            }
        }
    }
    out
}

/// Invariance of the property under one case of a topology update: the
/// property over the old links for all components, guard and effect for
/// `i0`, and the negated property over the new links.
pub fn sflha_topology_vc(fam: &Family, rule: &UpdateRule, case: usize, phi: &[Atom]) -> Result<Vc, HybridError> {
    let c = rule
        .cases
        .get(case)
        .ok_or_else(|| HybridError::UnsupportedUpdate { rule: rule.name.clone(), reason: format!("no case {case}") })?;
    let t = &fam.template;
    let mut taken = fam.names();
    let i0 = fam.fresh("i", &taken);
    taken.insert(i0.clone());
    let iv = Poly::var(&fam.index);
    let ic = Poly::cnst(&i0);
    let upd = updated(c, &fam.pointers);
    let mut b = SpecBuilder::default();

    // property over the old links, pointer terms bound by guard equations
    let range = component(fam, &fam.range, State::Pre, &iv);
    for a in phi {
        let f = Formula::Atom(at_index(a, &fam.index, &iv));
        let mut ps = Vec::new();
        pointers_in(&f, &fam.pointers, &mut ps);
        let mut vars = vec![fam.index.clone()];
        let mut guard = range.clone();
        let mut map = BTreeMap::new();
        for (k, p) in ps.iter().enumerate() {
            let v = ["j", "k", "m", "p", "q"].get(k).map(|s| s.to_string()).unwrap_or_else(|| format!("j{k}"));
            guard.push(Atom::compare(&Poly::sym(p.clone()), Rel::EQ, &Poly::var(&v)));
            map.insert(p.clone(), Poly::var(&v));
            vars.push(v);
        }
        b.clauses.extend(clause(&vars, &guard, &f.substitute(&map)));
    }

    let post_ptr = |p: &str| if upd.contains(p) { pointer_post(p) } else { p.to_string() };
    let mut fl = Flattener {
        pointers: fam.pointers.iter().cloned().collect(),
        taken: &mut taken,
        defs: BTreeMap::new(),
        order: Vec::new(),
    };
    let mut body = Vec::new();
    for f in component(fam, &fam.range, State::Pre, &ic) {
        body.push(f);
    }
    for a in &c.guard {
        body.push(fl.flatten(&Formula::Atom(at_index(a, &fam.index, &ic))));
    }
    for a in &c.effect {
        let f = Formula::Atom(at_index(a, &fam.index, &ic)).substitute_with(&mut |s| match s {
            Sym::App(n, args) if n == "post" => match args[0].terms().next().map(|(m, _)| m.factors()) {
                Some([(Sym::App(p, pargs), 1)]) => Some(Poly::app(&pointer_post(p), pargs.clone())),
                _ => None,
            },
            _ => None,
        });
        body.push(f);
    }
    if fam.sensing == Sensing::LastUpdate {
        for s in fam.sensed.iter().filter(|s| upd.contains(&s.pointer)) {
            let sensed = Poly::app(&pointer_post(&s.var), vec![ic.clone()]);
            let actual = Poly::app(&s.source, vec![Poly::app(&pointer_post(&s.pointer), vec![ic.clone()])]);
            body.push(fl.flatten(&Atom::compare(&sensed, Rel::EQ, &actual)));
        }
    }
    let negated: Vec<Formula> = phi
        .iter()
        .map(|a| {
            let f = Formula::Atom(at_index(a, &fam.index, &ic)).substitute_with(&mut |s| match s {
                Sym::App(n, args) if fam.pointers.contains(n) => Some(Poly::app(&post_ptr(n), args.clone())),
                _ => None,
            });
            fl.flatten(&f)
        })
        .collect();
    for (cst, p) in fl.order.clone() {
        b.query.extend(literals(&Atom::compare(&Poly::cnst(&cst), Rel::EQ, &Poly::sym(p))));
    }
    for f in body {
        b.query.extend(literals(&f));
    }
    b.negated(&negated);

    let mut used = Vec::new();
    apps_of(&c.guard, &mut used);
    apps_of(phi, &mut used);
    let free: Vec<String> = used.into_iter().filter(|f| fam.is_param_fn(f)).collect();
    let base = u32::from(!free.is_empty());
    b.levels = free.into_iter().map(|f| (f, 1)).collect();
    for p in &fam.pointers {
        b.levels.push((p.clone(), base + 1));
        b.levels.push((pointer_post(p), base + 2));
    }
    for v in t.variables.iter().chain(fam.sensed.iter().map(|s| &s.var)) {
        b.levels.push((v.clone(), base + 2));
        b.levels.push((pointer_post(v), base + 3));
    }
    Ok(Vc {
        name: format!("{}-update-{}-{case}", t.name, rule.name),
        spec: b.build(),
        parameters: t.parameters.clone(),
    })
}

/// Ground applications become constants, so validity stays in the
/// arithmetic fragment.
fn opened(f: &Formula) -> Formula {
    let fs: BTreeSet<String> = f.functions();
    let mut store = DefinitionStore::new();
    purify_formula(f, &fs, &mut store, 1)
}

/// Checks that no two cases of `rule` can fire together.
pub fn check_update_exclusivity(fam: &Family, rule: &UpdateRule) -> Result<(), HybridError> {
    let i0 = Poly::cnst(&fam.fresh("i", &fam.names()));
    let guards: Vec<Formula> = rule
        .cases
        .iter()
        .map(|c| Formula::and(fam.range.iter().chain(&c.guard).map(|a| Formula::Atom(at_index(a, &fam.index, &i0)))))
        .collect();
    for a in 0..guards.len() {
        for b in a + 1..guards.len() {
            let both = opened(&Formula::and([guards[a].clone(), guards[b].clone()]));
            if !is_valid(&Formula::not(both)).unwrap_or(false) {
                return Err(HybridError::OverlappingCases { rule: rule.name.clone(), a, b });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{parse_model, Model};
    use super::*;
    use crate::elim::{check_sat, generate_constraint, open_universal, SatResult};
    use crate::parser::{parse_formula, parse_tasks};

    pub(crate) const TANKS: &str = include_str!("../../models/water_tank_family.ha");

    pub(crate) const CARS: &str = include_str!("../../models/car_platoon.ha");

    pub(crate) const LANES: &str = include_str!("../../models/lane_change.ha");

    fn family(src: &str) -> (Family, Vec<Atom>) {
        match parse_model(src).unwrap() {
            Model::Family(f, phi) => (f, phi),
            _ => unreachable!(),
        }
    }

    fn clause_set(cs: &[Clause]) -> BTreeSet<Formula> {
        cs.iter().map(Clause::to_formula).collect()
    }

    fn listed(name: &str) -> crate::parser::Task {
        let text =
            std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tasks/", "water_tank_family.yaml")).unwrap();
        let text = if name.starts_with("car") {
            std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tasks/car_platoon_flow.yaml")).unwrap()
        } else if name.starts_with("lane") {
            std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tasks/lane_change.yaml")).unwrap()
        } else {
            text
        };
        parse_tasks(&text).unwrap().into_iter().find(|t| t.name == name).unwrap()
    }

    #[test]
    fn water_tank_family_is_the_listed_problem() {
        let (fam, phi) = family(TANKS);
        let vc = sflha_flow_vc(&fam, &phi).unwrap();
        let want = listed("water-tank-family").problem;
        assert_eq!(clause_set(&vc.spec.clauses), clause_set(&want.clauses));
        assert_eq!(vc.spec.query_formulas(), want.query_formulas());
        let levels: BTreeMap<&str, u32> =
            vc.spec.signature.extension.iter().map(|e| (e.name.as_str(), e.level)).collect();
        assert_eq!(levels, BTreeMap::from([("l", 1), ("out", 2), ("in", 3), ("lp", 4)]));
    }

    #[test]
    fn car_family_is_the_listed_problem() {
        let (fam, phi) = family(CARS);
        let vc = sflha_flow_vc(&fam, &phi).unwrap();
        let want = listed("car-platoon-flow").problem;
        assert_eq!(clause_set(&vc.spec.clauses), clause_set(&want.clauses));
        assert_eq!(vc.spec.query_formulas(), want.query_formulas());
        let levels: Vec<(String, u32)> =
            vc.spec.signature.extension.iter().map(|e| (e.name.clone(), e.level)).collect();
        assert_eq!(levels, want.signature.extension.iter().map(|e| (e.name.clone(), e.level)).collect::<Vec<_>>());
    }

    #[test]
    fn per_car_parameters_come_first() {
        let src =
            CARS.replace("dappr", "dappr(i)").replace("drec", "drec(i)").replace("dappr(i), drec(i)", "dappr, drec");
        let (fam, phi) = family(&src);
        let vc = sflha_flow_vc(&fam, &phi).unwrap();
        let want = listed("car-platoon-flow-per-car").problem;
        assert_eq!(clause_set(&vc.spec.clauses), clause_set(&want.clauses));
        let mut got: Vec<(String, u32)> =
            vc.spec.signature.extension.iter().map(|e| (e.name.clone(), e.level)).collect();
        let mut exp: Vec<(String, u32)> = want.signature.extension.iter().map(|e| (e.name.clone(), e.level)).collect();
        got.sort();
        exp.sort();
        assert_eq!(got, exp);
    }

    #[test]
    fn car_constraint_from_generated_problem() {
        let (fam, phi) = family(CARS);
        let vc = sflha_flow_vc(&fam, &phi).unwrap();
        let r = generate_constraint(&vc.task(Vec::new())).unwrap();
        let want = parse_formula("AND(dappr - dsafe >= _0, OR(dappr - dsafe = _0, dappr - drec <= _0))").unwrap();
        assert!(is_valid(&Formula::iff(r.formula, want)).unwrap());
    }

    #[test]
    fn independent_components() {
        let (mut fam, phi) = family(TANKS);
        fam.links.clear();
        let vc = sflha_flow_vc(&fam, &phi).unwrap();
        // without links the inflow is a free parameter function
        assert!(vc.spec.signature.extension.iter().any(|e| e.name == "in" && e.level == 1));
        assert!(crate::locality::reduce_chain(&vc.spec).is_ok());
    }

    #[test]
    fn lane_change_problem_and_constraint() {
        let (fam, phi) = family(LANES);
        let rule = &fam.updates[0];
        let vc = sflha_topology_vc(&fam, rule, 0, &phi).unwrap();
        let want = listed("lane-change").problem;
        assert_eq!(clause_set(&vc.spec.clauses), clause_set(&want.clauses));
        let r = generate_constraint(&vc.task(Vec::new())).unwrap();
        let want = parse_formula("dchange - dsafe >= _0").unwrap();
        assert!(is_valid(&Formula::iff(r.formula, want)).unwrap());
    }

    #[test]
    fn flow_with_pointers_is_refused() {
        let (fam, phi) = family(LANES);
        assert!(matches!(sflha_flow_vc(&fam, &phi), Err(HybridError::Unsupported(_))));
    }

    #[test]
    fn per_car_lane_change() {
        let src = LANES.replace("> dchange", "> dchange(i)");
        let (fam, phi) = family(&src);
        let vc = sflha_topology_vc(&fam, &fam.updates[0], 0, &phi).unwrap();
        let r = generate_constraint(&vc.task(Vec::new())).unwrap();
        let want = parse_formula("(FORALL i0). dsafe - dchange(i0) <= _0").unwrap();
        let t = crate::elim::generate_constraint(&listed("lane-change-per-car")).unwrap();
        assert!(is_valid(&Formula::iff(open_universal(&r.formula), open_universal(&want))).unwrap(), "{}", r.formula);
        assert!(is_valid(&Formula::iff(open_universal(&t.formula), open_universal(&want))).unwrap());
    }

    #[test]
    fn identity_update_is_safe() {
        let src =
            LANES.replace("post(front(i)) = sidefront(i); post(sidefront(i)) = front(i)", "post(front(i)) = front(i)");
        let (fam, phi) = family(&src);
        let vc = sflha_topology_vc(&fam, &fam.updates[0], 0, &phi).unwrap();
        assert_eq!(check_sat(&vc.spec).unwrap().0, SatResult::Unsat);
        assert_eq!(generate_constraint(&vc.task(Vec::new())).unwrap().formula, Formula::True);
    }

    #[test]
    fn sensed_values_refreshed_on_update() {
        let src = LANES.replace(
            "pointers: front, sidefront",
            "pointers: front, sidefront\nsensed: posf = pos(front)\nsensing: last-update",
        );
        let (fam, phi) = family(&src);
        let vc = sflha_topology_vc(&fam, &fam.updates[0], 0, &phi).unwrap();
        let q: Vec<String> = vc.spec.query.iter().map(|l| l.to_string()).collect();
        assert!(q.iter().any(|l| l.contains("posf1(i0)")), "{q:?}");
        let cur = family(&src.replace("last-update", "current")).0;
        let vc = sflha_topology_vc(&cur, &cur.updates[0], 0, &phi).unwrap();
        assert!(vc.spec.query.iter().all(|l| !l.to_string().contains("posf1")));
    }

    #[test]
    fn exclusivity() {
        let (fam, _) = family(LANES);
        let ok = UpdateRule {
            name: "split".into(),
            cases: vec![
                UpdateCase::new("split", &parse_formula("pos(front(i)) - pos(i) < d").unwrap(), &Formula::True)
                    .unwrap(),
                UpdateCase::new("split", &parse_formula("pos(front(i)) - pos(i) >= d").unwrap(), &Formula::True)
                    .unwrap(),
            ],
        };
        assert!(check_update_exclusivity(&fam, &ok).is_ok());
        let mut bad = ok.clone();
        bad.cases[1] =
            UpdateCase::new("split", &parse_formula("pos(front(i)) - pos(i) >= d - _1").unwrap(), &Formula::True)
                .unwrap();
        assert!(matches!(check_update_exclusivity(&fam, &bad), Err(HybridError::OverlappingCases { a: 0, b: 1, .. })));
        let q = parse_formula("(FORALL j). pos(j) <= pos(i)").unwrap();
        assert!(matches!(UpdateCase::new("r", &q, &Formula::True), Err(HybridError::UnsupportedUpdate { .. })));
    }

    #[test]
    fn family_jump_keeps_level() {
        let src = format!(
            "{}edge e1: s1 -> s2\n  guard: l(i) <= la\n  jump: post(l(i)) = l(i)\n",
            TANKS.replace("safe: l(i) <= lo\n", "")
        ) + "safe: l(i) <= lo\n";
        let (fam, phi) = family(&src);
        let vc = sflha_jump_vc(&fam, &phi, "e1").unwrap();
        assert_eq!(check_sat(&vc.spec).unwrap().0, SatResult::Unsat);
    }
}
