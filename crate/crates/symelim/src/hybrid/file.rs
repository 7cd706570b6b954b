//! Line-based automaton descriptions.
//!
//! ```text
//! automaton water-tank          # or: family NAME
//! variables: l
//! parameters: i, o, la, lo
//! axiom: l >= _0                # holds at every moment
//! assume: _0 < la; la < lo      # used only to simplify results
//! mode s1
//!   inv: l >= la
//!   init: l = l1; l >= la       # `;` separates conjuncts
//!   flow: dot(l) = i - o
//! edge e1: s1 -> s2
//!   guard: l <= la
//!   jump: post(l) = l
//! safe: l <= lo
//! ```
//!
//! Families add `index: i`, `range: ...`, `link: <clause>`, `pointers: ...`,
//! `sensed: xf = x(p)`, `sensing: current|last-update`,
//! `update NAME` blocks of `case:`/`then:` lines and
//! `option: invariant_after_flow = false`. Repeated keys accumulate.

use super::family::{sflha_flow_vc, sflha_jump_vc, sflha_topology_vc, Family, Sensed, Sensing, UpdateCase, UpdateRule};
use super::{all_vcs, check_linear, conjuncts, Edge, HybridError, Mode, Plha, Vc};
use crate::formula::{Atom, Formula, Sym};
use crate::parser::{parse_formula, parse_problem, Clause};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    /// A single automaton with its safety property.
    Automaton(Plha, Vec<Atom>),
    Family(Family, Vec<Atom>),
}

impl Model {
    /// The `assume:` constraints, for [`Vc::task`].
    pub fn assumptions(&self) -> &[Formula] {
        match self {
            Model::Automaton(p, _) => &p.assumptions,
            Model::Family(f, _) => &f.template.assumptions,
        }
    }

    /// Every verification condition: per-mode init/flow and per-edge jump
    /// for an automaton; flow (when there are modes), per-edge jump and
    /// per-update-case topology for a family.
    pub fn vcs(&self) -> Result<Vec<Vc>, HybridError> {
        match self {
            Model::Automaton(p, phi) => all_vcs(p, phi),
            Model::Family(f, phi) => {
                let mut out = Vec::new();
                if !f.template.modes.is_empty() {
                    out.push(sflha_flow_vc(f, phi)?);
                }
                for e in &f.template.edges {
                    out.push(sflha_jump_vc(f, phi, &e.name)?);
                }
                for r in &f.updates {
                    for k in 0..r.cases.len() {
                        out.push(sflha_topology_vc(f, r, k, phi)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

enum Block {
    Top,
    Mode(usize),
    Edge(usize),
    Update(usize),
}

fn err(line: usize, message: impl Into<String>) -> HybridError {
    HybridError::Syntax { line, message: message.into() }
}

fn names(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

fn formula(line: usize, v: &str) -> Result<Formula, HybridError> {
    let parts: Result<Vec<Formula>, HybridError> = v
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_formula(s).map_err(|e| err(line, e.to_string())))
        .collect();
    Ok(Formula::and(parts?))
}

/// Conjuncts in the order written.
fn atoms(line: usize, v: &str, what: &str) -> Result<Vec<Atom>, HybridError> {
    let mut out = Vec::new();
    for part in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let f = formula(line, part)?;
        out.extend(conjuncts(&f, what).map_err(|e| err(line, e.to_string()))?);
    }
    Ok(out)
}

/// Parses an automaton or family description.
pub fn parse_model(text: &str) -> Result<Model, HybridError> {
    let mut plha = Plha::default();
    let mut is_family = false;
    let mut index = None;
    let mut range = Vec::new();
    let mut link_text: Vec<(usize, String)> = Vec::new();
    let mut pointers = Vec::new();
    let mut sensed = Vec::new();
    let mut sensing = Sensing::Current;
    let mut updates: Vec<UpdateRule> = Vec::new();
    let mut pending_guard: Option<(usize, Formula)> = None;
    let mut invariant_after_flow = true;
    let mut safe = None;
    let mut block = Block::Top;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let first = l.split_whitespace().next().unwrap_or("");
        match first {
            "automaton" | "family" => {
                is_family = first == "family";
                plha.name = l[first.len()..].trim().to_string();
                block = Block::Top;
                continue;
            }
            "mode" => {
                let name = l[4..].trim().to_string();
                plha.modes.push(Mode { name, ..Default::default() });
                block = Block::Mode(plha.modes.len() - 1);
                continue;
            }
            "edge" => {
                let rest = &l[4..];
                let (name, ends) = rest.split_once(':').ok_or_else(|| err(line, "expected `edge NAME: FROM -> TO`"))?;
                let (from, to) = ends.split_once("->").ok_or_else(|| err(line, "expected `FROM -> TO`"))?;
                plha.edges.push(Edge {
                    name: name.trim().to_string(),
                    from: from.trim().to_string(),
                    to: to.trim().to_string(),
                    ..Default::default()
                });
                block = Block::Edge(plha.edges.len() - 1);
                continue;
            }
            "update" => {
                updates.push(UpdateRule { name: l[6..].trim().to_string(), cases: Vec::new() });
                block = Block::Update(updates.len() - 1);
                continue;
            }
            _ => {}
        }
        let (key, value) = l.split_once(':').ok_or_else(|| err(line, format!("expected `key: value`, found `{l}`")))?;
        let (key, value) = (key.trim(), value.trim());
        match (&block, key) {
            (Block::Mode(m), "inv") => plha.modes[*m].inv.extend(atoms(line, value, "invariant")?),
            (Block::Mode(m), "init") => plha.modes[*m].init.extend(atoms(line, value, "initial condition")?),
            (Block::Mode(m), "flow") => plha.modes[*m].flow.extend(atoms(line, value, "flow")?),
            (Block::Edge(e), "guard") => plha.edges[*e].guard.extend(atoms(line, value, "guard")?),
            (Block::Edge(e), "jump") => plha.edges[*e].jump.extend(atoms(line, value, "jump")?),
            (Block::Update(_), "case") => pending_guard = Some((line, formula(line, value)?)),
            (Block::Update(u), "then") => {
                let rule = &mut updates[*u];
                let (_, guard) =
                    pending_guard.take().ok_or_else(|| err(line, "`then:` without a preceding `case:`"))?;
                rule.cases.push(UpdateCase::new(&rule.name, &guard, &formula(line, value)?)?);
            }
            (_, "variables") => plha.variables.extend(names(value)),
            (_, "parameters") => plha.parameters.extend(names(value)),
            (_, "axiom") => plha.axioms.extend(atoms(line, value, "axiom")?),
            (_, "assume") => {
                for part in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    plha.assumptions.push(formula(line, part)?);
                }
            }
            (_, "index") => index = Some(value.to_string()),
            (_, "range") => range.extend(atoms(line, value, "range")?),
            (_, "link") => link_text.push((line, value.to_string())),
            (_, "pointers") => pointers.extend(names(value)),
            (_, "sensed") => {
                let bad = || err(line, "expected `sensed: VAR = SOURCE(POINTER)`");
                let (var, src) = value.split_once('=').ok_or_else(bad)?;
                let (source, ptr) = src.trim().trim_end_matches(')').split_once('(').ok_or_else(bad)?;
                sensed.push(Sensed {
                    var: var.trim().into(),
                    source: source.trim().into(),
                    pointer: ptr.trim().into(),
                });
            }
            (_, "sensing") => {
                sensing = match value {
                    "current" => Sensing::Current,
                    "last-update" => Sensing::LastUpdate,
                    _ => return Err(err(line, "sensing is `current` or `last-update`")),
                }
            }
            (_, "option") => {
                let (k, v) = value.split_once('=').ok_or_else(|| err(line, "expected `option: NAME = true|false`"))?;
                let v = match v.trim() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(line, "option values are true or false")),
                };
                match k.trim() {
                    "invariant_after_flow" => invariant_after_flow = v,
                    k => return Err(err(line, format!("unknown option `{k}`"))),
                }
            }
            (_, "safe") => safe = Some(atoms(line, value, "safety property")?),
            _ => return Err(err(line, format!("unexpected `{key}` here"))),
        }
    }
    if let Some((line, _)) = pending_guard {
        return Err(err(line, "`case:` without `then:`"));
    }
    for e in &plha.edges {
        for m in [&e.from, &e.to] {
            plha.mode(m)?;
        }
    }
    let safe = safe.ok_or_else(|| err(0, "missing `safe:`"))?;
    if !is_family {
        let is_var = |s: &Sym| matches!(s, Sym::Const(c) if plha.variables.contains(c));
        for m in &plha.modes {
            check_linear(&m.inv, "invariant", &is_var)?;
            check_linear(&m.init, "initial condition", &is_var)?;
        }
        for e in &plha.edges {
            check_linear(&e.guard, "guard", &is_var)?;
            check_linear(&e.jump, "jump", &is_var)?;
        }
        return Ok(Model::Automaton(plha, safe));
    }
    let links = parse_links(&plha, &pointers, &link_text)?;
    let mut fam = Family::new(plha, index.as_deref().unwrap_or("i"));
    fam.range = range;
    fam.links = links;
    fam.pointers = pointers;
    fam.sensed = sensed;
    fam.sensing = sensing;
    fam.updates = updates;
    fam.invariant_after_flow = invariant_after_flow;
    Ok(Model::Family(fam, safe))
}

/// Link clauses in problem-file syntax; every declared name may be applied.
fn parse_links(plha: &Plha, pointers: &[String], links: &[(usize, String)]) -> Result<Vec<Clause>, HybridError> {
    let mut out = Vec::new();
    let decl: Vec<String> =
        plha.variables.iter().chain(&plha.parameters).chain(pointers).map(|n| format!("({n},1,1)")).collect();
    for (line, text) in links {
        let body = text.trim_end_matches(';');
        let src = format!("Extension_functions := {{{}}}\nClauses := {body};\nQuery := _0 <= _0;", decl.join(","));
        let spec = parse_problem(&src).map_err(|e| err(*line, e.to_string()))?;
        out.extend(spec.clauses.into_iter().map(|mut c| {
            c.line = *line;
            c
        }));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_errors_carry_lines() {
        let e = parse_model("automaton a\nvariables: x\nmode m\n  inv: x <\nsafe: x <= _1").unwrap_err();
        assert!(matches!(e, HybridError::Syntax { line: 4, .. }));
        assert!(matches!(parse_model("automaton a\nvariables: x\n"), Err(HybridError::Syntax { .. })));
        let e = parse_model("automaton a\nmode m\nedge e: m -> z\nsafe: x <= _1").unwrap_err();
        assert_eq!(e, HybridError::UnknownMode("z".into()));
    }

    #[test]
    fn disjunctive_invariant_rejected() {
        let e = parse_model("automaton a\nvariables: x\nmode m\n  inv: OR(x < _0, x > _1)\nsafe: x <= _1").unwrap_err();
        assert!(e.to_string().contains("not a conjunction"));
        let e = parse_model("automaton a\nvariables: x, y\nmode m\n  inv: x*y <= _1\nsafe: x <= _1").unwrap_err();
        assert!(matches!(e, HybridError::NotConvex { .. }));
    }

    #[test]
    fn links_keep_their_shape() {
        let m = parse_model(
            "family f\nvariables: l\nparameters: in, out, in0\nlink: (FORALL i). _2 <= i --> in(i) = out(i-_1)\nsafe: l(i) <= _1",
        )
        .unwrap();
        let Model::Family(f, _) = m else { panic!() };
        assert_eq!(f.links.len(), 1);
        assert_eq!(f.links[0].to_string(), "(FORALL i). _2 <= i --> in(i) = out((i - _1));");
        assert_eq!(f.index, "i");
    }

    #[test]
    fn assumptions_accumulate() {
        let m = parse_model(
            "automaton a\nvariables: x\nassume: _0 < c; (FORALL y). _0 <= g(y)\nassume: c < d\nsafe: x <= c",
        )
        .unwrap();
        let got: Vec<String> = m.assumptions().iter().map(|a| a.to_string()).collect();
        assert_eq!(got, ["c > _0", "(FORALL y). g(y) >= _0", "c - d < _0"]);
    }

    #[test]
    fn model_files_give_their_conditions() {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/models/");
        let count =
            |f: &str| parse_model(&std::fs::read_to_string(format!("{dir}{f}")).unwrap()).unwrap().vcs().unwrap().len();
        assert_eq!(count("water_tank.ha"), 6);
        assert_eq!(count("water_tank_family.ha"), 1);
        assert_eq!(count("car_platoon.ha"), 1);
        assert_eq!(count("lane_change.ha"), 1);
    }
}
