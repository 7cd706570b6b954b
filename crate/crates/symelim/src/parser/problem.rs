//! Extension-hierarchy problem files.
//!
//! ```text
//! Base_functions := {(-,2,0,real),(+,2,0,real),(*,2,0,real)}
//! Extension_functions := {(l, 1, 1)}
//! Relations := {(<,2),(<=,2),(>,2),(>=,2)}
//! Constants := {(t0, real), (t1, real)}
//! Clauses :=
//! (FORALL t). l(t) >= _0;
//! Query :=
//! t0 < t1; l(t0) <= lo;
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::flat::{is_flat, is_linear};
use super::lexer::{Tok, Token};
use super::syntax::{Parser, Scope};
use super::{ParseDiagnostic, ParseErrors, Span};
use crate::formula::{Formula, Rel, Term};

/// `lhs rel rhs` as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub lhs: Term,
    pub rel: Rel,
    pub rhs: Term,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs.to_string_bare(), self.rel.symbol(), self.rhs.to_string_bare())
    }
}

/// `(FORALL vars). guard --> head`, where the head is a disjunction.
#[derive(Clone, Debug, Eq)]
pub struct Clause {
    pub vars: Vec<String>,
    pub guard: Vec<Literal>,
    pub head: Vec<Literal>,
    pub flat: bool,
    pub linear: bool,
    /// Source line, 0 when synthesized.
    pub line: usize,
}

impl PartialEq for Clause {
    fn eq(&self, o: &Self) -> bool {
        self.vars == o.vars && self.guard == o.guard && self.head == o.head
    }
}

impl Clause {
    pub fn new(vars: Vec<String>, guard: Vec<Literal>, head: Vec<Literal>) -> Clause {
        let mut c = Clause { vars, guard, head, flat: true, linear: true, line: 0 };
        c.flat = is_flat(&c);
        c.linear = is_linear(&c);
        c
    }

    /// The clause as a (universally closed) formula.
    pub fn to_formula(&self) -> Formula {
        let body = Formula::implies(
            Formula::and(self.guard.iter().map(Literal::to_formula)),
            Formula::or(self.head.iter().map(Literal::to_formula)),
        );
        if self.vars.is_empty() {
            body
        } else {
            Formula::forall(self.vars.clone(), body)
        }
    }

    pub fn literals(&self) -> impl Iterator<Item = &Literal> {
        self.guard.iter().chain(&self.head)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            write!(f, "(FORALL {}). ", self.vars.join(", "))?;
        }
        let join = |ls: &[Literal]| ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ");
        if !self.guard.is_empty() {
            write!(f, "{} --> ", join(&self.guard))?;
        }
        write!(f, "{};", join(&self.head))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtFunction {
    pub name: String,
    pub arity: usize,
    pub level: u32,
    pub sort: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    /// Raw tuples of the `Base_functions` section.
    pub base_functions: Vec<Vec<String>>,
    pub extension: Vec<ExtFunction>,
    pub relations: Vec<(String, usize)>,
    pub constants: Vec<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProblemSpec {
    pub signature: Signature,
    pub clauses: Vec<Clause>,
    pub query: Vec<Literal>,
    /// Levels instantiated stably locally; all others are local.
    pub stably_local: BTreeSet<u32>,
}

impl ProblemSpec {
    pub fn level_of(&self, name: &str) -> Option<u32> {
        self.signature.extension.iter().find(|e| e.name == name).map(|e| e.level)
    }

    pub fn max_level(&self) -> u32 {
        self.signature.extension.iter().map(|e| e.level).max().unwrap_or(0)
    }

    /// Function symbols (extension and named base functions) with arities.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        let mut m: BTreeMap<String, usize> =
            self.signature.extension.iter().map(|e| (e.name.clone(), e.arity)).collect();
        for t in &self.signature.base_functions {
            if let (Some(n), Some(a)) = (t.first(), t.get(1).and_then(|a| a.parse().ok())) {
                if n.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    m.insert(n.clone(), a);
                }
            }
        }
        m
    }

    pub fn query_formulas(&self) -> Vec<Formula> {
        self.query.iter().map(Literal::to_formula).collect()
    }

    /// Level of a clause: the highest level among its extension symbols.
    pub fn clause_level(&self, c: &Clause) -> u32 {
        let mut names = BTreeSet::new();
        for l in c.literals() {
            collect_apps(&l.lhs, &mut names);
            collect_apps(&l.rhs, &mut names);
        }
        names.iter().filter_map(|n| self.level_of(n)).max().unwrap_or(0)
    }

    /// Every 0-ary symbol name occurring in clauses or query.
    pub fn constant_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let lits = self.clauses.iter().flat_map(|c| c.literals()).chain(&self.query);
        for l in lits {
            collect_consts(&l.lhs, &mut out);
            collect_consts(&l.rhs, &mut out);
        }
        out.extend(self.signature.constants.iter().map(|(n, _)| n.clone()));
        out
    }
}

pub(crate) fn collect_apps(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::App(f, args) => {
            out.insert(f.clone());
            args.iter().for_each(|a| collect_apps(a, out));
        }
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            collect_apps(a, out);
            collect_apps(b, out);
        }
        Term::Neg(a) => collect_apps(a, out),
        Term::Var(_) | Term::Const(_) | Term::Num(_) => {}
    }
}

fn collect_consts(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Const(c) => {
            out.insert(c.clone());
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_consts(a, out)),
        Term::Add(a, b) | Term::Sub(a, b) | Term::Mul(a, b) => {
            collect_consts(a, out);
            collect_consts(b, out);
        }
        Term::Neg(a) => collect_consts(a, out),
        Term::Var(_) | Term::Num(_) => {}
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = &self.signature;
        let base: Vec<String> = sig.base_functions.iter().map(|t| format!("({})", t.join(","))).collect();
        writeln!(f, "Base_functions := {{{}}}", base.join(", "))?;
        let ext: Vec<String> = sig
            .extension
            .iter()
            .map(|e| match &e.sort {
                Some(s) => format!("({}, {}, {}, {s})", e.name, e.arity, e.level),
                None => format!("({}, {}, {})", e.name, e.arity, e.level),
            })
            .collect();
        writeln!(f, "Extension_functions := {{{}}}", ext.join(", "))?;
        let rels: Vec<String> = sig.relations.iter().map(|(r, a)| format!("({r},{a})")).collect();
        writeln!(f, "Relations := {{{}}}", rels.join(", "))?;
        let cs: Vec<String> = sig.constants.iter().map(|(c, s)| format!("({c}, {s})")).collect();
        writeln!(f, "Constants := {{{}}}", cs.join(", "))?;
        if !self.stably_local.is_empty() {
            let ls: Vec<String> = self.stably_local.iter().map(u32::to_string).collect();
            writeln!(f, "Stably_local := {{{}}}", ls.join(", "))?;
        }
        writeln!(f, "Clauses :=")?;
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        writeln!(f, "Query :=")?;
        for l in &self.query {
            writeln!(f, "{l};")?;
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] =
    ["Base_functions", "Extension_functions", "Relations", "Constants", "Stably_local", "Clauses", "Query"];

/// Parses a problem file. All diagnostics found are reported together.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ParseErrors> {
    let mut p = Parser::new(text)?;
    let mut diags = Vec::new();
    let mut sections: Vec<(String, Span, Vec<Token>)> = Vec::new();
    // split into sections at `Name :=`
    while !p.at_eof() {
        let is_header = matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Define;
        if !is_header {
            diags.push(p.unexpected("a section header `Name :=`"));
            while !p.at_eof() && !(matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Define) {
                p.bump();
            }
            continue;
        }
        let (name, span) = p.ident("a section name")?;
        p.bump();
        let mut body = Vec::new();
        while !p.at_eof() && !(matches!(p.peek(), Tok::Ident(_)) && *p.peek_at(1) == Tok::Define) {
            body.push(p.bump());
        }
        let eof_span = p.span();
        body.push(Token { tok: Tok::Eof, span: eof_span });
        if !SECTIONS.contains(&name.as_str()) {
            diags.push(ParseDiagnostic::error(span, format!("unknown section `{name}`")));
            continue;
        }
        if sections.iter().any(|(n, _, _)| *n == name) {
            diags.push(ParseDiagnostic::error(span, format!("section `{name}` given twice")));
            continue;
        }
        sections.push((name, span, body));
    }

    let mut spec = ProblemSpec::default();
    let take = |n: &str, sections: &mut Vec<(String, Span, Vec<Token>)>| {
        sections.iter().position(|(m, _, _)| m == n).map(|i| sections.remove(i))
    };
    if let Some((_, _, toks)) = take("Base_functions", &mut sections) {
        for (items, _) in tuples(toks, &mut diags) {
            spec.signature.base_functions.push(items.into_iter().map(|(s, _)| s).collect());
        }
    }
    if let Some((_, _, toks)) = take("Extension_functions", &mut sections) {
        for (items, span) in tuples(toks, &mut diags) {
            match ext_function(&items, span) {
                Ok(e) => spec.signature.extension.push(e),
                Err(d) => diags.push(d),
            }
        }
    }
    if let Some((_, _, toks)) = take("Relations", &mut sections) {
        for (items, span) in tuples(toks, &mut diags) {
            match items.as_slice() {
                [(r, _), (a, asp)] => match a.parse() {
                    Ok(a) => spec.signature.relations.push((r.clone(), a)),
                    Err(_) => diags.push(ParseDiagnostic::error(*asp, "relation arity must be a number")),
                },
                _ => diags.push(ParseDiagnostic::error(span, "relation tuples are (symbol, arity)")),
            }
        }
    }
    if let Some((_, _, toks)) = take("Constants", &mut sections) {
        for (items, span) in tuples(toks, &mut diags) {
            match items.as_slice() {
                [(c, _), (s, _)] => spec.signature.constants.push((c.clone(), s.clone())),
                _ => diags.push(ParseDiagnostic::error(span, "constant tuples are (name, sort)")),
            }
        }
    }
    if let Some((_, _, toks)) = take("Stably_local", &mut sections) {
        let mut q = Parser::from_tokens(toks);
        match level_set(&mut q) {
            Ok(ls) => spec.stably_local = ls,
            Err(d) => diags.push(d),
        }
    }
    check_categories(&spec, &mut diags);

    let arities = spec.arities();
    if let Some((_, _, toks)) = take("Clauses", &mut sections) {
        let mut q = Parser::from_tokens(toks);
        while !q.at_eof() {
            let line = q.span().line;
            match clause(&mut q, &arities) {
                Ok(mut c) => {
                    c.line = line;
                    spec.clauses.push(c);
                }
                Err(d) => {
                    diags.push(d);
                    q.recover(&Tok::Semi);
                }
            }
        }
    }
    if let Some((_, _, toks)) = take("Query", &mut sections) {
        let mut q = Parser::from_tokens(toks);
        let sc = Scope { functions: Some(&arities), ..Scope::default() };
        while !q.at_eof() {
            match q.literal(&sc) {
                Ok(l) => {
                    spec.query.push(l);
                    if !q.eat(&Tok::Semi) && !q.at_eof() {
                        diags.push(q.unexpected("`;` after a query literal"));
                        q.recover(&Tok::Semi);
                    }
                }
                Err(d) => {
                    diags.push(d);
                    q.recover(&Tok::Semi);
                }
            }
        }
    }
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(ParseErrors(diags))
    }
}

fn check_categories(spec: &ProblemSpec, diags: &mut Vec<ParseDiagnostic>) {
    let mut seen = BTreeSet::new();
    for e in &spec.signature.extension {
        if !seen.insert(e.name.clone()) {
            diags.push(ParseDiagnostic::error(Span::default(), format!("function `{}` declared twice", e.name)));
        }
    }
    for (c, _) in &spec.signature.constants {
        if seen.contains(c) {
            diags.push(ParseDiagnostic::error(
                Span::default(),
                format!("`{c}` declared both as a function and as a constant"),
            ));
        }
    }
}

type Tuple = (Vec<(String, Span)>, Span);

/// `{ (a, b, ..) (c, d) ... }` with optional commas between tuples.
fn tuples(toks: Vec<Token>, diags: &mut Vec<ParseDiagnostic>) -> Vec<Tuple> {
    let mut p = Parser::from_tokens(toks);
    let mut out = Vec::new();
    if let Err(d) = p.expect(&Tok::LBrace, "`{`") {
        diags.push(d);
        return out;
    }
    loop {
        match p.peek() {
            Tok::RBrace => {
                p.bump();
                break;
            }
            Tok::Comma => {
                p.bump();
            }
            Tok::LParen => {
                let span = p.bump().span;
                let mut items = Vec::new();
                loop {
                    let t = p.bump();
                    let s = match &t.tok {
                        Tok::Ident(s) => s.clone(),
                        Tok::Num(r) => r.to_string(),
                        Tok::Plus => "+".into(),
                        Tok::Minus => "-".into(),
                        Tok::Star => "*".into(),
                        Tok::Lt => "<".into(),
                        Tok::Le => "<=".into(),
                        Tok::Gt => ">".into(),
                        Tok::Ge => ">=".into(),
                        Tok::Eq => "=".into(),
                        Tok::Ne => "!=".into(),
                        Tok::Eof => {
                            diags.push(ParseDiagnostic::error(span, "unterminated tuple"));
                            return out;
                        }
                        _ => {
                            diags.push(ParseDiagnostic::error(t.span, "unexpected token in tuple"));
                            String::new()
                        }
                    };
                    items.push((s, t.span));
                    if p.eat(&Tok::RParen) {
                        break;
                    }
                    if let Err(d) = p.expect(&Tok::Comma, "`,` or `)` in tuple") {
                        diags.push(d);
                        p.recover(&Tok::RParen);
                        break;
                    }
                }
                out.push((items, span));
            }
            Tok::Eof => {
                diags.push(p.unexpected("`}` closing the section"));
                break;
            }
            _ => {
                diags.push(p.unexpected("a tuple"));
                p.bump();
            }
        }
    }
    if !p.at_eof() {
        diags.push(p.unexpected("the next section"));
    }
    out
}

fn ext_function(items: &[(String, Span)], span: Span) -> Result<ExtFunction, ParseDiagnostic> {
    let num = |i: usize, what: &str| -> Result<usize, ParseDiagnostic> {
        let (s, sp) = &items[i];
        s.parse().map_err(|_| ParseDiagnostic::error(*sp, format!("{what} must be a natural number")))
    };
    match items.len() {
        3 | 4 => {
            let level = num(2, "level")?;
            if level == 0 {
                return Err(ParseDiagnostic::error(items[2].1, "extension functions need a level >= 1"));
            }
            Ok(ExtFunction {
                name: items[0].0.clone(),
                arity: num(1, "arity")?,
                level: level as u32,
                sort: items.get(3).map(|(s, _)| s.clone()),
            })
        }
        2 => Err(ParseDiagnostic::error(span, format!("level omitted on extension function `{}`", items[0].0))),
        _ => Err(ParseDiagnostic::error(span, "extension function tuples are (name, arity, level[, sort])")),
    }
}

fn level_set(p: &mut Parser) -> Result<BTreeSet<u32>, ParseDiagnostic> {
    p.expect(&Tok::LBrace, "`{`")?;
    let mut out = BTreeSet::new();
    while !p.eat(&Tok::RBrace) {
        match p.peek().clone() {
            Tok::Num(r) if r.is_integer() && r >= crate::formula::rat(1) => {
                p.bump();
                out.insert(r.to_integer().try_into().unwrap_or(u32::MAX));
            }
            Tok::Comma => {
                p.bump();
            }
            _ => return Err(p.unexpected("a level number")),
        }
    }
    Ok(out)
}

fn clause(p: &mut Parser, arities: &BTreeMap<String, usize>) -> Result<Clause, ParseDiagnostic> {
    let mut vars = Vec::new();
    if p.at_binder() {
        let span = p.span();
        let (universal, vs) = p.binder()?;
        if !universal {
            return Err(ParseDiagnostic::error(span, "clauses are universally quantified"));
        }
        vars = vs;
    }
    let sc = Scope { bound: &vars, functions: Some(arities), wildcard: None };
    let mut first = vec![p.literal(&sc)?];
    while p.eat(&Tok::Comma) {
        first.push(p.literal(&sc)?);
    }
    let (guard, head) = if p.eat(&Tok::Arrow) {
        let mut head = vec![p.literal(&sc)?];
        while p.eat(&Tok::Comma) {
            head.push(p.literal(&sc)?);
        }
        (first, head)
    } else {
        (Vec::new(), first)
    };
    if !p.eat(&Tok::Semi) && !p.at_eof() {
        return Err(p.unexpected("`;` ending the clause"));
    }
    Ok(Clause::new(vars, guard, head))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLOW: &str = "
Base_functions := {(-,2,0,real),(+,2,0,real),(*,2,0,real)}
Extension_functions := {(l, 1, 1)}
Relations := {(<,2),(<=,2),(>,2),(>=,2)}
Constants := {(t0, real), (t1, real), (i, real),
              (o, real), (la, real), (lo, real)}
Clauses :=
(FORALL t). l(t) >= _0;
Query :=
t0 < t1;
l(t0) <= lo;
l(t0) >= la;
l(t1) = l(t0) + ((i - o)*(t1 - t0));
l(t1) >= la;

l(t1) > lo;
";

    #[test]
    fn water_tank_flow() {
        let s = parse_problem(FLOW).unwrap();
        assert_eq!(s.signature.extension.len(), 1);
        assert_eq!(s.level_of("l"), Some(1));
        assert_eq!(s.clauses.len(), 1);
        assert_eq!(s.query.len(), 6);
        assert_eq!(s.clauses[0].vars, vec!["t".to_string()]);
    }

    #[test]
    fn print_parse_stable() {
        let s = parse_problem(FLOW).unwrap();
        let again = parse_problem(&s.to_string()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn empty_clauses() {
        let s = parse_problem("Extension_functions := {}\nClauses :=\nQuery := x < _1; x > _2;").unwrap();
        assert!(s.clauses.is_empty());
        assert_eq!(s.query.len(), 2);
    }

    #[test]
    fn guarded_clause_with_missing_comma() {
        let s = parse_problem(
            "Extension_functions := {(f,1,1) (g,1,2)}\nClauses := (FORALL i). _1 <= i, i <= n --> g(i) = f(i);\nQuery := g(c) > _0;",
        )
        .unwrap();
        assert_eq!(s.clauses[0].guard.len(), 2);
        assert_eq!(s.clause_level(&s.clauses[0]), 2);
    }

    #[test]
    fn diagnostics() {
        let e = parse_problem("Extension_functions := {(f,1)}\nClauses :=\nQuery := f(a) > _0;").unwrap_err();
        assert!(e.0.iter().any(|d| d.message.contains("level omitted")));
        let e = parse_problem("Extension_functions := {(f,1,1)}\nQuery := h(a) > _0;").unwrap_err();
        assert!(e.0[0].message.contains("unknown function"));
        assert_eq!(e.0[0].span.line, 2);
        let e = parse_problem("Extension_functions := {(f,1,1)}\nQuery := f(a, b) > _0;").unwrap_err();
        assert!(e.0[0].message.contains("expects 1"));
        let e = parse_problem("Extension_functions := {(f,1,1)").unwrap_err();
        assert!(e.0[0].message.contains("`}`"));
    }
}
