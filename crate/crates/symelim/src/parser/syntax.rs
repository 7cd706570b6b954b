//! Recursive-descent parsing of terms, literals and dialect formulas.

use std::collections::BTreeMap;

use super::lexer::{lex, Tok, Token};
use super::problem::Literal;
use super::{ParseDiagnostic, ParseErrors, Span};
use crate::formula::{Atom, Formula, Rel, Term};

/// Name resolution for identifiers while parsing.
#[derive(Clone, Copy, Default)]
pub(crate) struct Scope<'a> {
    /// Quantified variables in scope.
    pub bound: &'a [String],
    /// Known function symbols with arities; `None` accepts any application.
    pub functions: Option<&'a BTreeMap<String, usize>>,
    /// Variable name `?` stands for, if wildcards are allowed.
    pub wildcard: Option<&'a str>,
}

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseDiagnostic>;

impl Parser {
    pub fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    /// A parser over a token slice that already ends in `Eof`.
    pub fn from_tokens(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok, what: &str) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(what))
        }
    }

    pub fn unexpected(&self, what: &str) -> ParseDiagnostic {
        let found = match self.peek() {
            Tok::Eof => "end of input".to_string(),
            Tok::Ident(s) => format!("`{s}`"),
            t => format!("{t:?}"),
        };
        ParseDiagnostic::error(self.span(), format!("expected {what}, found {found}"))
    }

    pub fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(what)),
        }
    }

    /// Skips past the next `stop` token (or to the end) after an error.
    pub fn recover(&mut self, stop: &Tok) {
        while !self.at_eof() {
            if self.bump().tok == *stop {
                return;
            }
        }
    }

    pub fn term(&mut self, sc: &Scope) -> PResult<Term> {
        let mut lhs = self.product(sc)?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Term::Add(Box::new(lhs), Box::new(self.product(sc)?));
            } else if *self.peek() == Tok::Minus {
                self.bump();
                lhs = Term::Sub(Box::new(lhs), Box::new(self.product(sc)?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self, sc: &Scope) -> PResult<Term> {
        let mut lhs = self.unary(sc)?;
        while self.eat(&Tok::Star) {
            lhs = Term::Mul(Box::new(lhs), Box::new(self.unary(sc)?));
        }
        Ok(lhs)
    }

    fn unary(&mut self, sc: &Scope) -> PResult<Term> {
        if self.eat(&Tok::Minus) {
            return Ok(Term::Neg(Box::new(self.unary(sc)?)));
        }
        self.primary(sc)
    }

    fn primary(&mut self, sc: &Scope) -> PResult<Term> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Num(r) => {
                self.bump();
                Ok(Term::Num(r))
            }
            Tok::LParen => {
                self.bump();
                let t = self.term(sc)?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Question => {
                self.bump();
                match sc.wildcard {
                    Some(v) => Ok(Term::Var(v.to_string())),
                    None => Err(ParseDiagnostic::error(span, "wildcard `?` is only allowed in assumptions")),
                }
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.term(sc)?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.term(sc)?);
                    }
                    self.expect(&Tok::RParen, "`)` closing the argument list")?;
                    if let Some(fs) = sc.functions {
                        match fs.get(&name) {
                            None => {
                                return Err(ParseDiagnostic::error(span, format!("unknown function symbol `{name}`")))
                            }
                            Some(&n) if n != args.len() => {
                                return Err(ParseDiagnostic::error(
                                    span,
                                    format!("`{name}` expects {n} argument(s), got {}", args.len()),
                                ))
                            }
                            _ => {}
                        }
                    }
                    Ok(Term::App(name, args))
                } else if sc.bound.contains(&name) {
                    Ok(Term::Var(name))
                } else {
                    Ok(Term::Const(name))
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    pub fn rel(&mut self) -> PResult<Rel> {
        let r = match self.peek() {
            Tok::Lt => Rel::LT,
            Tok::Le => Rel::LE,
            Tok::Gt => Rel::GT,
            Tok::Ge => Rel::GE,
            Tok::Eq => Rel::EQ,
            Tok::Ne => Rel::NE,
            _ => return Err(self.unexpected("a relation")),
        };
        self.bump();
        Ok(r)
    }

    pub fn literal(&mut self, sc: &Scope) -> PResult<Literal> {
        let lhs = self.term(sc)?;
        let rel = self.rel()?;
        let rhs = self.term(sc)?;
        Ok(Literal { lhs, rel, rhs })
    }

    /// `(FORALL x, y).` style binder; the opening parenthesis is current.
    pub fn binder(&mut self) -> PResult<(bool, Vec<String>)> {
        self.expect(&Tok::LParen, "`(`")?;
        let (kw, span) = self.ident("FORALL or EXISTS")?;
        let universal = match kw.as_str() {
            "FORALL" => true,
            "EXISTS" => false,
            _ => return Err(ParseDiagnostic::error(span, "expected FORALL or EXISTS")),
        };
        let mut vars = vec![self.ident("a variable")?.0];
        while self.eat(&Tok::Comma) {
            vars.push(self.ident("a variable")?.0);
        }
        self.expect(&Tok::RParen, "`)` after the bound variables")?;
        self.eat(&Tok::Dot);
        Ok((universal, vars))
    }

    pub fn at_binder(&self) -> bool {
        *self.peek() == Tok::LParen && matches!(self.peek_at(1), Tok::Ident(k) if k == "FORALL" || k == "EXISTS")
    }

    pub fn formula(&mut self, sc: &Scope) -> PResult<Formula> {
        if self.at_binder() {
            let (universal, vars) = self.binder()?;
            let mut bound = sc.bound.to_vec();
            bound.extend(vars.iter().cloned());
            let inner = Scope { bound: &bound, ..*sc };
            let body = self.formula(&inner)?;
            return Ok(if universal { Formula::forall(vars, body) } else { Formula::exists(vars, body) });
        }
        if self.eat(&Tok::Quote) {
            let f = self.formula(sc)?;
            self.expect(&Tok::Quote, "closing quote")?;
            return Ok(f);
        }
        if let Tok::Ident(k) = self.peek().clone() {
            let call = *self.peek_at(1) == Tok::LParen;
            match k.as_str() {
                "true" if !call => {
                    self.bump();
                    return Ok(Formula::True);
                }
                "false" if !call => {
                    self.bump();
                    return Ok(Formula::False);
                }
                "AND" | "OR" | "NOT" | "IMPL" if call => {
                    self.bump();
                    self.bump();
                    let mut xs = vec![self.formula(sc)?];
                    while self.eat(&Tok::Comma) {
                        xs.push(self.formula(sc)?);
                    }
                    self.expect(&Tok::RParen, "`)`")?;
                    return match (k.as_str(), xs.len()) {
                        ("AND", _) => Ok(Formula::and(xs)),
                        ("OR", _) => Ok(Formula::or(xs)),
                        ("NOT", 1) => Ok(Formula::not(xs.pop().unwrap_or(Formula::True))),
                        ("IMPL", 2) => {
                            let b = xs.pop().unwrap_or(Formula::True);
                            let a = xs.pop().unwrap_or(Formula::True);
                            Ok(Formula::implies(a, b))
                        }
                        _ => Err(ParseDiagnostic::error(self.span(), format!("wrong number of operands for {k}"))),
                    };
                }
                _ => {}
            }
        }
        let lit = self.literal(sc)?;
        Ok(lit.to_formula())
    }
}

/// Parses a formula in the printed dialect (`AND(..)`, `OR(..)`, `NOT(..)`,
/// `IMPL(a, b)`, `(FORALL x). f`, `_k` literals). Unbound identifiers are
/// constants; `?` is not allowed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseErrors> {
    let mut p = Parser::new(text)?;
    let f = p.formula(&Scope::default())?;
    if !p.at_eof() {
        return Err(p.unexpected("end of formula").into());
    }
    Ok(f)
}

impl Literal {
    pub fn to_formula(&self) -> Formula {
        Atom::compare(&self.lhs.to_poly(), self.rel, &self.rhs.to_poly())
    }
}
