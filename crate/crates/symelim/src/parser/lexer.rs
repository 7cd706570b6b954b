use num_bigint::BigInt;

use super::{ParseDiagnostic, Span};
use crate::formula::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(Rational),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Dot,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Arrow,
    Define,
    Question,
    Quote,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits `src` into tokens. `%` and `#` start comments running to the end
/// of the line. Numbers are `_k`, `_p/q`, `_d.d` or bare digits.
pub fn lex(src: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < bytes.len() {
        let c = src[i..].chars().next().unwrap_or(' ');
        if c == '\n' {
            line += 1;
            i += 1;
            line_start = i;
            continue;
        }
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c == '%' || c == '#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let col = i - line_start + 1;
        let span = |end: usize| Span { start, end, line, col };
        let rest = &src[i..];
        let two = |s: &str| rest.starts_with(s);
        let (tok, len) = if two("-->") {
            (Tok::Arrow, 3)
        } else if two(":=") {
            (Tok::Define, 2)
        } else if two("<=") {
            (Tok::Le, 2)
        } else if two(">=") {
            (Tok::Ge, 2)
        } else if two("!=") || two("<>") {
            (Tok::Ne, 2)
        } else if c == '_' && rest[1..].starts_with(|d: char| d.is_ascii_digit()) {
            let (r, len) = lex_number(&rest[1..]);
            (Tok::Num(r), len + 1)
        } else if c.is_ascii_digit() {
            let (r, len) = lex_number(rest);
            (Tok::Num(r), len)
        } else if c.is_ascii_alphabetic() {
            let len = rest.find(|d: char| !(d.is_ascii_alphanumeric() || d == '_')).unwrap_or(rest.len());
            (Tok::Ident(rest[..len].to_string()), len)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '=' => Tok::Eq,
                '?' => Tok::Question,
                '\'' => Tok::Quote,
                _ => {
                    let ch = rest.chars().next().unwrap_or(c);
                    return Err(ParseDiagnostic::error(
                        span(i + ch.len_utf8()),
                        format!("unexpected character `{ch}`"),
                    ));
                }
            };
            (t, 1)
        };
        i += len;
        out.push(Token { tok, span: span(i) });
    }
    out.push(Token { tok: Tok::Eof, span: Span { start: i, end: i, line, col: i - line_start + 1 } });
    Ok(out)
}

/// Digits, optionally followed by `.digits` or `/digits`.
fn lex_number(s: &str) -> (Rational, usize) {
    let digits = |t: &str| t.find(|d: char| !d.is_ascii_digit()).unwrap_or(t.len());
    let n = digits(s);
    let whole: BigInt = s[..n].parse().unwrap_or_default();
    let rest = &s[n..];
    if let Some(frac) = rest.strip_prefix('.') {
        let m = digits(frac);
        if m > 0 {
            let num: BigInt = format!("{}{}", &s[..n], &frac[..m]).parse().unwrap_or_default();
            let den = BigInt::from(10).pow(m as u32);
            return (Rational::new(num, den), n + 1 + m);
        }
    }
    if let Some(den) = rest.strip_prefix('/') {
        let m = digits(den);
        if m > 0 {
            let d: BigInt = den[..m].parse().unwrap_or_default();
            if d != BigInt::from(0) {
                return (Rational::new(whole, d), n + 1 + m);
            }
        }
    }
    (Rational::from_integer(whole), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::ratio;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers() {
        assert_eq!(
            toks("_3 _1/2 _2.5 7"),
            vec![Tok::Num(ratio(3, 1)), Tok::Num(ratio(1, 2)), Tok::Num(ratio(5, 2)), Tok::Num(ratio(7, 1)), Tok::Eof]
        );
    }

    #[test]
    fn clause_punctuation() {
        let t = toks("(FORALL i)._1<=i --> in(i) = out(i-_1); % note");
        assert_eq!(t[0], Tok::LParen);
        assert_eq!(t[4], Tok::Dot);
        assert_eq!(t[5], Tok::Num(ratio(1, 1)));
        assert_eq!(t[6], Tok::Le);
        assert!(t.contains(&Tok::Arrow));
        assert_eq!(t[t.len() - 2], Tok::Semi);
    }

    #[test]
    fn spans_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
    }

    #[test]
    fn bad_char() {
        let e = lex("a $ b").unwrap_err();
        assert_eq!(e.span.col, 3);
    }
}
