//! The YAML subset used by task files: nested mappings by indentation,
//! scalars, flow lists `[a, "b c"]`, block lists `- a`, literal blocks `|`,
//! and anchors `&name` / aliases `*name` on mapping values.

use std::collections::BTreeMap;

use super::{ParseDiagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Node {
    Scalar(String, usize),
    List(Vec<(String, usize)>, usize),
    /// Literal block text and the line of its first content line.
    Block(String, usize, usize),
    Map(Vec<(String, Node, usize)>),
}

impl Node {
    pub fn get(&self, key: &str) -> Option<&Node> {
        match self {
            Node::Map(es) => es.iter().find(|(k, _, _)| k == key).map(|(_, n, _)| n),
            _ => None,
        }
    }

    pub fn line(&self) -> usize {
        match self {
            Node::Scalar(_, l) | Node::List(_, l) | Node::Block(_, l, _) => *l,
            Node::Map(es) => es.first().map_or(0, |e| e.2),
        }
    }
}

fn at_line(line: usize, msg: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic::error(Span { start: 0, end: 0, line, col: 1 }, msg)
}

fn indent_of(s: &str) -> usize {
    s.len() - s.trim_start_matches(' ').len()
}

fn is_skippable(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.starts_with('#') || t.starts_with('%')
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    anchors: BTreeMap<String, Node>,
}

pub(crate) fn parse(text: &str) -> Result<Node, ParseDiagnostic> {
    let mut r = Reader { lines: text.lines().collect(), pos: 0, anchors: BTreeMap::new() };
    r.skip();
    if r.pos >= r.lines.len() {
        return Ok(Node::Map(Vec::new()));
    }
    let ind = indent_of(r.lines[r.pos]);
    if ind != 0 {
        return Err(at_line(r.pos + 1, "top-level keys must not be indented"));
    }
    let node = r.map(0)?;
    r.skip();
    if r.pos < r.lines.len() {
        return Err(at_line(r.pos + 1, "unexpected indentation"));
    }
    Ok(node)
}

impl Reader<'_> {
    fn skip(&mut self) {
        while self.pos < self.lines.len() && is_skippable(self.lines[self.pos]) {
            self.pos += 1;
        }
    }

    fn map(&mut self, ind: usize) -> Result<Node, ParseDiagnostic> {
        let mut out: Vec<(String, Node, usize)> = Vec::new();
        loop {
            self.skip();
            if self.pos >= self.lines.len() {
                break;
            }
            let raw = self.lines[self.pos];
            let here = indent_of(raw);
            if here < ind {
                break;
            }
            if here > ind {
                return Err(at_line(self.pos + 1, "unexpected indentation"));
            }
            let line = self.pos + 1;
            let content = raw.trim();
            let (key, rest) =
                split_key(content).ok_or_else(|| at_line(line, format!("expected `key: value`, found `{content}`")))?;
            if out.iter().any(|(k, _, _)| *k == key) {
                return Err(at_line(line, format!("duplicate key `{key}`")));
            }
            self.pos += 1;
            let node = self.value(rest, ind, line)?;
            out.push((key, node, line));
        }
        Ok(Node::Map(out))
    }

    fn value(&mut self, rest: &str, ind: usize, line: usize) -> Result<Node, ParseDiagnostic> {
        let rest = rest.trim();
        if let Some(a) = rest.strip_prefix('&') {
            let a = a.trim_start();
            let (name, after) = a.split_once(char::is_whitespace).unwrap_or((a, ""));
            if name.is_empty() {
                return Err(at_line(line, "anchor without a name"));
            }
            let node = self.value(after, ind, line)?;
            self.anchors.insert(name.to_string(), node.clone());
            return Ok(node);
        }
        if let Some(a) = rest.strip_prefix('*') {
            return self
                .anchors
                .get(a.trim())
                .cloned()
                .ok_or_else(|| at_line(line, format!("unknown alias `*{}`", a.trim())));
        }
        if rest == "|" || rest == "|-" || rest == "|+" {
            return Ok(self.block(ind));
        }
        if rest.starts_with('[') {
            let mut text = rest.to_string();
            while !balanced_list(&text) && self.pos < self.lines.len() {
                text.push(' ');
                text.push_str(self.lines[self.pos].trim());
                self.pos += 1;
            }
            let inner = text
                .trim()
                .strip_prefix('[')
                .and_then(|t| t.strip_suffix(']'))
                .ok_or_else(|| at_line(line, "unterminated list"))?;
            let items = split_items(inner).into_iter().map(|s| (s, line)).collect();
            return Ok(Node::List(items, line));
        }
        if !rest.is_empty() {
            return Ok(Node::Scalar(unquote(strip_comment(rest)), line));
        }
        // nested mapping or block list
        self.skip();
        if self.pos >= self.lines.len() || indent_of(self.lines[self.pos]) <= ind {
            return Ok(Node::Scalar(String::new(), line));
        }
        let child = indent_of(self.lines[self.pos]);
        if self.lines[self.pos].trim_start().starts_with("- ") || self.lines[self.pos].trim() == "-" {
            let mut items = Vec::new();
            loop {
                self.skip();
                if self.pos >= self.lines.len() || indent_of(self.lines[self.pos]) != child {
                    break;
                }
                let t = self.lines[self.pos].trim();
                let Some(item) = t.strip_prefix('-') else { break };
                items.push((unquote(item.trim()), self.pos + 1));
                self.pos += 1;
            }
            return Ok(Node::List(items, line));
        }
        self.map(child)
    }

    /// Lines indented deeper than `ind`, dedented by the first one's indent.
    fn block(&mut self, ind: usize) -> Node {
        let start = self.pos;
        let mut end = self.pos;
        while end < self.lines.len() {
            let l = self.lines[end];
            if !l.trim().is_empty() && indent_of(l) <= ind {
                break;
            }
            end += 1;
        }
        let body = &self.lines[start..end];
        let base = body.iter().filter(|l| !l.trim().is_empty()).map(|l| indent_of(l)).min().unwrap_or(0);
        let text: Vec<&str> = body.iter().map(|l| if l.len() >= base { &l[base..] } else { "" }).collect();
        self.pos = end;
        Node::Block(text.join("\n") + "\n", start + 1, base)
    }
}

fn split_key(content: &str) -> Option<(String, &str)> {
    let idx = content.find(": ").or_else(|| content.strip_suffix(':').map(|k| k.len()))?;
    let key = content[..idx].trim();
    if key.is_empty() {
        return None;
    }
    let rest = if idx < content.len() { &content[idx + 1..] } else { "" };
    Some((unquote(key), rest))
}

/// Drops a trailing ` # comment` outside quotes.
fn strip_comment(s: &str) -> &str {
    let mut quote = None;
    let b = s.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (None, b'"') | (None, b'\'') => quote = Some(c),
            (None, b'#') if i > 0 && b[i - 1] == b' ' => return s[..i].trim_end(),
            _ => {}
        }
    }
    s
}

fn balanced_list(s: &str) -> bool {
    s.trim_end().ends_with(']')
}

/// Splits on top-level commas, respecting quotes and brackets.
fn split_items(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut cur = String::new();
    for c in s.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => {
                quote = None;
                cur.push(c);
            }
            (Some(_), c) => cur.push(c),
            (None, '"') | (None, '\'') => {
                quote = Some(c);
                cur.push(c);
            }
            (None, '(') | (None, '[') => {
                depth += 1;
                cur.push(c);
            }
            (None, ')') | (None, ']') => {
                depth -= 1;
                cur.push(c);
            }
            (None, ',') if depth == 0 => {
                out.push(unquote(cur.trim()));
                cur.clear();
            }
            (None, c) => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        out.push(unquote(cur.trim()));
    }
    out
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    for q in ['"', '\''] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return s[1..s.len() - 1].to_string();
        }
    }
    s.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_map_lists_and_block() {
        let src = "tasks:\n  a:\n    mode: X\n    options:\n      parameter: [i, o]\n      assumptions: [t0<t1,\"0 <= out(?)\"]\n    spec: &s\n      file: |\n        line one\n\n          two\n  b:\n    spec: *s\n";
        let n = parse(src).unwrap();
        let a = n.get("tasks").unwrap().get("a").unwrap();
        assert_eq!(a.get("mode"), Some(&Node::Scalar("X".into(), 3)));
        match a.get("options").unwrap().get("assumptions").unwrap() {
            Node::List(xs, _) => assert_eq!(xs[1].0, "0 <= out(?)"),
            other => panic!("{other:?}"),
        }
        match a.get("spec").unwrap().get("file").unwrap() {
            Node::Block(t, first, _) => {
                assert_eq!(t, "line one\n\n  two\n");
                assert_eq!(*first, 9);
            }
            other => panic!("{other:?}"),
        }
        let b = n.get("tasks").unwrap().get("b").unwrap();
        assert_eq!(b.get("spec"), a.get("spec"));
    }

    #[test]
    fn spaced_anchor_and_comments() {
        let src = "# header\nk: & x\n  v: 1 # trailing\n% also skipped\n";
        let n = parse(src).unwrap();
        assert_eq!(n.get("k").unwrap().get("v"), Some(&Node::Scalar("1".into(), 3)));
    }

    #[test]
    fn block_list() {
        let n = parse("k:\n  - a\n  - \"b c\"\n").unwrap();
        assert_eq!(n.get("k"), Some(&Node::List(vec![("a".into(), 2), ("b c".into(), 3)], 1)));
    }

    #[test]
    fn empty_document() {
        assert_eq!(parse("\n# nothing\n").unwrap(), Node::Map(Vec::new()));
    }

    #[test]
    fn bad_indentation() {
        assert!(parse("a:\n  b: 1\n c: 2\n").is_err());
    }
}
