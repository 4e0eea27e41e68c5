//! Text format for constraint problems, shared with the inference dump:
//! one `a <= b` inequality per line, occurrence constraints as
//! `notin(i, X)`, comments with `--` or `#`. Identifiers starting with `X`
//! followed by digits are meta variables; other lowercase identifiers are
//! index variables; applied identifiers are index symbols.

use crate::constraints::{Meta, SOIndex, Socp};
use crate::index::{IVar, Signature, Sym, SymOrigin};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ConstraintParseError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConstraintParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "constraint file line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ConstraintParseError {}

pub struct ParsedProblem {
    pub socp: Socp,
    pub sig: Signature,
    /// Index variable names in allocation order.
    pub var_names: Vec<String>,
}

struct St {
    sig: Signature,
    vars: BTreeMap<String, IVar>,
    var_names: Vec<String>,
    metas: BTreeMap<String, Meta>,
}

pub fn parse_constraints(text: &str) -> Result<ParsedProblem, ConstraintParseError> {
    let mut st = St {
        sig: Signature::new(),
        vars: BTreeMap::new(),
        var_names: Vec::new(),
        metas: BTreeMap::new(),
    };
    let mut socp = Socp::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line = line.split("--").next().unwrap_or("").trim();
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| ConstraintParseError { line: lineno + 1, msg };
        if let Some(rest) = line.strip_prefix("notin") {
            let rest = rest.trim().trim_start_matches('(').trim_end_matches(')');
            let mut parts = rest.split(',').map(str::trim);
            let v = parts.next().ok_or_else(|| err("missing variable".into()))?;
            let m = parts.next().ok_or_else(|| err("missing meta variable".into()))?;
            let var = st.var(v);
            let meta = st
                .meta(m)
                .ok_or_else(|| err(format!("`{m}` is not a meta variable")))?;
            socp.notin.insert((var, meta));
            continue;
        }
        let mut sides = line.splitn(2, "<=");
        let lhs = sides.next().unwrap().trim();
        let rhs = sides.next().ok_or_else(|| err("expected `<=`".into()))?.trim();
        let a = parse_term(lhs, &mut st).map_err(|m| err(m))?;
        let b = parse_term(rhs, &mut st).map_err(|m| err(m))?;
        socp.push_ineq(a, b);
    }
    Ok(ParsedProblem { socp, sig: st.sig, var_names: st.var_names })
}

impl St {
    fn var(&mut self, name: &str) -> IVar {
        if let Some(v) = self.vars.get(name) {
            return *v;
        }
        let v = IVar(self.vars.len() as u32);
        self.vars.insert(name.to_string(), v);
        self.var_names.push(name.to_string());
        v
    }

    fn meta(&mut self, name: &str) -> Option<Meta> {
        if !is_meta_name(name) {
            return None;
        }
        if let Some(m) = self.metas.get(name) {
            return Some(*m);
        }
        let m = Meta(self.metas.len() as u32);
        self.metas.insert(name.to_string(), m);
        Some(m)
    }

    fn sym(&mut self, name: &str, arity: usize) -> Result<Sym, String> {
        match name {
            "max" => return Ok(Sym::Max),
            "s" => return Ok(Sym::Succ),
            _ => {}
        }
        if let Some(f) = self.sig.by_name(name) {
            if self.sig.arity(f) != arity {
                return Err(format!(
                    "symbol `{name}` used with arity {arity} but declared with {}",
                    self.sig.arity(f)
                ));
            }
            return Ok(Sym::Fresh(f));
        }
        let f = self.sig.fresh_named(name, arity, Some(SymOrigin::External(name.to_string())));
        Ok(Sym::Fresh(f))
    }
}

fn is_meta_name(s: &str) -> bool {
    s.starts_with('X') && s.len() > 1 && s[1..].chars().all(|c| c.is_ascii_digit())
}

// terms: sum of products of atoms
fn parse_term(s: &str, st: &mut St) -> Result<SOIndex, String> {
    let toks = lex(s)?;
    let mut p = TP { toks, pos: 0 };
    let t = p.sum(st)?;
    if p.pos != p.toks.len() {
        return Err(format!("trailing input after term in `{s}`"));
    }
    Ok(t)
}

#[derive(Debug, PartialEq, Clone)]
enum T {
    Ident(String),
    Nat(u64),
    Plus,
    Star,
    LParen,
    RParen,
    Comma,
}

fn lex(s: &str) -> Result<Vec<T>, String> {
    let mut out = Vec::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push(T::Plus);
                i += 1;
            }
            '*' => {
                out.push(T::Star);
                i += 1;
            }
            '(' => {
                out.push(T::LParen);
                i += 1;
            }
            ')' => {
                out.push(T::RParen);
                i += 1;
            }
            ',' => {
                out.push(T::Comma);
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(T::Nat(text.parse().map_err(|_| "number out of range".to_string())?));
            }
            c if c.is_alphanumeric() || c == '_' || c == '\'' || c == '#' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric()
                        || chars[i] == '_'
                        || chars[i] == '\''
                        || chars[i] == '#')
                {
                    i += 1;
                }
                out.push(T::Ident(chars[start..i].iter().collect()));
            }
            c => return Err(format!("unexpected character `{c}`")),
        }
    }
    Ok(out)
}

struct TP {
    toks: Vec<T>,
    pos: usize,
}

impl TP {
    fn peek(&self) -> Option<&T> {
        self.toks.get(self.pos)
    }

    fn sum(&mut self, st: &mut St) -> Result<SOIndex, String> {
        let mut t = self.prod(st)?;
        while self.peek() == Some(&T::Plus) {
            self.pos += 1;
            let u = self.prod(st)?;
            t = SOIndex::App(Sym::Add, vec![t, u]);
        }
        Ok(t)
    }

    fn prod(&mut self, st: &mut St) -> Result<SOIndex, String> {
        let mut t = self.atom(st)?;
        while self.peek() == Some(&T::Star) {
            self.pos += 1;
            let u = self.atom(st)?;
            t = SOIndex::App(Sym::Mul, vec![t, u]);
        }
        Ok(t)
    }

    fn atom(&mut self, st: &mut St) -> Result<SOIndex, String> {
        match self.toks.get(self.pos).cloned() {
            Some(T::Nat(n)) => {
                self.pos += 1;
                let mut t = SOIndex::App(Sym::Zero, vec![]);
                for _ in 0..n {
                    t = SOIndex::App(Sym::Succ, vec![t]);
                }
                Ok(t)
            }
            Some(T::LParen) => {
                self.pos += 1;
                let t = self.sum(st)?;
                if self.peek() != Some(&T::RParen) {
                    return Err("expected `)`".into());
                }
                self.pos += 1;
                Ok(t)
            }
            Some(T::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&T::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() != Some(&T::RParen) {
                        args.push(self.sum(st)?);
                        while self.peek() == Some(&T::Comma) {
                            self.pos += 1;
                            args.push(self.sum(st)?);
                        }
                    }
                    if self.peek() != Some(&T::RParen) {
                        return Err("expected `)`".into());
                    }
                    self.pos += 1;
                    let sym = st.sym(&name, args.len())?;
                    if sym == Sym::Max && args.len() != 2 {
                        return Err("max takes two arguments".into());
                    }
                    Ok(SOIndex::App(sym, args))
                } else if is_meta_name(&name) {
                    Ok(SOIndex::Meta(st.meta(&name).unwrap()))
                } else {
                    Ok(SOIndex::Var(st.var(&name)))
                }
            }
            other => Err(format!("expected a term, found {other:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_focp_lines() {
        let text = "\
-- a small problem
i1 + 1 <= f(i1)
f(i2) <= g(i2, 3)
";
        let p = parse_constraints(text).unwrap();
        assert_eq!(p.socp.ineqs.len(), 2);
        assert_eq!(p.socp.metas().len(), 0);
        assert_eq!(p.sig.len(), 2);
    }

    #[test]
    fn parses_metas_and_notin() {
        let text = "\
i <= X7
notin(j, X7)
max(i, j) <= k
";
        let p = parse_constraints(text).unwrap();
        assert_eq!(p.socp.ineqs.len(), 2);
        assert_eq!(p.socp.metas().len(), 1);
        assert_eq!(p.socp.notin.len(), 1);
    }

    #[test]
    fn roundtrip_with_render() {
        let text = "i1 + 1 <= f1(i1)\nf1(i2) <= f2(i2)\n";
        let p = parse_constraints(text).unwrap();
        let rendered = p.socp.render(&p.sig);
        let p2 = parse_constraints(&rendered).unwrap();
        assert_eq!(p2.socp.ineqs.len(), 2);
    }
}
