//! Parser for the Haskell-like, layout-free source syntax.
//!
//! Each definition occupies one line: `data` declarations, `f :: type`
//! signatures, and equations `f p1 .. pk = term`. Comments start with `--`.
//! Sugar: `[t]` list types, `[]` / `[a, b]` / `x : xs` lists, integer
//! literals for `S^n Z`, `(:)` for the cons constructor, pairs `(a, b)`,
//! `let (x, y) = e in e'`, lambdas `\x y. e`.

use crate::syntax::*;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub struct ParseError {
    pub msg: String,
    pub span: Span,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}: {}", self.span, self.msg)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Lower(String),
    Upper(String),
    Int(u64),
    ColonColon,
    Arrow,
    Equals,
    Pipe,
    Backslash,
    Dot,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Data,
    Let,
    In,
}

#[derive(Clone, Debug)]
struct SpTok {
    tok: Tok,
    span: Span,
}

fn lex_line(line: &str, lineno: u32) -> Result<Vec<SpTok>, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line: lineno, col: i as u32 + 1 };
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            break;
        }
        let tok = match c {
            '(' => { i += 1; Tok::LParen }
            ')' => { i += 1; Tok::RParen }
            '[' => { i += 1; Tok::LBracket }
            ']' => { i += 1; Tok::RBracket }
            ',' => { i += 1; Tok::Comma }
            '\\' => { i += 1; Tok::Backslash }
            '.' => { i += 1; Tok::Dot }
            '|' => { i += 1; Tok::Pipe }
            '=' => { i += 1; Tok::Equals }
            '-' if chars.get(i + 1) == Some(&'>') => { i += 2; Tok::Arrow }
            ':' if chars.get(i + 1) == Some(&':') => { i += 2; Tok::ColonColon }
            ':' => { i += 1; Tok::Colon }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                Tok::Int(s.parse().map_err(|_| ParseError {
                    msg: format!("integer literal `{s}` out of range"),
                    span,
                })?)
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                match s.as_str() {
                    "data" => Tok::Data,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    _ if c.is_uppercase() => Tok::Upper(s),
                    _ => Tok::Lower(s),
                }
            }
            c => {
                return Err(ParseError { msg: format!("unexpected character `{c}`"), span });
            }
        };
        toks.push(SpTok { tok, span });
    }
    Ok(toks)
}

struct P {
    toks: Vec<SpTok>,
    pos: usize,
    line_end: Span,
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.line_end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            got => Err(self.err_at(format!(
                "expected {what}, found {}",
                got.map(|t| format!("{t:?}")).unwrap_or_else(|| "end of line".into())
            ))),
        }
    }

    fn err_at(&self, msg: String) -> ParseError {
        let span = self.toks.get(self.pos.saturating_sub(1)).map(|t| t.span).unwrap_or(self.line_end);
        ParseError { msg, span }
    }

    fn err_here(&self, msg: String) -> ParseError {
        ParseError { msg, span: self.span() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    // ---- types ----

    fn ty(&mut self, vars: &mut BTreeMap<String, TyVar>, next: &mut u32) -> Result<SimpleType, ParseError> {
        let lhs = self.bty(vars, next)?;
        if self.peek() == Some(&Tok::Arrow) {
            self.next();
            let rhs = self.ty(vars, next)?;
            Ok(SimpleType::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn bty(&mut self, vars: &mut BTreeMap<String, TyVar>, next: &mut u32) -> Result<SimpleType, ParseError> {
        let first = self.aty(vars, next)?;
        if let SimpleType::Data(name, args) = &first {
            if args.is_empty() {
                let mut applied = Vec::new();
                while self.starts_aty() {
                    applied.push(self.aty(vars, next)?);
                }
                if !applied.is_empty() {
                    return Ok(SimpleType::Data(name.clone(), applied));
                }
            }
        }
        if self.starts_aty() {
            return Err(self.err_here("type application head must be a data type name".into()));
        }
        Ok(first)
    }

    fn starts_aty(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Lower(_)) | Some(Tok::Upper(_)) | Some(Tok::LParen) | Some(Tok::LBracket)
        )
    }

    fn aty(&mut self, vars: &mut BTreeMap<String, TyVar>, next: &mut u32) -> Result<SimpleType, ParseError> {
        match self.next() {
            Some(Tok::Lower(v)) => {
                let tv = *vars.entry(v).or_insert_with(|| {
                    let tv = TyVar(*next);
                    *next += 1;
                    tv
                });
                Ok(SimpleType::Var(tv))
            }
            Some(Tok::Upper(d)) => Ok(SimpleType::Data(d, vec![])),
            Some(Tok::LBracket) => {
                let t = self.ty(vars, next)?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(SimpleType::list(t))
            }
            Some(Tok::LParen) => {
                let t = self.ty(vars, next)?;
                if self.peek() == Some(&Tok::Comma) {
                    self.next();
                    let u = self.ty(vars, next)?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(SimpleType::pair(t, u))
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(t)
                }
            }
            _ => Err(self.err_at("expected a type".into())),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> Result<Term, ParseError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Let) => {
                self.next();
                self.expect(Tok::LParen, "`(` after let")?;
                let left = self.lower_name()?;
                self.expect(Tok::Comma, "`,`")?;
                let right = self.lower_name()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Equals, "`=`")?;
                let rhs = self.term()?;
                self.expect(Tok::In, "`in`")?;
                let body = self.term()?;
                Ok(Term::new(
                    TermKind::LetPair { left, right, rhs: Box::new(rhs), body: Box::new(body) },
                    span,
                ))
            }
            Some(Tok::Backslash) => {
                self.next();
                let mut params = vec![self.lower_name()?];
                while let Some(Tok::Lower(_)) = self.peek() {
                    params.push(self.lower_name()?);
                }
                self.expect(Tok::Dot, "`.` after lambda binders")?;
                let body = self.term()?;
                Ok(Term::new(TermKind::Lam { params, body: Box::new(body) }, span))
            }
            _ => self.cons_term(),
        }
    }

    fn cons_term(&mut self) -> Result<Term, ParseError> {
        let lhs = self.app_term()?;
        if self.peek() == Some(&Tok::Colon) {
            let span = self.span();
            self.next();
            let rhs = self.cons_term()?;
            let con = Term::new(TermKind::Con("Cons".into()), span);
            Ok(Term::app(Term::app(con, lhs), rhs))
        } else {
            Ok(lhs)
        }
    }

    fn app_term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.atom_term()?;
        while self.starts_atom() {
            let a = self.atom_term()?;
            t = Term::app(t, a);
        }
        Ok(t)
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Lower(_)) | Some(Tok::Upper(_)) | Some(Tok::Int(_)) | Some(Tok::LParen)
                | Some(Tok::LBracket)
        )
    }

    fn atom_term(&mut self) -> Result<Term, ParseError> {
        let span = self.span();
        match self.next() {
            Some(Tok::Lower(x)) => Ok(Term::var(&x, span)),
            Some(Tok::Upper(c)) => Ok(Term::new(TermKind::Con(c), span)),
            Some(Tok::Int(n)) => Ok(nat_literal(n, span)),
            Some(Tok::LBracket) => {
                let mut elems = Vec::new();
                if self.peek() != Some(&Tok::RBracket) {
                    elems.push(self.term()?);
                    while self.peek() == Some(&Tok::Comma) {
                        self.next();
                        elems.push(self.term()?);
                    }
                }
                self.expect(Tok::RBracket, "`]`")?;
                let mut t = Term::new(TermKind::Con("Nil".into()), span);
                for e in elems.into_iter().rev() {
                    let con = Term::new(TermKind::Con("Cons".into()), span);
                    t = Term::app(Term::app(con, e), t);
                }
                Ok(t)
            }
            Some(Tok::LParen) => {
                if self.peek() == Some(&Tok::Colon) {
                    self.next();
                    self.expect(Tok::RParen, "`)` after `:`")?;
                    return Ok(Term::new(TermKind::Con("Cons".into()), span));
                }
                let t = self.term()?;
                if self.peek() == Some(&Tok::Comma) {
                    self.next();
                    let u = self.term()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(Term::new(TermKind::Pair(Box::new(t), Box::new(u)), span))
                } else {
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(t)
                }
            }
            _ => Err(self.err_at("expected a term".into())),
        }
    }

    fn lower_name(&mut self) -> Result<Name, ParseError> {
        match self.next() {
            Some(Tok::Lower(x)) => Ok(x),
            _ => Err(self.err_at("expected an identifier".into())),
        }
    }
}

fn nat_literal(n: u64, span: Span) -> Term {
    let mut t = Term::new(TermKind::Con("Z".into()), span);
    for _ in 0..n {
        let s = Term::new(TermKind::Con("S".into()), span);
        t = Term::app(s, t);
    }
    t
}

/// Parses a whole source file into a `Program`. Lambdas are still present;
/// no type inference is performed.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let mut datas = Program::builtin_datas();
    let mut sigs: BTreeMap<Name, Scheme> = BTreeMap::new();
    let mut declared = std::collections::BTreeSet::new();
    let mut equations: Vec<Equation> = Vec::new();
    let mut funs: Vec<Name> = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx as u32 + 1;
        let toks = lex_line(line, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let line_end = Span { line: lineno, col: line.chars().count() as u32 + 1 };
        let mut p = P { toks, pos: 0, line_end };
        match p.peek() {
            Some(Tok::Data) => {
                p.next();
                let name = match p.next() {
                    Some(Tok::Upper(n)) => n,
                    _ => return Err(p.err_at("expected a data type name".into())),
                };
                if datas.iter().any(|d| d.name == name) {
                    return Err(p.err_at(format!("data type `{name}` is already defined")));
                }
                let mut vars = BTreeMap::new();
                let mut next = 0u32;
                let mut params = Vec::new();
                while let Some(Tok::Lower(_)) = p.peek() {
                    let v = p.lower_name()?;
                    if vars.contains_key(&v) {
                        return Err(p.err_at(format!("duplicate type parameter `{v}`")));
                    }
                    let tv = TyVar(next);
                    next += 1;
                    vars.insert(v, tv);
                    params.push(tv);
                }
                p.expect(Tok::Equals, "`=`")?;
                let mut ctors = Vec::new();
                loop {
                    let cname = match p.next() {
                        Some(Tok::Upper(n)) => n,
                        _ => return Err(p.err_at("expected a constructor name".into())),
                    };
                    let mut args = Vec::new();
                    while p.starts_aty() {
                        args.push(p.aty(&mut vars, &mut next)?);
                    }
                    ctors.push(CtorDecl { name: cname, args, data: name.clone() });
                    match p.peek() {
                        Some(Tok::Pipe) => {
                            p.next();
                        }
                        None => break,
                        _ => return Err(p.err_here("expected `|` or end of line".into())),
                    }
                }
                datas.push(DataDecl { name, params, ctors });
            }
            Some(Tok::Lower(_)) => {
                // signature or equation
                let save = p.pos;
                let name = p.lower_name()?;
                if p.peek() == Some(&Tok::ColonColon) {
                    p.next();
                    let mut vars = BTreeMap::new();
                    let mut next = 0u32;
                    let ty = p.ty(&mut vars, &mut next)?;
                    if !p.at_end() {
                        return Err(p.err_here("trailing input after type signature".into()));
                    }
                    let scheme_vars: Vec<TyVar> = {
                        let mut vs = std::collections::BTreeSet::new();
                        ty.free_vars(&mut vs);
                        vs.into_iter().collect()
                    };
                    if sigs.contains_key(&name) {
                        return Err(p.err_at(format!("duplicate signature for `{name}`")));
                    }
                    sigs.insert(name.clone(), Scheme { vars: scheme_vars, ty });
                    declared.insert(name.clone());
                    if !funs.contains(&name) {
                        funs.push(name);
                    }
                } else {
                    p.pos = save;
                    let span = p.span();
                    let lhs = p.app_term()?;
                    p.expect(Tok::Equals, "`=`")?;
                    let rhs = p.term()?;
                    if !p.at_end() {
                        return Err(p.err_here("trailing input after equation".into()));
                    }
                    let fun = match lhs.head_name() {
                        Some(n) => n.clone(),
                        None => return Err(ParseError {
                            msg: "equation left-hand side must start with a function name".into(),
                            span,
                        }),
                    };
                    if !funs.contains(&fun) {
                        funs.push(fun);
                    }
                    equations.push(Equation { lhs, rhs, span });
                }
            }
            _ => {
                return Err(p.err_here("expected a data declaration, signature, or equation".into()));
            }
        }
    }

    let mut prog = Program { datas, sigs, declared, equations, funs };
    resolve(&mut prog)?;
    Ok(prog)
}

/// Rewrites `Var` nodes that refer to functions into `Fun` nodes and checks
/// that every identifier is known.
fn resolve(prog: &mut Program) -> Result<(), ParseError> {
    let fun_names: std::collections::BTreeSet<Name> = prog.funs.iter().cloned().collect();
    let ctor_names: std::collections::BTreeSet<Name> =
        prog.datas.iter().flat_map(|d| d.ctors.iter().map(|c| c.name.clone())).collect();

    fn go(
        t: &mut Term,
        bound: &mut Vec<Name>,
        funs: &std::collections::BTreeSet<Name>,
        ctors: &std::collections::BTreeSet<Name>,
        in_pattern: bool,
    ) -> Result<(), ParseError> {
        match &mut t.kind {
            TermKind::Var(x) => {
                if !bound.contains(x) && !in_pattern {
                    if funs.contains(x) {
                        t.kind = TermKind::Fun(x.clone());
                    } else {
                        return Err(ParseError {
                            msg: format!("unknown identifier `{x}`"),
                            span: t.span,
                        });
                    }
                }
                Ok(())
            }
            TermKind::Con(c) => {
                if !ctors.contains(c) {
                    return Err(ParseError { msg: format!("unknown constructor `{c}`"), span: t.span });
                }
                Ok(())
            }
            TermKind::Fun(_) => Ok(()),
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                go(a, bound, funs, ctors, in_pattern)?;
                go(b, bound, funs, ctors, in_pattern)
            }
            TermKind::LetPair { left, right, rhs, body } => {
                go(rhs, bound, funs, ctors, in_pattern)?;
                bound.push(left.clone());
                bound.push(right.clone());
                go(body, bound, funs, ctors, in_pattern)?;
                bound.pop();
                bound.pop();
                Ok(())
            }
            TermKind::Lam { params, body } => {
                let n = params.len();
                bound.extend(params.iter().cloned());
                go(body, bound, funs, ctors, in_pattern)?;
                bound.truncate(bound.len() - n);
                Ok(())
            }
        }
    }

    let mut eqs = std::mem::take(&mut prog.equations);
    for eq in &mut eqs {
        // lhs: head is a function, arguments are patterns whose variables bind.
        let (head_span, fun) = {
            let (h, _) = eq.lhs.spine();
            (h.span, eq.fun_name().clone())
        };
        set_head_fun(&mut eq.lhs, &fun, head_span)?;
        check_pattern_syntax(&eq.lhs, &ctor_names, true)?;
        let mut pattern_vars: Vec<Name> = Vec::new();
        collect_pattern_vars(&eq.lhs, &mut pattern_vars);
        if !eq.lhs.is_linear() {
            return Err(ParseError {
                msg: format!("non-linear left-hand side in equation for `{fun}`"),
                span: eq.span,
            });
        }
        go(&mut eq.rhs, &mut pattern_vars, &fun_names, &ctor_names, false)?;
    }
    prog.equations = eqs;
    Ok(())
}

fn set_head_fun(lhs: &mut Term, fun: &Name, span: Span) -> Result<(), ParseError> {
    match &mut lhs.kind {
        TermKind::Var(x) if x == fun => {
            lhs.kind = TermKind::Fun(fun.clone());
            Ok(())
        }
        TermKind::Fun(_) => Ok(()),
        TermKind::App(f, _) => set_head_fun(f, fun, span),
        _ => Err(ParseError { msg: "malformed equation left-hand side".into(), span }),
    }
}

fn collect_pattern_vars(lhs: &Term, out: &mut Vec<Name>) {
    match &lhs.kind {
        TermKind::Var(x) => out.push(x.clone()),
        TermKind::App(a, b) => {
            collect_pattern_vars(a, out);
            collect_pattern_vars(b, out);
        }
        _ => {}
    }
}

/// Patterns may only contain variables and constructor applications.
fn check_pattern_syntax(
    lhs: &Term,
    ctors: &std::collections::BTreeSet<Name>,
    is_head: bool,
) -> Result<(), ParseError> {
    match &lhs.kind {
        TermKind::Fun(_) if is_head => Ok(()),
        TermKind::App(f, a) if is_head => {
            check_pattern_syntax(f, ctors, true)?;
            check_pattern_syntax(a, ctors, false)
        }
        TermKind::Var(_) => Ok(()),
        TermKind::Con(c) => {
            if ctors.contains(c) {
                Ok(())
            } else {
                Err(ParseError { msg: format!("unknown constructor `{c}`"), span: lhs.span })
            }
        }
        TermKind::App(f, a) => {
            check_pattern_syntax(f, ctors, false)?;
            check_pattern_syntax(a, ctors, false)
        }
        TermKind::Pair(..) | TermKind::LetPair { .. } => Err(ParseError {
            msg: "patterns may not destructure pairs".into(),
            span: lhs.span,
        }),
        _ => Err(ParseError { msg: "invalid pattern".into(), span: lhs.span }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_reverse_program() {
        let src = "\
rev :: [a] -> [a] -> [a]
rev [] ys = ys
rev (x : xs) ys = rev xs (x : ys)

reverse :: [a] -> [a]
reverse xs = rev xs []
";
        let p = parse_program(src).unwrap();
        assert_eq!(p.funs, vec!["rev".to_string(), "reverse".to_string()]);
        assert_eq!(p.equations.len(), 3);
        assert_eq!(p.fun_arity("rev"), Some(2));
    }

    #[test]
    fn parses_identity() {
        let p = parse_program("id :: a -> a\nid x = x\n").unwrap();
        assert_eq!(p.funs.len(), 1);
        assert_eq!(p.equations.len(), 1);
    }

    #[test]
    fn rejects_nonlinear_lhs() {
        let err = parse_program("f x x = x\n").unwrap_err();
        assert!(err.msg.contains("non-linear"), "{err}");
    }

    #[test]
    fn rejects_unknown_identifier() {
        let err = parse_program("f x = g x\n").unwrap_err();
        assert!(err.msg.contains("unknown identifier"), "{err}");
    }

    #[test]
    fn parses_sugar() {
        let p = parse_program("f x = 2 : [x, 1]\n").unwrap();
        let rhs = &p.equations[0].rhs;
        let printed = format!("{rhs}");
        assert_eq!(printed, "Cons (S (S Z)) (Cons x (Cons (S Z) Nil))");
    }

    #[test]
    fn parses_lambda_and_pairs() {
        let p = parse_program("f x = let (a, b) = (x, x) in \\y . (:) (a, y)\n").unwrap();
        assert_eq!(p.equations.len(), 1);
    }

    #[test]
    fn render_roundtrip() {
        let src = "\
data T a = L | N (T a) a (T a)
size :: T a -> Nat
size L = Z
size (N l x r) = S (plus (size l) (size r))
plus :: Nat -> Nat -> Nat
plus Z y = y
plus (S x) y = S (plus x y)
";
        let p1 = parse_program(src).unwrap();
        let rendered = p1.render();
        let p2 = parse_program(&rendered).unwrap();
        assert_eq!(p1.render(), p2.render());
        assert_eq!(p2.equations.len(), 4);
    }
}
