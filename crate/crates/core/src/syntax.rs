//! Abstract syntax: simple types, terms, equations and programs.
//!
//! Terms are Church-style: after type inference every node carries its
//! simple type. Patterns are ordinary terms restricted to variables and
//! fully applied constructors of data type.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Name = String;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TyVar(pub u32);

impl fmt::Display for TyVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.0;
        if n < 26 {
            write!(f, "{}", (b'a' + n as u8) as char)
        } else {
            write!(f, "t{n}")
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum SimpleType {
    Var(TyVar),
    /// Data type application `D t1 .. tn`; base types are 0-ary.
    Data(Name, Vec<SimpleType>),
    Pair(Box<SimpleType>, Box<SimpleType>),
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(b))
    }

    pub fn pair(a: SimpleType, b: SimpleType) -> SimpleType {
        SimpleType::Pair(Box::new(a), Box::new(b))
    }

    pub fn data0(name: &str) -> SimpleType {
        SimpleType::Data(name.to_string(), vec![])
    }

    pub fn list(elem: SimpleType) -> SimpleType {
        SimpleType::Data("List".into(), vec![elem])
    }

    /// Splits `t1 -> .. -> tn -> r` into (args, r) following every arrow.
    pub fn arrow_spine(&self) -> (Vec<&SimpleType>, &SimpleType) {
        let mut args = Vec::new();
        let mut t = self;
        while let SimpleType::Arrow(a, b) = t {
            args.push(a.as_ref());
            t = b;
        }
        (args, t)
    }

    pub fn is_data(&self) -> bool {
        matches!(self, SimpleType::Data(..))
    }

    pub fn free_vars(&self, out: &mut BTreeSet<TyVar>) {
        match self {
            SimpleType::Var(v) => {
                out.insert(*v);
            }
            SimpleType::Data(_, ts) => ts.iter().for_each(|t| t.free_vars(out)),
            SimpleType::Pair(a, b) | SimpleType::Arrow(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    pub fn apply(&self, subst: &BTreeMap<TyVar, SimpleType>) -> SimpleType {
        match self {
            SimpleType::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            SimpleType::Data(d, ts) => {
                SimpleType::Data(d.clone(), ts.iter().map(|t| t.apply(subst)).collect())
            }
            SimpleType::Pair(a, b) => SimpleType::pair(a.apply(subst), b.apply(subst)),
            SimpleType::Arrow(a, b) => SimpleType::arrow(a.apply(subst), b.apply(subst)),
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &SimpleType, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
            match t {
                SimpleType::Var(v) => write!(f, "{v}"),
                SimpleType::Data(d, ts) if d == "List" && ts.len() == 1 => {
                    write!(f, "[")?;
                    go(&ts[0], f, 0)?;
                    write!(f, "]")
                }
                SimpleType::Data(d, ts) => {
                    if ts.is_empty() {
                        write!(f, "{d}")
                    } else {
                        if prec >= 2 {
                            write!(f, "(")?;
                        }
                        write!(f, "{d}")?;
                        for t in ts {
                            write!(f, " ")?;
                            go(t, f, 2)?;
                        }
                        if prec >= 2 {
                            write!(f, ")")?;
                        }
                        Ok(())
                    }
                }
                SimpleType::Pair(a, b) => {
                    write!(f, "(")?;
                    go(a, f, 0)?;
                    write!(f, ", ")?;
                    go(b, f, 0)?;
                    write!(f, ")")
                }
                SimpleType::Arrow(a, b) => {
                    if prec >= 1 {
                        write!(f, "(")?;
                    }
                    go(a, f, 1)?;
                    write!(f, " -> ")?;
                    go(b, f, 0)?;
                    if prec >= 1 {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, f, 0)
    }
}

/// A polymorphic simple type `forall vars. ty`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub vars: Vec<TyVar>,
    pub ty: SimpleType,
}

impl Scheme {
    pub fn mono(ty: SimpleType) -> Scheme {
        Scheme { vars: vec![], ty }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            write!(f, "forall")?;
            for v in &self.vars {
                write!(f, " {v}")?;
            }
            write!(f, ". ")?;
        }
        write!(f, "{}", self.ty)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub kind: TermKind,
    pub ty: Option<SimpleType>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum TermKind {
    Var(Name),
    Fun(Name),
    Con(Name),
    App(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    LetPair {
        left: Name,
        right: Name,
        rhs: Box<Term>,
        body: Box<Term>,
    },
    /// Surface lambda; removed by lambda lifting.
    Lam { params: Vec<Name>, body: Box<Term> },
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Term {
        Term { kind, ty: None, span }
    }

    pub fn var(name: &str, span: Span) -> Term {
        Term::new(TermKind::Var(name.into()), span)
    }

    pub fn app(f: Term, a: Term) -> Term {
        let span = f.span;
        Term::new(TermKind::App(Box::new(f), Box::new(a)), span)
    }

    pub fn ty(&self) -> &SimpleType {
        self.ty.as_ref().expect("term not elaborated with a type")
    }

    /// Decomposes an application spine `h t1 .. tn`.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let TermKind::App(f, a) = &t.kind {
            args.push(a.as_ref());
            t = f;
        }
        args.reverse();
        (t, args)
    }

    pub fn head_name(&self) -> Option<&Name> {
        match &self.spine().0.kind {
            TermKind::Var(n) | TermKind::Fun(n) | TermKind::Con(n) => Some(n),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> Vec<Name> {
        fn go(t: &Term, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
            match &t.kind {
                TermKind::Var(x) => {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
                TermKind::Fun(_) | TermKind::Con(_) => {}
                TermKind::App(a, b) | TermKind::Pair(a, b) => {
                    go(a, bound, out);
                    go(b, bound, out);
                }
                TermKind::LetPair { left, right, rhs, body } => {
                    go(rhs, bound, out);
                    bound.push(left.clone());
                    bound.push(right.clone());
                    go(body, bound, out);
                    bound.pop();
                    bound.pop();
                }
                TermKind::Lam { params, body } => {
                    let n = params.len();
                    bound.extend(params.iter().cloned());
                    go(body, bound, out);
                    bound.truncate(bound.len() - n);
                }
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// True if the term is linear: no variable occurs twice.
    pub fn is_linear(&self) -> bool {
        fn go(t: &Term, seen: &mut BTreeSet<Name>) -> bool {
            match &t.kind {
                TermKind::Var(x) => seen.insert(x.clone()),
                TermKind::Fun(_) | TermKind::Con(_) => true,
                TermKind::App(a, b) | TermKind::Pair(a, b) => go(a, seen) && go(b, seen),
                TermKind::LetPair { rhs, body, .. } => go(rhs, seen) && go(body, seen),
                TermKind::Lam { body, .. } => go(body, seen),
            }
        }
        go(self, &mut BTreeSet::new())
    }

    pub fn contains_lambda(&self) -> bool {
        match &self.kind {
            TermKind::Lam { .. } => true,
            TermKind::Var(_) | TermKind::Fun(_) | TermKind::Con(_) => false,
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                a.contains_lambda() || b.contains_lambda()
            }
            TermKind::LetPair { rhs, body, .. } => rhs.contains_lambda() || body.contains_lambda(),
        }
    }

    pub fn contains_pair(&self) -> bool {
        match &self.kind {
            TermKind::Pair(..) | TermKind::LetPair { .. } => true,
            TermKind::Var(_) | TermKind::Fun(_) | TermKind::Con(_) => false,
            TermKind::App(a, b) => a.contains_pair() || b.contains_pair(),
            TermKind::Lam { body, .. } => body.contains_pair(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(t: &Term) -> bool {
            matches!(t.kind, TermKind::Var(_) | TermKind::Fun(_) | TermKind::Con(_) | TermKind::Pair(..))
        }
        match &self.kind {
            TermKind::Var(n) | TermKind::Fun(n) | TermKind::Con(n) => write!(f, "{n}"),
            TermKind::App(a, b) => {
                if matches!(a.kind, TermKind::LetPair { .. } | TermKind::Lam { .. }) {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                if atom(b) {
                    write!(f, " {b}")
                } else {
                    write!(f, " ({b})")
                }
            }
            TermKind::Pair(a, b) => write!(f, "({a}, {b})"),
            TermKind::LetPair { left, right, rhs, body } => {
                write!(f, "let ({left}, {right}) = {rhs} in {body}")
            }
            TermKind::Lam { params, body } => {
                write!(f, "\\{} . {body}", params.join(" "))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Equation {
    /// Left-hand side: the full spine `f p1 .. pk`.
    pub lhs: Term,
    pub rhs: Term,
    pub span: Span,
}

impl Equation {
    pub fn fun_name(&self) -> &Name {
        self.lhs.head_name().expect("equation lhs has a symbol head")
    }

    pub fn patterns(&self) -> Vec<&Term> {
        self.lhs.spine().1
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug)]
pub struct CtorDecl {
    pub name: Name,
    pub args: Vec<SimpleType>,
    /// Owning data type name.
    pub data: Name,
}

#[derive(Clone, Debug)]
pub struct DataDecl {
    pub name: Name,
    pub params: Vec<TyVar>,
    pub ctors: Vec<CtorDecl>,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub datas: Vec<DataDecl>,
    /// Effective type of every function; filled by declaration or inference.
    pub sigs: BTreeMap<Name, Scheme>,
    /// Names that carried a user-written type signature.
    pub declared: BTreeSet<Name>,
    pub equations: Vec<Equation>,
    /// Function names in declaration order.
    pub funs: Vec<Name>,
}

impl Program {
    pub fn builtin_datas() -> Vec<DataDecl> {
        let a = TyVar(0);
        vec![
            DataDecl {
                name: "List".into(),
                params: vec![a],
                ctors: vec![
                    CtorDecl { name: "Nil".into(), args: vec![], data: "List".into() },
                    CtorDecl {
                        name: "Cons".into(),
                        args: vec![SimpleType::Var(a), SimpleType::list(SimpleType::Var(a))],
                        data: "List".into(),
                    },
                ],
            },
            DataDecl {
                name: "Nat".into(),
                params: vec![],
                ctors: vec![
                    CtorDecl { name: "Z".into(), args: vec![], data: "Nat".into() },
                    CtorDecl {
                        name: "S".into(),
                        args: vec![SimpleType::data0("Nat")],
                        data: "Nat".into(),
                    },
                ],
            },
            DataDecl {
                name: "Bool".into(),
                params: vec![],
                ctors: vec![
                    CtorDecl { name: "False".into(), args: vec![], data: "Bool".into() },
                    CtorDecl { name: "True".into(), args: vec![], data: "Bool".into() },
                ],
            },
        ]
    }

    pub fn data(&self, name: &str) -> Option<&DataDecl> {
        self.datas.iter().find(|d| d.name == name)
    }

    pub fn ctor(&self, name: &str) -> Option<&CtorDecl> {
        self.datas.iter().flat_map(|d| d.ctors.iter()).find(|c| c.name == name)
    }

    pub fn is_ctor(&self, name: &str) -> bool {
        self.ctor(name).is_some()
    }

    pub fn is_fun(&self, name: &str) -> bool {
        self.funs.iter().any(|f| f == name)
    }

    /// The polymorphic type of a constructor, `forall params. args -> D params`.
    pub fn ctor_scheme(&self, name: &str) -> Option<Scheme> {
        let c = self.ctor(name)?;
        let d = self.data(&c.data)?;
        let res = SimpleType::Data(d.name.clone(), d.params.iter().map(|v| SimpleType::Var(*v)).collect());
        let ty = c.args.iter().rev().fold(res, |acc, a| SimpleType::arrow(a.clone(), acc));
        Some(Scheme { vars: d.params.clone(), ty })
    }

    pub fn ctor_arity(&self, name: &str) -> Option<usize> {
        self.ctor(name).map(|c| c.args.len())
    }

    /// The arity of a function: the number of patterns on its equations.
    /// Functions without equations fall back to the full arrow count.
    pub fn fun_arity(&self, name: &str) -> Option<usize> {
        if let Some(eq) = self.equations.iter().find(|e| e.fun_name() == name) {
            return Some(eq.patterns().len());
        }
        self.sigs.get(name).map(|s| s.ty.arrow_spine().0.len())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.ctor_arity(name).or_else(|| self.fun_arity(name))
    }

    pub fn equations_of(&self, name: &str) -> Vec<&Equation> {
        self.equations.iter().filter(|e| e.fun_name() == name).collect()
    }

    /// Renders the program back to source syntax.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let builtens: BTreeSet<&str> = ["List", "Nat", "Bool"].into_iter().collect();
        for d in &self.datas {
            if builtens.contains(d.name.as_str()) {
                continue;
            }
            s.push_str(&format!("data {}", d.name));
            for p in &d.params {
                s.push_str(&format!(" {p}"));
            }
            s.push_str(" = ");
            let cs: Vec<String> = d
                .ctors
                .iter()
                .map(|c| {
                    let mut cs = c.name.clone();
                    for a in &c.args {
                        cs.push_str(&format!(" {}", atom_ty(a)));
                    }
                    cs
                })
                .collect();
            s.push_str(&cs.join(" | "));
            s.push('\n');
        }
        for f in &self.funs {
            if let Some(sig) = self.sigs.get(f) {
                s.push_str(&format!("{f} :: {}\n", sig.ty));
            }
            for eq in self.equations_of(f) {
                s.push_str(&format!("{eq}\n"));
            }
        }
        s
    }
}

fn atom_ty(t: &SimpleType) -> String {
    match t {
        SimpleType::Var(_) | SimpleType::Pair(..) => format!("{t}"),
        SimpleType::Data(d, ts) if ts.is_empty() => d.clone(),
        SimpleType::Data(d, ts) if d == "List" && ts.len() == 1 => format!("{t}"),
        _ => format!("({t})"),
    }
}
