//! Hindley-Milner style simple type inference.
//!
//! Functions are polymorphic at top level only; recursive definitions are
//! inferred under a monotype unless a signature is declared, in which case
//! the declared type is used (rigidly) when checking the defining equations.
//! After inference every term node is annotated with its simple type.

use crate::syntax::*;
use crate::util::sccs;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone)]
pub struct TypeError {
    pub msg: String,
    pub span: Span,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error at {}: {}", self.span, self.msg)
    }
}

impl std::error::Error for TypeError {}

/// Unification state. Variables below `rigid_from` are plain unification
/// variables; rigid variables only unify with themselves.
struct Unifier {
    subst: BTreeMap<TyVar, SimpleType>,
    next: u32,
    rigid: BTreeSet<TyVar>,
}

impl Unifier {
    fn new() -> Self {
        Unifier { subst: BTreeMap::new(), next: 0, rigid: BTreeSet::new() }
    }

    fn fresh(&mut self) -> SimpleType {
        let v = TyVar(self.next);
        self.next += 1;
        SimpleType::Var(v)
    }

    fn fresh_rigid(&mut self) -> TyVar {
        let v = TyVar(self.next);
        self.next += 1;
        self.rigid.insert(v);
        v
    }

    fn resolve(&self, t: &SimpleType) -> SimpleType {
        match t {
            SimpleType::Var(v) => match self.subst.get(v) {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            SimpleType::Data(d, ts) => {
                SimpleType::Data(d.clone(), ts.iter().map(|t| self.resolve(t)).collect())
            }
            SimpleType::Pair(a, b) => SimpleType::pair(self.resolve(a), self.resolve(b)),
            SimpleType::Arrow(a, b) => SimpleType::arrow(self.resolve(a), self.resolve(b)),
        }
    }

    fn occurs(&self, v: TyVar, t: &SimpleType) -> bool {
        match t {
            SimpleType::Var(u) => *u == v,
            SimpleType::Data(_, ts) => ts.iter().any(|t| self.occurs(v, t)),
            SimpleType::Pair(a, b) | SimpleType::Arrow(a, b) => {
                self.occurs(v, a) || self.occurs(v, b)
            }
        }
    }

    fn unify(&mut self, a: &SimpleType, b: &SimpleType, span: Span) -> Result<(), TypeError> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (SimpleType::Var(x), SimpleType::Var(y)) if x == y => Ok(()),
            (SimpleType::Var(x), _) if !self.rigid.contains(x) => {
                if self.occurs(*x, &b) {
                    return Err(TypeError {
                        msg: format!("occurs check failed: cannot construct infinite type {a} = {b}"),
                        span,
                    });
                }
                self.subst.insert(*x, b);
                Ok(())
            }
            (_, SimpleType::Var(y)) if !self.rigid.contains(y) => self.unify(&b, &a, span),
            (SimpleType::Data(d1, ts1), SimpleType::Data(d2, ts2))
                if d1 == d2 && ts1.len() == ts2.len() =>
            {
                for (t1, t2) in ts1.iter().zip(ts2) {
                    self.unify(t1, t2, span)?;
                }
                Ok(())
            }
            (SimpleType::Pair(a1, b1), SimpleType::Pair(a2, b2))
            | (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => {
                self.unify(a1, a2, span)?;
                self.unify(b1, b2, span)
            }
            _ => Err(TypeError { msg: format!("type mismatch: {a} vs {b}"), span }),
        }
    }

    fn instantiate(&mut self, s: &Scheme) -> SimpleType {
        let map: BTreeMap<TyVar, SimpleType> =
            s.vars.iter().map(|v| (*v, self.fresh())).collect();
        s.ty.apply(&map)
    }

    fn instantiate_rigid(&mut self, s: &Scheme) -> SimpleType {
        let map: BTreeMap<TyVar, SimpleType> = s
            .vars
            .iter()
            .map(|v| (*v, SimpleType::Var(self.fresh_rigid())))
            .collect();
        s.ty.apply(&map)
    }
}

/// The call graph over functions: `f -> g` if `g` occurs in a rhs of `f`.
pub fn call_graph(prog: &Program) -> BTreeMap<Name, BTreeSet<Name>> {
    let mut deps: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    for f in &prog.funs {
        deps.entry(f.clone()).or_default();
    }
    fn walk(t: &Term, out: &mut BTreeSet<Name>) {
        match &t.kind {
            TermKind::Fun(g) => {
                out.insert(g.clone());
            }
            TermKind::Var(_) | TermKind::Con(_) => {}
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            TermKind::LetPair { rhs, body, .. } => {
                walk(rhs, out);
                walk(body, out);
            }
            TermKind::Lam { body, .. } => walk(body, out),
        }
    }
    for eq in &prog.equations {
        let f = eq.fun_name().clone();
        walk(&eq.rhs, deps.entry(f).or_default());
    }
    deps
}

/// Topologically ordered SCCs of the call graph, dependencies first.
pub fn call_sccs(prog: &Program) -> Vec<Vec<Name>> {
    let nodes: Vec<Name> = prog.funs.clone();
    let deps = call_graph(prog);
    let index: BTreeMap<&Name, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let edges: Vec<Vec<usize>> = nodes
        .iter()
        .map(|n| {
            deps[n]
                .iter()
                .filter_map(|g| index.get(g).copied())
                .collect()
        })
        .collect();
    sccs(&edges)
        .into_iter()
        .map(|comp| comp.into_iter().map(|i| nodes[i].clone()).collect())
        .collect()
}

/// Infers the most general simple type of every function, checks declared
/// signatures, and annotates every term node (Church style).
pub fn infer_simple_types(prog: &Program) -> Result<Program, TypeError> {
    let mut prog = prog.clone();
    check_equation_shapes(&prog)?;

    let groups = call_sccs(&prog);
    for group in groups {
        infer_group(&mut prog, &group)?;
    }

    // Final elaboration pass with all schemes fixed.
    let mut eqs = std::mem::take(&mut prog.equations);
    for eq in &mut eqs {
        elaborate_equation(&prog, eq)?;
    }
    prog.equations = eqs;
    Ok(prog)
}

fn check_equation_shapes(prog: &Program) -> Result<(), TypeError> {
    let mut arities: BTreeMap<Name, usize> = BTreeMap::new();
    for eq in &prog.equations {
        let f = eq.fun_name().clone();
        let n = eq.patterns().len();
        if let Some(&m) = arities.get(&f) {
            if m != n {
                return Err(TypeError {
                    msg: format!("equations for `{f}` have inconsistent arities {m} and {n}"),
                    span: eq.span,
                });
            }
        } else {
            arities.insert(f, n);
        }
    }
    for f in &prog.funs {
        if prog.equations_of(f).is_empty() && !prog.declared.contains(f) {
            return Err(TypeError {
                msg: format!("function `{f}` has a signature use but no definition"),
                span: Span::default(),
            });
        }
        if prog.declared.contains(f) && prog.equations_of(f).is_empty() {
            return Err(TypeError {
                msg: format!("function `{f}` is declared but never defined"),
                span: Span::default(),
            });
        }
    }
    Ok(())
}

/// Types of symbols visible while inferring `group`.
struct Assumptions<'a> {
    prog: &'a Program,
    /// Monotypes for the undeclared members of the group under inference.
    local: BTreeMap<Name, SimpleType>,
}

fn infer_group(prog: &mut Program, group: &[Name]) -> Result<(), TypeError> {
    let mut u = Unifier::new();
    // Keep user type variables distinct from unifier-allocated ones by
    // renaming all schemes into the unifier's namespace on instantiation.
    let mut local = BTreeMap::new();
    for f in group {
        if !prog.declared.contains(f) {
            local.insert(f.clone(), u.fresh());
        }
    }
    let assum = Assumptions { prog, local };

    for eq in &prog.equations {
        let f = eq.fun_name();
        if !group.contains(f) {
            continue;
        }
        let mut eq = eq.clone();
        let fun_ty = if let Some(s) = prog.sigs.get(f).filter(|_| prog.declared.contains(f)) {
            u.instantiate_rigid(s)
        } else {
            assum.local[f].clone()
        };
        infer_equation(&assum, &mut u, &mut eq, &fun_ty)?;
    }

    // Generalize the undeclared members.
    let mut inferred: Vec<(Name, Scheme)> = Vec::new();
    for f in group {
        if prog.declared.contains(f) {
            continue;
        }
        let ty = u.resolve(&assum.local[f]);
        inferred.push((f.clone(), generalize(&ty)));
    }
    drop(assum);
    for (f, scheme) in inferred {
        prog.sigs.insert(f, scheme);
    }
    Ok(())
}

fn generalize(ty: &SimpleType) -> Scheme {
    // Canonically rename the free variables in order of first occurrence.
    let mut order: Vec<TyVar> = Vec::new();
    fn collect(t: &SimpleType, order: &mut Vec<TyVar>) {
        match t {
            SimpleType::Var(v) => {
                if !order.contains(v) {
                    order.push(*v);
                }
            }
            SimpleType::Data(_, ts) => ts.iter().for_each(|t| collect(t, order)),
            SimpleType::Pair(a, b) | SimpleType::Arrow(a, b) => {
                collect(a, order);
                collect(b, order);
            }
        }
    }
    collect(ty, &mut order);
    let map: BTreeMap<TyVar, SimpleType> = order
        .iter()
        .enumerate()
        .map(|(i, v)| (*v, SimpleType::Var(TyVar(i as u32))))
        .collect();
    Scheme { vars: (0..order.len() as u32).map(TyVar).collect(), ty: ty.apply(&map) }
}

/// Infers one equation against `fun_ty`, the type of its function symbol.
fn infer_equation(
    assum: &Assumptions,
    u: &mut Unifier,
    eq: &mut Equation,
    fun_ty: &SimpleType,
) -> Result<(), TypeError> {
    let mut env: BTreeMap<Name, SimpleType> = BTreeMap::new();
    let lhs_ty = infer_lhs(assum, u, &mut eq.lhs, fun_ty, &mut env)?;
    let rhs_ty = infer_term(assum, u, &mut eq.rhs, &mut env)?;
    u.unify(&rhs_ty, &lhs_ty, eq.rhs.span)?;
    Ok(())
}

fn infer_lhs(
    assum: &Assumptions,
    u: &mut Unifier,
    lhs: &mut Term,
    fun_ty: &SimpleType,
    env: &mut BTreeMap<Name, SimpleType>,
) -> Result<SimpleType, TypeError> {
    let ty = match &mut lhs.kind {
        TermKind::Fun(_) => fun_ty.clone(),
        TermKind::App(f, p) => {
            let fty = infer_lhs(assum, u, f, fun_ty, env)?;
            let pty = infer_pattern(assum, u, p, env)?;
            let res = u.fresh();
            u.unify(&fty, &SimpleType::arrow(pty, res.clone()), lhs.span)?;
            res
        }
        _ => unreachable!("lhs shape checked by the parser"),
    };
    lhs.ty = Some(ty.clone());
    Ok(ty)
}

fn infer_pattern(
    assum: &Assumptions,
    u: &mut Unifier,
    pat: &mut Term,
    env: &mut BTreeMap<Name, SimpleType>,
) -> Result<SimpleType, TypeError> {
    let ty = match &mut pat.kind {
        TermKind::Var(x) => {
            let t = u.fresh();
            env.insert(x.clone(), t.clone());
            t
        }
        TermKind::Con(c) => {
            let s = assum.prog.ctor_scheme(c).ok_or_else(|| TypeError {
                msg: format!("unknown constructor `{c}`"),
                span: pat.span,
            })?;
            u.instantiate(&s)
        }
        TermKind::App(f, a) => {
            let fty = infer_pattern(assum, u, f, env)?;
            let aty = infer_pattern(assum, u, a, env)?;
            let res = u.fresh();
            u.unify(&fty, &SimpleType::arrow(aty, res.clone()), pat.span)?;
            res
        }
        _ => unreachable!("pattern shape checked by the parser"),
    };
    pat.ty = Some(ty.clone());
    Ok(ty)
}

fn infer_term(
    assum: &Assumptions,
    u: &mut Unifier,
    t: &mut Term,
    env: &mut BTreeMap<Name, SimpleType>,
) -> Result<SimpleType, TypeError> {
    let ty = match &mut t.kind {
        TermKind::Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| TypeError { msg: format!("unbound variable `{x}`"), span: t.span })?,
        TermKind::Fun(f) => {
            if let Some(mono) = assum.local.get(f) {
                mono.clone()
            } else {
                let s = assum.prog.sigs.get(f).ok_or_else(|| TypeError {
                    msg: format!("function `{f}` has no type yet"),
                    span: t.span,
                })?;
                u.instantiate(s)
            }
        }
        TermKind::Con(c) => {
            let s = assum.prog.ctor_scheme(c).ok_or_else(|| TypeError {
                msg: format!("unknown constructor `{c}`"),
                span: t.span,
            })?;
            u.instantiate(&s)
        }
        TermKind::App(f, a) => {
            let fty = infer_term(assum, u, f, env)?;
            let aty = infer_term(assum, u, a, env)?;
            let res = u.fresh();
            u.unify(&fty, &SimpleType::arrow(aty, res.clone()), t.span)?;
            res
        }
        TermKind::Pair(a, b) => {
            let at = infer_term(assum, u, a, env)?;
            let bt = infer_term(assum, u, b, env)?;
            SimpleType::pair(at, bt)
        }
        TermKind::LetPair { left, right, rhs, body } => {
            let rt = infer_term(assum, u, rhs, env)?;
            let lt = u.fresh();
            let rt2 = u.fresh();
            u.unify(&rt, &SimpleType::pair(lt.clone(), rt2.clone()), t.span)?;
            let shadow_l = env.insert(left.clone(), lt);
            let shadow_r = env.insert(right.clone(), rt2);
            let bt = infer_term(assum, u, body, env)?;
            restore(env, left, shadow_l);
            restore(env, right, shadow_r);
            bt
        }
        TermKind::Lam { params, body } => {
            let mut shadows = Vec::new();
            let mut ptys = Vec::new();
            for p in params.iter() {
                let pt = u.fresh();
                shadows.push((p.clone(), env.insert(p.clone(), pt.clone())));
                ptys.push(pt);
            }
            let bt = infer_term(assum, u, body, env)?;
            for (p, old) in shadows.into_iter().rev() {
                restore(env, &p, old);
            }
            ptys.into_iter().rev().fold(bt, |acc, p| SimpleType::arrow(p, acc))
        }
    };
    t.ty = Some(ty.clone());
    Ok(ty)
}

fn restore(env: &mut BTreeMap<Name, SimpleType>, name: &Name, old: Option<SimpleType>) {
    match old {
        Some(t) => {
            env.insert(name.clone(), t);
        }
        None => {
            env.remove(name);
        }
    }
}

/// Re-types one equation with all schemes fixed and writes resolved types
/// into every node. Residual unification variables (types the equation does
/// not constrain) are canonically renamed per equation.
fn elaborate_equation(prog: &Program, eq: &mut Equation) -> Result<(), TypeError> {
    let f = eq.fun_name().clone();
    let scheme = prog.sigs.get(&f).ok_or_else(|| TypeError {
        msg: format!("function `{f}` has no inferred type"),
        span: eq.span,
    })?;
    let mut u = Unifier::new();
    let fun_ty = u.instantiate_rigid(scheme);
    let assum = Assumptions { prog, local: BTreeMap::new() };
    let mut env = BTreeMap::new();
    let lhs_ty = infer_lhs(&assum, &mut u, &mut eq.lhs, &fun_ty, &mut env)?;
    let rhs_ty = infer_term(&assum, &mut u, &mut eq.rhs, &mut env)?;
    u.unify(&rhs_ty, &lhs_ty, eq.rhs.span)?;

    // Resolve node types, then rename the remaining variables canonically
    // in order of first occurrence (pre-order over lhs, then rhs).
    fn walk(t: &mut Term, f: &mut impl FnMut(&mut Term)) {
        f(t);
        match &mut t.kind {
            TermKind::App(a, b) | TermKind::Pair(a, b) => {
                walk(a, f);
                walk(b, f);
            }
            TermKind::LetPair { rhs, body, .. } => {
                walk(rhs, f);
                walk(body, f);
            }
            TermKind::Lam { body, .. } => walk(body, f),
            _ => {}
        }
    }

    let mut rename: BTreeMap<TyVar, SimpleType> = BTreeMap::new();
    let mut next = 0u32;
    let mut resolve_node = |t: &mut Term| {
        let r = u.resolve(t.ty());
        let mut vars = BTreeSet::new();
        r.free_vars(&mut vars);
        for v in vars {
            rename.entry(v).or_insert_with(|| {
                let fresh = SimpleType::Var(TyVar(next));
                next += 1;
                fresh
            });
        }
        t.ty = Some(r);
    };
    walk(&mut eq.lhs, &mut resolve_node);
    walk(&mut eq.rhs, &mut resolve_node);
    let mut apply_rename = |t: &mut Term| {
        t.ty = Some(t.ty().apply(&rename));
    };
    walk(&mut eq.lhs, &mut apply_rename);
    walk(&mut eq.rhs, &mut apply_rename);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    fn infer(src: &str) -> Result<Program, TypeError> {
        infer_simple_types(&parse_program(src).unwrap())
    }

    #[test]
    fn infers_most_general_reverse() {
        let p = infer("rev [] ys = ys\nrev (x : xs) ys = rev xs (x : ys)\n").unwrap();
        let s = &p.sigs["rev"];
        assert_eq!(s.vars.len(), 1);
        assert_eq!(format!("{}", s.ty), "[a] -> [a] -> [a]");
    }

    #[test]
    fn declaration_is_checked_and_kept() {
        let p = infer("id :: Nat -> Nat\nid x = x\n").unwrap();
        assert_eq!(format!("{}", p.sigs["id"].ty), "Nat -> Nat");
    }

    #[test]
    fn declaration_echo_succ() {
        let p = infer("data Pos = One | Next Pos\nbump :: Pos -> Pos\nbump x = Next x\n").unwrap();
        assert_eq!(format!("{}", p.sigs["bump"].ty), "Pos -> Pos");
    }

    #[test]
    fn occurs_check_fails() {
        let err = infer("f x = f\n").unwrap_err();
        assert!(err.msg.contains("occurs check"), "{err}");
    }

    #[test]
    fn too_general_declaration_rejected() {
        // Declared more general than the definition allows.
        let err = infer("f :: a -> b\nf x = x\n").unwrap_err();
        assert!(err.msg.contains("mismatch"), "{err}");
    }

    #[test]
    fn elaboration_annotates_nodes() {
        let p = infer("dup x = (x, x)\n").unwrap();
        let eq = &p.equations[0];
        assert_eq!(format!("{}", eq.rhs.ty()), "(a, a)");
    }

    #[test]
    fn idempotent_on_second_run() {
        let p = infer("rev [] ys = ys\nrev (x : xs) ys = rev xs (x : ys)\n").unwrap();
        let p2 = infer_simple_types(&p).unwrap();
        assert_eq!(format!("{}", p.sigs["rev"]), format!("{}", p2.sigs["rev"]));
    }
}
