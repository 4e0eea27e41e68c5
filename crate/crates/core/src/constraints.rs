//! Second-order constraint problems: generation from typed programs, and
//! skolemization down to first-order problems.
//!
//! Inference mirrors the declarative system but records inequalities
//! `a <= b` instead of checking them, instantiates quantifiers with fresh
//! meta variables, and tracks occurrence constraints `i notin X` that
//! protect the freshness side conditions. Skolemization then replaces every
//! meta variable by a fresh symbol applied to its admissible variables.

use crate::footprint::{footprint, FootprintError};
use crate::index::{FreshSym, IVar, Index, Signature, Sym, SymOrigin, VarSupply};
use crate::sized::{IxLike, STy, SizedCtx, Variance, Variances};
use crate::syntax::{Name, Program, SimpleType, Term, TermKind, TyVar};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Meta(pub u32);

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// Second-order index terms: index variables, meta variables, applications.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SOIndex {
    Var(IVar),
    Meta(Meta),
    App(Sym, Vec<SOIndex>),
}

impl SOIndex {
    pub fn from_index(ix: &Index) -> SOIndex {
        match ix {
            Index::Var(v) => SOIndex::Var(*v),
            Index::App(s, args) => {
                SOIndex::App(*s, args.iter().map(SOIndex::from_index).collect())
            }
        }
    }

    pub fn to_index(&self) -> Option<Index> {
        match self {
            SOIndex::Var(v) => Some(Index::Var(*v)),
            SOIndex::Meta(_) => None,
            SOIndex::App(s, args) => Some(Index::App(
                *s,
                args.iter().map(|a| a.to_index()).collect::<Option<Vec<_>>>()?,
            )),
        }
    }

    pub fn metas(&self, out: &mut BTreeSet<Meta>) {
        match self {
            SOIndex::Var(_) => {}
            SOIndex::Meta(m) => {
                out.insert(*m);
            }
            SOIndex::App(_, args) => args.iter().for_each(|a| a.metas(out)),
        }
    }

    pub fn subst_metas(&self, map: &BTreeMap<Meta, SOIndex>) -> SOIndex {
        match self {
            SOIndex::Var(_) => self.clone(),
            SOIndex::Meta(m) => map.get(m).cloned().unwrap_or_else(|| self.clone()),
            SOIndex::App(s, args) => {
                SOIndex::App(*s, args.iter().map(|a| a.subst_metas(map)).collect())
            }
        }
    }

    pub fn render(&self, sig: &Signature, var_name: &impl Fn(IVar) -> String) -> String {
        match self {
            SOIndex::Meta(m) => format!("{m}"),
            SOIndex::Var(v) => var_name(*v),
            SOIndex::App(Sym::Zero, _) => "0".into(),
            SOIndex::App(Sym::Succ, args) => {
                let mut n = 1u64;
                let mut inner = &args[0];
                while let SOIndex::App(Sym::Succ, next) = inner {
                    n += 1;
                    inner = &next[0];
                }
                if matches!(inner, SOIndex::App(Sym::Zero, _)) {
                    format!("{n}")
                } else {
                    format!("{} + {n}", inner.render(sig, var_name))
                }
            }
            SOIndex::App(Sym::Add, args) => {
                format!("{} + {}", args[0].render(sig, var_name), args[1].render(sig, var_name))
            }
            SOIndex::App(Sym::Mul, args) => {
                format!("{}*{}", args[0].render(sig, var_name), args[1].render(sig, var_name))
            }
            SOIndex::App(Sym::Max, args) => {
                format!("max({}, {})", args[0].render(sig, var_name), args[1].render(sig, var_name))
            }
            SOIndex::App(Sym::Fresh(f), args) => {
                let parts: Vec<String> = args.iter().map(|a| a.render(sig, var_name)).collect();
                format!("{}({})", sig.name(*f), parts.join(", "))
            }
        }
    }
}

impl IxLike for SOIndex {
    fn var(v: IVar) -> Self {
        SOIndex::Var(v)
    }
    fn as_var(&self) -> Option<IVar> {
        match self {
            SOIndex::Var(v) => Some(*v),
            _ => None,
        }
    }
    fn free_vars(&self, out: &mut Vec<IVar>) {
        match self {
            SOIndex::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            SOIndex::Meta(_) => {}
            SOIndex::App(_, args) => args.iter().for_each(|a| a.free_vars(out)),
        }
    }
    fn subst_vars(&self, map: &BTreeMap<IVar, Self>) -> Self {
        match self {
            SOIndex::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            SOIndex::Meta(_) => self.clone(),
            SOIndex::App(s, args) => {
                SOIndex::App(*s, args.iter().map(|a| a.subst_vars(map)).collect())
            }
        }
    }
}

pub type TemplateType = STy<SOIndex>;

/// A second-order constraint problem.
#[derive(Clone, Debug, Default)]
pub struct Socp {
    pub ineqs: Vec<(SOIndex, SOIndex)>,
    /// Occurrence constraints `(i, X)`: the solution of `X` must not
    /// mention `i`.
    pub notin: BTreeSet<(IVar, Meta)>,
    /// Allocation site of each meta variable, for reporting.
    pub meta_sites: BTreeMap<Meta, String>,
}

impl Socp {
    pub fn push_ineq(&mut self, a: SOIndex, b: SOIndex) {
        if !self.ineqs.contains(&(a.clone(), b.clone())) {
            self.ineqs.push((a, b));
        }
    }

    pub fn metas(&self) -> Vec<Meta> {
        let mut set = BTreeSet::new();
        for (a, b) in &self.ineqs {
            a.metas(&mut set);
            b.metas(&mut set);
        }
        for (_, m) in &self.notin {
            set.insert(*m);
        }
        set.into_iter().collect()
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut s = String::new();
        let vn = |v: IVar| format!("{v}");
        for (a, b) in &self.ineqs {
            s.push_str(&format!("{} <= {}\n", a.render(sig, &vn), b.render(sig, &vn)));
        }
        for (v, m) in &self.notin {
            s.push_str(&format!("notin({}, {m})\n", vn(*v)));
        }
        s
    }
}

/// A first-order constraint problem: inequalities only, no meta variables.
#[derive(Clone, Debug, Default)]
pub struct Focp {
    pub ineqs: Vec<(Index, Index)>,
}

impl Focp {
    pub fn render(&self, sig: &Signature) -> String {
        let mut s = String::new();
        let vn = |v: IVar| format!("{v}");
        for (a, b) in &self.ineqs {
            s.push_str(&format!("{} <= {}\n", a.render(sig, &vn), b.render(sig, &vn)));
        }
        s
    }

    pub fn symbols(&self) -> BTreeSet<FreshSym> {
        let mut out = BTreeSet::new();
        for (a, b) in &self.ineqs {
            out.extend(a.fresh_syms());
            out.extend(b.fresh_syms());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum GenError {
    Footprint(FootprintError),
    SkeletonMismatch { left: String, right: String, site: String },
    UnboundVariable(Name),
    MissingTemplate(Name),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::Footprint(e) => write!(f, "{e}"),
            GenError::SkeletonMismatch { left, right, site } => {
                write!(f, "skeleton mismatch at {site}: {left} vs {right}")
            }
            GenError::UnboundVariable(x) => write!(f, "unbound variable `{x}` during inference"),
            GenError::MissingTemplate(n) => write!(f, "no template for `{n}`"),
        }
    }
}

impl std::error::Error for GenError {}

impl From<FootprintError> for GenError {
    fn from(e: FootprintError) -> Self {
        GenError::Footprint(e)
    }
}

/// Shared state of one constraint-generation run. Meta variables are
/// numbered by a single counter in traversal order, so the generated
/// problem is unique for a given program.
pub struct GenCtx<'a> {
    pub templates: &'a BTreeMap<Name, TemplateType>,
    pub variances: &'a Variances,
    pub supply: &'a mut VarSupply,
    pub next_meta: u32,
    pub socp: Socp,
    site: String,
}

impl<'a> GenCtx<'a> {
    pub fn new(
        templates: &'a BTreeMap<Name, TemplateType>,
        variances: &'a Variances,
        supply: &'a mut VarSupply,
    ) -> Self {
        GenCtx {
            templates,
            variances,
            supply,
            next_meta: 0,
            socp: Socp::default(),
            site: String::new(),
        }
    }

    fn fresh_meta(&mut self) -> Meta {
        let m = Meta(self.next_meta);
        self.next_meta += 1;
        self.socp.meta_sites.insert(m, self.site.clone());
        m
    }

    /// Occurrence constraints `vs notin (metas of the given types)`.
    fn noccur(&mut self, vs: &[IVar], tys: &[&TemplateType]) {
        let mut metas = BTreeSet::new();
        for t in tys {
            collect_type_metas(t, &mut metas);
        }
        for v in vs {
            for m in &metas {
                self.socp.notin.insert((*v, *m));
            }
        }
    }

    /// Instantiates a symbol's template: binders refreshed, the top
    /// quantifier block replaced by fresh metas, type variables replaced by
    /// meta-decorated versions of their skeleton instantiation.
    fn instantiate_symbol(
        &mut self,
        name: &str,
        occurrence_ty: &SimpleType,
    ) -> Result<TemplateType, GenError> {
        let tpl = self
            .templates
            .get(name)
            .ok_or_else(|| GenError::MissingTemplate(name.to_string()))?
            .clone();
        let renamed = tpl.rename_binders(&mut || self.supply.fresh());
        let (vars, body) = renamed.open();
        // type variables first: match the skeleton against the occurrence
        let mut tymap_simple = BTreeMap::new();
        match_skeleton(&body.skeleton(), occurrence_ty, &mut tymap_simple).map_err(|d| {
            GenError::SkeletonMismatch { left: d.0, right: d.1, site: self.site.clone() }
        })?;
        let tymap: BTreeMap<TyVar, TemplateType> = tymap_simple
            .into_iter()
            .map(|(v, t)| {
                let dec = self.decorate(&t);
                (v, dec)
            })
            .collect();
        let body = body.subst_tyvars(&tymap);
        // index quantifier block: fresh metas
        let metas: Vec<SOIndex> =
            vars.iter().map(|_| SOIndex::Meta(self.fresh_meta())).collect();
        let map: BTreeMap<IVar, SOIndex> = vars.into_iter().zip(metas).collect();
        Ok(body.subst_index(&map))
    }

    /// Decorates a simple type with fresh meta variables at every index
    /// position (the rank-1 instantiation of a type variable).
    fn decorate(&mut self, t: &SimpleType) -> TemplateType {
        match t {
            SimpleType::Var(v) => STy::TyVar(*v),
            SimpleType::Data(d, ts) => {
                let args = ts.iter().map(|t| self.decorate(t)).collect();
                STy::Data(d.clone(), SOIndex::Meta(self.fresh_meta()), args)
            }
            SimpleType::Pair(a, b) => {
                STy::Pair(Box::new(self.decorate(a)), Box::new(self.decorate(b)))
            }
            SimpleType::Arrow(a, b) => {
                STy::Arrow(Box::new(self.decorate(a)), Box::new(self.decorate(b)))
            }
        }
    }

    /// Structural subtyping constraints `t1 <= t2` (equal skeletons).
    pub fn subtype(&mut self, t1: &TemplateType, t2: &TemplateType) -> Result<(), GenError> {
        match (t1, t2) {
            (STy::TyVar(a), STy::TyVar(b)) if a == b => Ok(()),
            (STy::Data(d1, a, ts1), STy::Data(d2, b, ts2)) if d1 == d2 => {
                self.socp.push_ineq(a.clone(), b.clone());
                for (i, (x, y)) in ts1.iter().zip(ts2).enumerate() {
                    let v = self
                        .variances
                        .get(d1)
                        .and_then(|vs| vs.get(i))
                        .copied()
                        .unwrap_or(Variance::Invariant);
                    match v {
                        Variance::Unused => {}
                        Variance::Covariant => self.subtype(x, y)?,
                        Variance::Contravariant => self.subtype(y, x)?,
                        Variance::Invariant => {
                            self.subtype(x, y)?;
                            self.subtype(y, x)?;
                        }
                    }
                }
                Ok(())
            }
            (STy::Pair(a1, b1), STy::Pair(a2, b2)) => {
                self.subtype(a1, a2)?;
                self.subtype(b1, b2)
            }
            (STy::Arrow(a1, b1), STy::Arrow(a2, b2)) => {
                self.subtype_scheme(a2, a1)?;
                self.subtype(b1, b2)
            }
            (STy::Forall(..), _) | (_, STy::Forall(..)) => self.subtype_scheme(t1, t2),
            _ => Err(GenError::SkeletonMismatch {
                left: format!("{}", t1.skeleton()),
                right: format!("{}", t2.skeleton()),
                site: self.site.clone(),
            }),
        }
    }

    /// Subtyping between possibly-quantified types: the left quantifier is
    /// opened rigidly, the right instantiated with fresh metas; occurrence
    /// constraints keep the opened variables out of pre-existing metas.
    fn subtype_scheme(&mut self, t1: &TemplateType, t2: &TemplateType) -> Result<(), GenError> {
        let t1 = t1.rename_binders(&mut || self.supply.fresh());
        let (vs1, body1) = t1.open();
        let body1 = body1.clone();
        let (vs2, body2) = t2.open();
        let body2 = body2.clone();
        self.noccur(&vs1, &[&body1, &body2]);
        let metas: Vec<SOIndex> = vs2.iter().map(|_| SOIndex::Meta(self.fresh_meta())).collect();
        let map: BTreeMap<IVar, SOIndex> = vs2.into_iter().zip(metas).collect();
        let body2 = body2.subst_index(&map);
        self.subtype(&body1, &body2)
    }

    /// Syntax-directed constraint inference for a term under a context.
    pub fn infer(&mut self, ctx: &SizedCtx<SOIndex>, t: &Term) -> Result<TemplateType, GenError> {
        match &t.kind {
            TermKind::Var(x) => {
                let scheme =
                    ctx.get(x).ok_or_else(|| GenError::UnboundVariable(x.clone()))?.clone();
                let (vs, body) = scheme.open();
                let metas: Vec<SOIndex> =
                    vs.iter().map(|_| SOIndex::Meta(self.fresh_meta())).collect();
                let map: BTreeMap<IVar, SOIndex> = vs.into_iter().zip(metas).collect();
                Ok(body.subst_index(&map))
            }
            TermKind::Fun(f) => self.instantiate_symbol(f, t.ty()),
            TermKind::Con(c) => self.instantiate_symbol(c, t.ty()),
            TermKind::App(fun, arg) => {
                let fun_ty = self.infer(ctx, fun)?;
                let (expected, result) = match fun_ty {
                    STy::Arrow(a, b) => (*a, *b),
                    other => {
                        return Err(GenError::SkeletonMismatch {
                            left: format!("{}", other.skeleton()),
                            right: "function type".into(),
                            site: self.site.clone(),
                        })
                    }
                };
                // Open the expected argument type rigidly.
                let expected = expected.rename_binders(&mut || self.supply.fresh());
                let (vs, expected_body) = expected.open();
                let arg_ty = self.infer(ctx, arg)?;
                self.subtype(&arg_ty, expected_body)?;
                // Occurrence constraints: opened vars stay out of the metas
                // of the expected body and of the context restricted to the
                // operand's free variables.
                let fv = arg.free_vars();
                let restricted: Vec<&TemplateType> =
                    fv.iter().filter_map(|x| ctx.get(x)).collect();
                let mut tys: Vec<&TemplateType> = vec![expected_body];
                tys.extend(restricted);
                self.noccur(&vs, &tys);
                Ok(result)
            }
            TermKind::Pair(a, b) => {
                let ta = self.infer(ctx, a)?;
                let tb = self.infer(ctx, b)?;
                Ok(STy::Pair(Box::new(ta), Box::new(tb)))
            }
            TermKind::LetPair { left, right, rhs, body } => {
                let rhs_ty = self.infer(ctx, rhs)?;
                let (ta, tb) = match rhs_ty {
                    STy::Pair(a, b) => (*a, *b),
                    other => {
                        return Err(GenError::SkeletonMismatch {
                            left: format!("{}", other.skeleton()),
                            right: "pair type".into(),
                            site: self.site.clone(),
                        })
                    }
                };
                let mut inner = ctx.clone();
                inner.insert(left.clone(), ta);
                inner.insert(right.clone(), tb);
                self.infer(&inner, body)
            }
            TermKind::Lam { .. } => Err(GenError::MissingTemplate(
                "lambda in constraint generation; lift lambdas first".into(),
            )),
        }
    }
}

fn collect_type_metas(t: &TemplateType, out: &mut BTreeSet<Meta>) {
    match t {
        STy::TyVar(_) => {}
        STy::Data(_, a, ts) => {
            a.metas(out);
            ts.iter().for_each(|t| collect_type_metas(t, out));
        }
        STy::Pair(a, b) | STy::Arrow(a, b) => {
            collect_type_metas(a, out);
            collect_type_metas(b, out);
        }
        STy::Forall(_, t) => collect_type_metas(t, out),
    }
}

fn match_skeleton(
    skel: &SimpleType,
    actual: &SimpleType,
    out: &mut BTreeMap<TyVar, SimpleType>,
) -> Result<(), (String, String)> {
    match (skel, actual) {
        (SimpleType::Var(v), t) => {
            if let Some(prev) = out.get(v) {
                if prev != t {
                    return Err((format!("{prev}"), format!("{t}")));
                }
            } else {
                out.insert(*v, t.clone());
            }
            Ok(())
        }
        (SimpleType::Data(d1, a1), SimpleType::Data(d2, a2)) if d1 == d2 && a1.len() == a2.len() => {
            for (x, y) in a1.iter().zip(a2) {
                match_skeleton(x, y, out)?;
            }
            Ok(())
        }
        (SimpleType::Pair(a1, b1), SimpleType::Pair(a2, b2))
        | (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => {
            match_skeleton(a1, a2, out)?;
            match_skeleton(b1, b2, out)
        }
        _ => Err((format!("{skel}"), format!("{actual}"))),
    }
}

/// Per-equation obligations: footprint the left-hand side, infer the right,
/// and require the inferred type below the footprint type.
pub fn obligations(
    prog: &Program,
    templates: &BTreeMap<Name, TemplateType>,
    variances: &Variances,
    supply: &mut VarSupply,
) -> Result<Socp, GenError> {
    let mut cx = GenCtx::new(templates, variances, supply);
    let decl_of = |n: &str| templates.get(n).cloned();
    for (i, eq) in prog.equations.iter().enumerate() {
        cx.site = format!("equation {} of `{}`", i + 1, eq.fun_name());
        let fp = footprint(&eq.lhs, &decl_of, cx.supply)?;
        let inferred = cx.infer(&fp.ctx, &eq.rhs)?;
        cx.subtype(&inferred, &fp.ty)?;
    }
    Ok(cx.socp)
}

/// The admissible variables of each meta variable: the least fixed point of
/// variable propagation along inequalities, minus the occurrence-excluded
/// ones. Ordered by variable number (allocation order).
pub fn skolem_vars(socp: &Socp) -> BTreeMap<Meta, Vec<IVar>> {
    let metas = socp.metas();
    let mut aux: BTreeMap<Meta, BTreeSet<IVar>> =
        metas.iter().map(|m| (*m, BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for (a, b) in &socp.ineqs {
            let mut rhs_metas = BTreeSet::new();
            b.metas(&mut rhs_metas);
            if rhs_metas.is_empty() {
                continue;
            }
            let mut lhs_vars: Vec<IVar> = Vec::new();
            IxLike::free_vars(a, &mut lhs_vars);
            let mut lhs_metas = BTreeSet::new();
            a.metas(&mut lhs_metas);
            let mut add: BTreeSet<IVar> = lhs_vars.into_iter().collect();
            for lm in &lhs_metas {
                if let Some(s) = aux.get(lm) {
                    add.extend(s.iter().copied());
                }
            }
            for rm in &rhs_metas {
                let entry = aux.get_mut(rm).unwrap();
                let before = entry.len();
                entry.extend(add.iter().copied());
                if entry.len() != before {
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    metas
        .into_iter()
        .map(|m| {
            let excluded: BTreeSet<IVar> = socp
                .notin
                .iter()
                .filter(|(_, x)| *x == m)
                .map(|(v, _)| *v)
                .collect();
            let vars: Vec<IVar> = aux
                .remove(&m)
                .unwrap_or_default()
                .into_iter()
                .filter(|v| !excluded.contains(v))
                .collect();
            (m, vars)
        })
        .collect()
}

/// Replaces every meta variable by a fresh skolem symbol applied to its
/// skolem variables. Occurrence constraints are satisfied by construction
/// and dropped.
pub fn skolemize(socp: &Socp, sig: &mut Signature) -> (Focp, BTreeMap<Meta, Index>) {
    let sk = skolem_vars(socp);
    let mut subst: BTreeMap<Meta, SOIndex> = BTreeMap::new();
    let mut skolem_terms: BTreeMap<Meta, Index> = BTreeMap::new();
    for (m, vars) in &sk {
        let f = sig.fresh(vars.len(), Some(SymOrigin::Skolem(m.0)));
        let term = Index::app(f, vars.iter().map(|v| Index::Var(*v)).collect());
        skolem_terms.insert(*m, term.clone());
        subst.insert(*m, SOIndex::from_index(&term));
    }
    let ineqs = socp
        .ineqs
        .iter()
        .map(|(a, b)| {
            let a = a.subst_metas(&subst).to_index().expect("skolemized");
            let b = b.subst_metas(&subst).to_index().expect("skolemized");
            (a, b)
        })
        .collect();
    (Focp { ineqs }, skolem_terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::annotate_program;
    use crate::parser::parse_program;
    use crate::sized::compute_variances;

    fn so_var(n: u32) -> SOIndex {
        SOIndex::Var(IVar(n))
    }

    #[test]
    fn skolem_vars_single_propagation() {
        let mut socp = Socp::default();
        socp.push_ineq(so_var(0), SOIndex::Meta(Meta(0)));
        let sk = skolem_vars(&socp);
        assert_eq!(sk[&Meta(0)], vec![IVar(0)]);
    }

    #[test]
    fn skolem_vars_respect_occurrence() {
        let mut socp = Socp::default();
        socp.push_ineq(so_var(0), SOIndex::Meta(Meta(0)));
        socp.notin.insert((IVar(0), Meta(0)));
        let sk = skolem_vars(&socp);
        assert!(sk[&Meta(0)].is_empty());
    }

    #[test]
    fn skolem_vars_chain_through_metas() {
        let mut socp = Socp::default();
        // i <= Y, Y <= X
        socp.push_ineq(so_var(0), SOIndex::Meta(Meta(1)));
        socp.push_ineq(SOIndex::Meta(Meta(1)), SOIndex::Meta(Meta(0)));
        let sk = skolem_vars(&socp);
        assert_eq!(sk[&Meta(0)], vec![IVar(0)]);
    }

    #[test]
    fn skolemize_excludes_despite_relation() {
        let mut socp = Socp::default();
        // i <= X, i + j <= X, j notin X  =>  X -> f(i)
        socp.push_ineq(so_var(0), SOIndex::Meta(Meta(0)));
        socp.push_ineq(
            SOIndex::App(Sym::Add, vec![so_var(0), so_var(1)]),
            SOIndex::Meta(Meta(0)),
        );
        socp.notin.insert((IVar(1), Meta(0)));
        let mut sig = Signature::new();
        let (focp, terms) = skolemize(&socp, &mut sig);
        assert_eq!(focp.ineqs.len(), 2);
        match &terms[&Meta(0)] {
            Index::App(Sym::Fresh(_), args) => assert_eq!(args, &vec![Index::Var(IVar(0))]),
            other => panic!("unexpected skolem term {other:?}"),
        }
    }

    #[test]
    fn identity_obligation() {
        // id :: forall i. N_i -> N_{f(i)}, equation id x = x  =>  { i <= f(i) }
        let src = "id :: Nat -> Nat\nid x = x\n";
        let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let mut sig = Signature::new();
        let mut supply = VarSupply::new();
        let templates = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap();
        let tpl: BTreeMap<Name, TemplateType> = templates
            .funs
            .iter()
            .chain(templates.ctors.iter())
            .map(|(k, v)| (k.clone(), v.map_index(&SOIndex::from_index)))
            .collect();
        let variances = compute_variances(&prog);
        let socp = obligations(&prog, &tpl, &variances, &mut supply).unwrap();
        assert_eq!(socp.ineqs.len(), 1);
        let (a, b) = &socp.ineqs[0];
        assert!(matches!(a, SOIndex::Var(_)));
        match b {
            SOIndex::App(Sym::Fresh(_), args) => assert_eq!(args.len(), 1),
            other => panic!("expected f(i), got {other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let src = "\
append :: [a] -> [a] -> [a]
append [] ys = ys
append (x : xs) ys = x : append xs ys
";
        let render = || {
            let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
            let mut sig = Signature::new();
            let mut supply = VarSupply::new();
            let templates = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap();
            let tpl: BTreeMap<Name, TemplateType> = templates
                .funs
                .iter()
                .chain(templates.ctors.iter())
                .map(|(k, v)| (k.clone(), v.map_index(&SOIndex::from_index)))
                .collect();
            let variances = compute_variances(&prog);
            let socp = obligations(&prog, &tpl, &variances, &mut supply).unwrap();
            socp.render(&sig)
        };
        assert_eq!(render(), render());
    }
}
