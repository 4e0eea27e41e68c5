//! Annotation of simple types with index terms, producing canonical
//! template sized types.
//!
//! Data-type argument positions receive fresh, pairwise distinct index
//! variables (recursively, inner positions first). Functional arguments are
//! annotated recursively, closed under a quantifier over their own
//! interface variables, and contribute `m` extra variables that remain free
//! so that callers can thread the size of a captured environment through.
//! Return positions receive a fresh index symbol applied to all variables
//! in scope. Constructors get additive types: the return index is the sum
//! of the argument variables plus 0 (nullary) or 1.

use crate::index::{IVar, Index, Signature, SymOrigin, VarSupply};
use crate::sized::STy;
use crate::syntax::{Name, Program, SimpleType};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub enum AnnotateError {
    /// The type has an arrow spine position that is a bare type variable,
    /// so no useful size annotation exists.
    TooGeneral { fun: Name, ty: SimpleType },
    HigherOrderCtor { ctor: Name },
}

impl fmt::Display for AnnotateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnotateError::TooGeneral { fun, ty } => write!(
                f,
                "type of `{fun}` is too general to annotate with sizes ({ty}); \
                 a functional parameter mentions a bare type variable — try `--specialize duplicate`"
            ),
            AnnotateError::HigherOrderCtor { ctor } => write!(
                f,
                "constructor `{ctor}` has a functional argument; only first-order data is sized"
            ),
        }
    }
}

impl std::error::Error for AnnotateError {}

#[derive(Clone, Debug, Default)]
pub struct Templates {
    pub funs: BTreeMap<Name, STy<Index>>,
    pub ctors: BTreeMap<Name, STy<Index>>,
}

impl Templates {
    pub fn get(&self, name: &str) -> Option<&STy<Index>> {
        self.funs.get(name).or_else(|| self.ctors.get(name))
    }
}

struct Annot<'a> {
    sig: &'a mut Signature,
    supply: &'a mut VarSupply,
    extra_vars: u32,
    current: Name,
}

/// Annotates every constructor and every function of the program.
/// `m` is the number of extra variables per functional argument.
pub fn annotate_program(
    prog: &Program,
    m: u32,
    sig: &mut Signature,
    supply: &mut VarSupply,
) -> Result<Templates, AnnotateError> {
    let mut templates = Templates::default();
    let mut cx = Annot { sig, supply, extra_vars: m, current: String::new() };

    for f in &prog.funs {
        let scheme = match prog.sigs.get(f) {
            Some(s) => s,
            None => continue,
        };
        cx.current = f.clone();
        check_not_too_general(f, &scheme.ty)?;
        templates.funs.insert(f.clone(), cx.annotate_fun(&scheme.ty));
    }
    for d in &prog.datas {
        for c in &d.ctors {
            cx.current = c.name.clone();
            templates.ctors.insert(c.name.clone(), cx.annotate_ctor(prog, &c.name)?);
        }
    }
    Ok(templates)
}

/// A functional parameter whose arrow spine contains a bare type variable
/// cannot carry useful size information.
fn check_not_too_general(fun: &Name, ty: &SimpleType) -> Result<(), AnnotateError> {
    fn arrow_has_bare_var(t: &SimpleType) -> bool {
        let (args, ret) = t.arrow_spine();
        args.iter().chain(std::iter::once(&ret)).any(|p| match p {
            SimpleType::Var(_) => true,
            SimpleType::Arrow(..) => arrow_has_bare_var(p),
            _ => param_positions_have_bare_arrow(p),
        })
    }
    fn param_positions_have_bare_arrow(t: &SimpleType) -> bool {
        match t {
            SimpleType::Data(_, ts) => ts.iter().any(|t| match t {
                SimpleType::Arrow(..) => arrow_has_bare_var(t),
                _ => param_positions_have_bare_arrow(t),
            }),
            SimpleType::Pair(a, b) => {
                param_positions_have_bare_arrow(a) || param_positions_have_bare_arrow(b)
            }
            _ => false,
        }
    }
    let (args, _) = ty.arrow_spine();
    for a in args {
        if matches!(a, SimpleType::Arrow(..)) && arrow_has_bare_var(a) {
            return Err(AnnotateError::TooGeneral { fun: fun.clone(), ty: ty.clone() });
        }
    }
    Ok(())
}

impl Annot<'_> {
    fn annotate_fun(&mut self, ty: &SimpleType) -> STy<Index> {
        let (args, ret) = ty.arrow_spine();
        let mut binders: Vec<IVar> = Vec::new();
        let mut arg_tys: Vec<STy<Index>> = Vec::new();
        for a in args {
            let (t, frees) = self.annot_neg(a);
            binders.extend(frees);
            arg_tys.push(t);
        }
        let ret_ty = self.annot_pos(ret, &binders);
        let body = arg_tys.into_iter().rev().fold(ret_ty, |acc, a| STy::arrow(a, acc));
        STy::forall(binders, body)
    }

    fn annotate_ctor(&mut self, prog: &Program, name: &str) -> Result<STy<Index>, AnnotateError> {
        let scheme = prog.ctor_scheme(name).expect("known constructor");
        let (args, ret) = scheme.ty.arrow_spine();
        let nullary = args.is_empty();
        let mut binders: Vec<IVar> = Vec::new();
        let mut arg_tys: Vec<STy<Index>> = Vec::new();
        for a in &args {
            if matches!(a, SimpleType::Arrow(..)) {
                return Err(AnnotateError::HigherOrderCtor { ctor: name.to_string() });
            }
            let (t, frees) = self.annot_neg(a);
            binders.extend(frees);
            arg_tys.push(t);
        }
        let w = if nullary { 0 } else { 1 };
        let mut ix = Index::sum(binders.iter().map(|v| Index::Var(*v)).collect());
        for _ in 0..w {
            ix = Index::succ(ix);
        }
        let ret_ty = match ret {
            SimpleType::Data(d, ts) => STy::Data(
                d.clone(),
                ix,
                ts.iter()
                    .map(|t| match t {
                        SimpleType::Var(v) => STy::TyVar(*v),
                        _ => unreachable!("data declarations apply type variables only"),
                    })
                    .collect(),
            ),
            _ => unreachable!("constructor returns its data type"),
        };
        let body = arg_tys.into_iter().rev().fold(ret_ty, |acc, a| STy::arrow(a, acc));
        Ok(STy::forall(binders, body))
    }

    /// Argument positions: fresh distinct variables for data, recursive
    /// polytypes for arrows. Returns the annotated type together with the
    /// variables it leaves free (its own fresh variables, or for arrows the
    /// extra variables).
    fn annot_neg(&mut self, t: &SimpleType) -> (STy<Index>, Vec<IVar>) {
        match t {
            SimpleType::Var(v) => (STy::TyVar(*v), vec![]),
            SimpleType::Data(d, ts) => {
                let mut frees = Vec::new();
                let mut args = Vec::new();
                for t in ts {
                    let (at, fs) = self.annot_neg(t);
                    frees.extend(fs);
                    args.push(at);
                }
                let v = self.supply.fresh();
                frees.push(v);
                (STy::Data(d.clone(), Index::Var(v), args), frees)
            }
            SimpleType::Pair(a, b) => {
                let (ta, mut fa) = self.annot_neg(a);
                let (tb, fb) = self.annot_neg(b);
                fa.extend(fb);
                (STy::Pair(Box::new(ta), Box::new(tb)), fa)
            }
            SimpleType::Arrow(..) => {
                let (args, ret) = t.arrow_spine();
                let mut bound: Vec<IVar> = Vec::new();
                let mut arg_tys = Vec::new();
                for a in args {
                    let (at, fs) = self.annot_neg(a);
                    bound.extend(fs);
                    arg_tys.push(at);
                }
                let extras: Vec<IVar> = (0..self.extra_vars).map(|_| self.supply.fresh()).collect();
                let mut scope = bound.clone();
                scope.extend(extras.iter().copied());
                let ret_ty = self.annot_pos(ret, &scope);
                let body = arg_tys.into_iter().rev().fold(ret_ty, |acc, a| STy::arrow(a, acc));
                (STy::forall(bound, body), extras)
            }
        }
    }

    /// Result positions: every data index becomes a fresh symbol applied to
    /// the variables in scope; symbols for inner positions are allocated
    /// first. Arrows in result position become canonical polytypes whose
    /// result symbols also see the enclosing scope (a returned closure may
    /// capture anything in it).
    fn annot_pos(&mut self, t: &SimpleType, scope: &[IVar]) -> STy<Index> {
        match t {
            SimpleType::Var(v) => STy::TyVar(*v),
            SimpleType::Data(d, ts) => {
                let args: Vec<STy<Index>> = ts.iter().map(|t| self.annot_pos(t, scope)).collect();
                let f = self.sig.fresh(scope.len(), Some(SymOrigin::Annotation(self.current.clone())));
                let ix = Index::app(f, scope.iter().map(|v| Index::Var(*v)).collect());
                STy::Data(d.clone(), ix, args)
            }
            SimpleType::Pair(a, b) => {
                let ta = self.annot_pos(a, scope);
                let tb = self.annot_pos(b, scope);
                STy::Pair(Box::new(ta), Box::new(tb))
            }
            SimpleType::Arrow(..) => {
                let (args, ret) = t.arrow_spine();
                let mut bound: Vec<IVar> = Vec::new();
                let mut arg_tys = Vec::new();
                for a in args {
                    let (at, fs) = self.annot_neg(a);
                    bound.extend(fs);
                    arg_tys.push(at);
                }
                let mut inner_scope: Vec<IVar> = scope.to_vec();
                inner_scope.extend(bound.iter().copied());
                let ret_ty = self.annot_pos(ret, &inner_scope);
                let body = arg_tys.into_iter().rev().fold(ret_ty, |acc, a| STy::arrow(a, acc));
                STy::forall(bound, body)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Sym;
    use crate::parser::parse_program;
    use crate::sized::{compute_variances, is_canonical, render_sty};

    fn render(t: &STy<Index>, sig: &Signature) -> String {
        render_sty(t, &|ix, names| ix.render(sig, &|v| names(v)))
    }

    fn setup(src: &str) -> (Program, Templates, Signature) {
        let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let mut sig = Signature::new();
        let mut supply = VarSupply::new();
        let t = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap();
        (prog, t, sig)
    }

    #[test]
    fn append_template() {
        let (prog, t, sig) = setup("append :: [a] -> [a] -> [a]\nappend [] ys = ys\nappend (x : xs) ys = x : append xs ys\n");
        let vars = compute_variances(&prog);
        let tpl = &t.funs["append"];
        assert!(is_canonical(tpl, &vars));
        assert_eq!(render(tpl, &sig), "forall i j. L_{i} a -> L_{j} a -> L_{f1(i, j)} a");
    }

    #[test]
    fn map_template_carries_extra_variable() {
        let src = "\
map :: ([a] -> [a]) -> [[a]] -> [[a]]
map f [] = []
map f (x : xs) = f x : map f xs
";
        let (prog, t, sig) = setup(src);
        let vars = compute_variances(&prog);
        let tpl = &t.funs["map"];
        assert!(is_canonical(tpl, &vars));
        // The functional argument's result sees its own argument and the
        // extra variable; the program result sees extra + both list vars.
        assert_eq!(
            render(tpl, &sig),
            "forall i j k. (forall l. L_{l} a -> L_{f1(l, i)} a) -> L_{k} (L_{j} a) -> L_{f3(i, j, k)} (L_{f2(i, j, k)} a)"
        );
    }

    #[test]
    fn cons_is_additive() {
        let (prog, t, sig) = setup("");
        let vars = compute_variances(&prog);
        let cons = &t.ctors["Cons"];
        assert!(is_canonical(cons, &vars));
        assert_eq!(render(cons, &sig), "forall i. a -> L_{i} a -> L_{i + 1} a");
        let nil = &t.ctors["Nil"];
        assert_eq!(render(nil, &sig), "L_{0} a");
        let _ = Sym::Zero;
    }

    #[test]
    fn too_general_functional_argument_is_rejected() {
        let src = "twice f x = f (f x)\nid2 y = y\n";
        let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let mut sig = Signature::new();
        let mut supply = VarSupply::new();
        let err = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap_err();
        assert!(matches!(err, AnnotateError::TooGeneral { .. }), "{err}");
    }
}
