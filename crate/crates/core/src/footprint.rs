//! Footprints: the most general context/type pair for an equation's
//! left-hand side, computed by matching patterns against canonical
//! declarations. Pattern matching instantiates exactly one declaration
//! variable per constructor argument, so a substitution mechanism suffices.

use crate::index::VarSupply;
use crate::sized::{IxLike, STy, SizedCtx};
use crate::syntax::{Name, SimpleType, Term, TermKind};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone)]
pub enum FootprintError {
    MissingDeclaration(Name),
    NonCanonical { symbol: Name, detail: String },
    Malformed(String),
}

impl fmt::Display for FootprintError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FootprintError::MissingDeclaration(n) => write!(f, "no sized declaration for `{n}`"),
            FootprintError::NonCanonical { symbol, detail } => {
                write!(f, "declaration of `{symbol}` is not canonical: {detail}")
            }
            FootprintError::Malformed(m) => write!(f, "malformed left-hand side: {m}"),
        }
    }
}

impl std::error::Error for FootprintError {}

pub struct Footprint<Ix> {
    pub ctx: SizedCtx<Ix>,
    pub ty: STy<Ix>,
}

/// Computes the footprint of a linear left-hand side `f p1 .. pk`.
/// `decl_of` must return the closed canonical declaration of functions and
/// constructors. Binders are renamed apart with `supply`.
pub fn footprint<Ix: IxLike>(
    lhs: &Term,
    decl_of: &impl Fn(&str) -> Option<STy<Ix>>,
    supply: &mut VarSupply,
) -> Result<Footprint<Ix>, FootprintError> {
    let (head, pats) = lhs.spine();
    let fun = match &head.kind {
        TermKind::Fun(f) => f.clone(),
        _ => return Err(FootprintError::Malformed("head is not a function".into())),
    };
    let decl = instantiate_decl(&fun, head.ty.as_ref(), decl_of, supply)?;
    let mut ctx = BTreeMap::new();
    let ty = walk_args(decl, &pats, &fun, decl_of, supply, &mut ctx)?;
    Ok(Footprint { ctx, ty })
}

/// Opens a declaration: binders renamed fresh and dropped (their variables
/// become free), type variables renamed to the occurrence's variables.
fn instantiate_decl<Ix: IxLike>(
    name: &str,
    occurrence_ty: Option<&SimpleType>,
    decl_of: &impl Fn(&str) -> Option<STy<Ix>>,
    supply: &mut VarSupply,
) -> Result<STy<Ix>, FootprintError> {
    let decl = decl_of(name).ok_or_else(|| FootprintError::MissingDeclaration(name.to_string()))?;
    let renamed = decl.rename_binders(&mut || supply.fresh());
    let (_, body) = renamed.open();
    let mut body = body.clone();
    if let Some(occ) = occurrence_ty {
        let mut map = BTreeMap::new();
        match_tyvars(&body.skeleton(), occ, &mut map).map_err(|d| FootprintError::NonCanonical {
            symbol: name.to_string(),
            detail: d,
        })?;
        let map: BTreeMap<_, STy<Ix>> = map
            .into_iter()
            .map(|(v, t)| match t {
                SimpleType::Var(u) => Ok((v, STy::TyVar(u))),
                other => Err(FootprintError::Malformed(format!(
                    "left-hand side instantiates a type variable with {other}; \
                     equations must be at full generality"
                ))),
            })
            .collect::<Result<_, _>>()?;
        body = body.subst_tyvars(&map);
    }
    Ok(body)
}

fn match_tyvars(
    skel: &SimpleType,
    actual: &SimpleType,
    out: &mut BTreeMap<crate::syntax::TyVar, SimpleType>,
) -> Result<(), String> {
    match (skel, actual) {
        (SimpleType::Var(v), t) => {
            if let Some(prev) = out.get(v) {
                if prev != t {
                    return Err(format!("type variable {v} matched both {prev} and {t}"));
                }
            } else {
                out.insert(*v, t.clone());
            }
            Ok(())
        }
        (SimpleType::Data(d1, a1), SimpleType::Data(d2, a2)) if d1 == d2 && a1.len() == a2.len() => {
            for (x, y) in a1.iter().zip(a2) {
                match_tyvars(x, y, out)?;
            }
            Ok(())
        }
        (SimpleType::Pair(a1, b1), SimpleType::Pair(a2, b2))
        | (SimpleType::Arrow(a1, b1), SimpleType::Arrow(a2, b2)) => {
            match_tyvars(a1, a2, out)?;
            match_tyvars(b1, b2, out)
        }
        _ => Err(format!("skeleton mismatch: {skel} vs {actual}")),
    }
}

/// Walks the argument patterns down an opened declaration type.
fn walk_args<Ix: IxLike>(
    mut cur: STy<Ix>,
    pats: &[&Term],
    fun: &Name,
    decl_of: &impl Fn(&str) -> Option<STy<Ix>>,
    supply: &mut VarSupply,
    ctx: &mut SizedCtx<Ix>,
) -> Result<STy<Ix>, FootprintError> {
    for pat in pats {
        let (arg_ty, rest) = match cur {
            STy::Arrow(a, b) => (*a, *b),
            other => {
                return Err(FootprintError::NonCanonical {
                    symbol: fun.clone(),
                    detail: format!("expected an arrow for a pattern, found {other:?}"),
                })
            }
        };
        match &pat.kind {
            TermKind::Var(x) => {
                ctx.insert(x.clone(), arg_ty);
                cur = rest;
            }
            TermKind::Con(_) | TermKind::App(..) => {
                let (d, v, expected_args) = match &arg_ty {
                    STy::Data(d, ix, args) => match ix.as_var() {
                        Some(v) => (d.clone(), v, args.clone()),
                        None => {
                            return Err(FootprintError::NonCanonical {
                                symbol: fun.clone(),
                                detail: "matched argument index is not a variable".into(),
                            })
                        }
                    },
                    _ => {
                        return Err(FootprintError::NonCanonical {
                            symbol: fun.clone(),
                            detail: "constructor pattern against a non-data argument".into(),
                        })
                    }
                };
                let pat_ty = pattern_footprint(pat, &d, &expected_args, decl_of, supply, ctx)?;
                let ix = match &pat_ty {
                    STy::Data(_, ix, _) => ix.clone(),
                    _ => unreachable!("pattern footprints are data typed"),
                };
                let mut map = BTreeMap::new();
                map.insert(v, ix);
                cur = rest.subst_index(&map);
            }
            _ => return Err(FootprintError::Malformed("invalid pattern".into())),
        }
    }
    Ok(cur)
}

/// Footprint of a constructor pattern at expected element types.
fn pattern_footprint<Ix: IxLike>(
    pat: &Term,
    data: &Name,
    expected_args: &[STy<Ix>],
    decl_of: &impl Fn(&str) -> Option<STy<Ix>>,
    supply: &mut VarSupply,
    ctx: &mut SizedCtx<Ix>,
) -> Result<STy<Ix>, FootprintError> {
    let (head, args) = pat.spine();
    let cname = match &head.kind {
        TermKind::Con(c) => c.clone(),
        _ => return Err(FootprintError::Malformed("pattern head is not a constructor".into())),
    };
    let decl =
        decl_of(&cname).ok_or_else(|| FootprintError::MissingDeclaration(cname.clone()))?;
    let renamed = decl.rename_binders(&mut || supply.fresh());
    let (_, body) = renamed.open();
    // The constructor's result type lists its data parameters in order;
    // instantiate them with the expected argument types.
    let (_, ret) = body.arrow_spine();
    let params: Vec<crate::syntax::TyVar> = match ret {
        STy::Data(d, _, ps) if d == data => ps
            .iter()
            .map(|p| match p {
                STy::TyVar(v) => Ok(*v),
                _ => Err(FootprintError::Malformed(
                    "constructor result applies non-variable type arguments".into(),
                )),
            })
            .collect::<Result<_, _>>()?,
        _ => {
            return Err(FootprintError::Malformed(format!(
                "constructor `{cname}` does not build `{data}`"
            )))
        }
    };
    if params.len() != expected_args.len() {
        return Err(FootprintError::Malformed("data parameter arity mismatch".into()));
    }
    let tymap: BTreeMap<_, _> = params.into_iter().zip(expected_args.iter().cloned()).collect();
    let body = body.subst_tyvars(&tymap);
    walk_args(body, &args, &cname, decl_of, supply, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::annotate_program;
    use crate::index::{Index, Signature};
    use crate::parser::parse_program;
    use crate::sized::render_sty;

    fn render(t: &STy<Index>, sig: &Signature) -> String {
        render_sty(t, &|ix, names| ix.render(sig, &|v| names(v)))
    }

    #[test]
    fn footprint_of_rev_cons_equation() {
        let src = "\
rev :: [a] -> [a] -> [a]
rev [] ys = ys
rev (x : xs) ys = rev xs (x : ys)
";
        let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let mut sig = Signature::new();
        let mut supply = VarSupply::new();
        let templates = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap();
        let decl_of = |n: &str| templates.get(n).cloned();

        // cons equation: context {x: a, xs: L_m a, ys: L_j a}, type L_{f1(m+1, j)} a
        let eq = &prog.equations[1];
        let fp = footprint(&eq.lhs, &decl_of, &mut supply).unwrap();
        assert_eq!(fp.ctx.len(), 3);
        let xs = render(&fp.ctx["xs"], &sig);
        assert!(xs.starts_with("L_{"), "{xs}");
        let ty = render(&fp.ty, &sig);
        // rev's return index f1 applied to (s(m), j)
        assert!(ty.contains("f1(") && ty.contains("+ 1"), "{ty}");

        // nil equation: context {ys}, type f1(0, j)
        let eq0 = &prog.equations[0];
        let fp0 = footprint(&eq0.lhs, &decl_of, &mut supply).unwrap();
        assert_eq!(fp0.ctx.len(), 1);
        let ty0 = render(&fp0.ty, &sig);
        assert!(ty0.contains("f1(0, "), "{ty0}");
    }

    #[test]
    fn footprint_zero_arity() {
        let src = "c :: Nat\nc = Z\n";
        let prog = crate::hm::infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let mut sig = Signature::new();
        let mut supply = VarSupply::new();
        let templates = annotate_program(&prog, 1, &mut sig, &mut supply).unwrap();
        let decl_of = |n: &str| templates.get(n).cloned();
        let fp = footprint(&prog.equations[0].lhs, &decl_of, &mut supply).unwrap();
        assert!(fp.ctx.is_empty());
        let ty = render(&fp.ty, &sig);
        assert_eq!(ty, "Nat_{f1()}");
    }
}
