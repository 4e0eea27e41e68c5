//! Sized types: simple types whose data-type occurrences carry index terms,
//! with quantification over index variables at arbitrary rank.
//!
//! The index representation is generic: `Index` for annotated declarations,
//! second-order index terms for templates during inference, and unfolded
//! max-polynomials for concretized output types.

use crate::index::IVar;
use crate::syntax::{Name, Program, SimpleType, TyVar};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Operations the sized-type machinery needs from an index representation.
pub trait IxLike: Clone + PartialEq + fmt::Debug {
    fn var(v: IVar) -> Self;
    fn as_var(&self) -> Option<IVar>;
    fn free_vars(&self, out: &mut Vec<IVar>);
    fn subst_vars(&self, map: &BTreeMap<IVar, Self>) -> Self;
}

impl IxLike for crate::index::Index {
    fn var(v: IVar) -> Self {
        crate::index::Index::Var(v)
    }
    fn as_var(&self) -> Option<IVar> {
        match self {
            crate::index::Index::Var(v) => Some(*v),
            _ => None,
        }
    }
    fn free_vars(&self, out: &mut Vec<IVar>) {
        for v in self.vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    fn subst_vars(&self, map: &BTreeMap<IVar, Self>) -> Self {
        self.subst(map)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum STy<Ix> {
    TyVar(TyVar),
    /// `D_a t1 .. tn`
    Data(Name, Ix, Vec<STy<Ix>>),
    Pair(Box<STy<Ix>>, Box<STy<Ix>>),
    /// The left side may itself be a polytype (higher rank).
    Arrow(Box<STy<Ix>>, Box<STy<Ix>>),
    Forall(Vec<IVar>, Box<STy<Ix>>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Variance {
    Covariant,
    Contravariant,
    Invariant,
    Unused,
}

pub type Variances = BTreeMap<Name, Vec<Variance>>;

/// Parameter variances for every data type, by a least fixed point over the
/// constructor signatures.
pub fn compute_variances(prog: &Program) -> Variances {
    let mut out: Variances = prog
        .datas
        .iter()
        .map(|d| (d.name.clone(), vec![Variance::Unused; d.params.len()]))
        .collect();
    loop {
        let mut changed = false;
        for d in &prog.datas {
            for (pi, pv) in d.params.iter().enumerate() {
                let mut pos = false;
                let mut neg = false;
                for c in &d.ctors {
                    for arg in &c.args {
                        occurs_polarity(arg, *pv, true, &out, &mut pos, &mut neg);
                    }
                }
                let v = match (pos, neg) {
                    (false, false) => Variance::Unused,
                    (true, false) => Variance::Covariant,
                    (false, true) => Variance::Contravariant,
                    (true, true) => Variance::Invariant,
                };
                let slot = &mut out.get_mut(&d.name).unwrap()[pi];
                if *slot != v {
                    *slot = v;
                    changed = true;
                }
            }
        }
        if !changed {
            return out;
        }
    }
}

fn occurs_polarity(
    t: &SimpleType,
    var: TyVar,
    positive: bool,
    vars: &Variances,
    pos: &mut bool,
    neg: &mut bool,
) {
    match t {
        SimpleType::Var(v) => {
            if *v == var {
                if positive {
                    *pos = true;
                } else {
                    *neg = true;
                }
            }
        }
        SimpleType::Pair(a, b) => {
            occurs_polarity(a, var, positive, vars, pos, neg);
            occurs_polarity(b, var, positive, vars, pos, neg);
        }
        SimpleType::Arrow(a, b) => {
            occurs_polarity(a, var, !positive, vars, pos, neg);
            occurs_polarity(b, var, positive, vars, pos, neg);
        }
        SimpleType::Data(d, args) => {
            for (i, arg) in args.iter().enumerate() {
                let v = vars
                    .get(d)
                    .and_then(|vs| vs.get(i))
                    .copied()
                    .unwrap_or(Variance::Invariant);
                match v {
                    Variance::Unused => {}
                    Variance::Covariant => occurs_polarity(arg, var, positive, vars, pos, neg),
                    Variance::Contravariant => occurs_polarity(arg, var, !positive, vars, pos, neg),
                    Variance::Invariant => {
                        occurs_polarity(arg, var, positive, vars, pos, neg);
                        occurs_polarity(arg, var, !positive, vars, pos, neg);
                    }
                }
            }
        }
    }
}

impl<Ix: IxLike> STy<Ix> {
    pub fn arrow(a: STy<Ix>, b: STy<Ix>) -> STy<Ix> {
        STy::Arrow(Box::new(a), Box::new(b))
    }

    pub fn forall(vars: Vec<IVar>, body: STy<Ix>) -> STy<Ix> {
        if vars.is_empty() {
            body
        } else {
            STy::Forall(vars, Box::new(body))
        }
    }

    pub fn skeleton(&self) -> SimpleType {
        match self {
            STy::TyVar(v) => SimpleType::Var(*v),
            STy::Data(d, _, ts) => {
                SimpleType::Data(d.clone(), ts.iter().map(|t| t.skeleton()).collect())
            }
            STy::Pair(a, b) => SimpleType::pair(a.skeleton(), b.skeleton()),
            STy::Arrow(a, b) => SimpleType::arrow(a.skeleton(), b.skeleton()),
            STy::Forall(_, t) => t.skeleton(),
        }
    }

    pub fn free_ivars(&self) -> Vec<IVar> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<IVar>, out: &mut Vec<IVar>) {
        match self {
            STy::TyVar(_) => {}
            STy::Data(_, a, ts) => {
                let mut vs = Vec::new();
                a.free_vars(&mut vs);
                for v in vs {
                    if !bound.contains(&v) && !out.contains(&v) {
                        out.push(v);
                    }
                }
                ts.iter().for_each(|t| t.collect_free(bound, out));
            }
            STy::Pair(a, b) | STy::Arrow(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            STy::Forall(vs, t) => {
                let n = vs.len();
                bound.extend(vs.iter().copied());
                t.collect_free(bound, out);
                bound.truncate(bound.len() - n);
            }
        }
    }

    /// Free index variables in positive (`true`) or negative positions.
    pub fn polarity_vars(&self, positive: bool, vars: &Variances) -> BTreeSet<IVar> {
        let mut pos = BTreeSet::new();
        let mut neg = BTreeSet::new();
        self.collect_polarity(true, vars, &mut Vec::new(), &mut pos, &mut neg);
        if positive {
            pos
        } else {
            neg
        }
    }

    fn collect_polarity(
        &self,
        positive: bool,
        vars: &Variances,
        bound: &mut Vec<IVar>,
        pos: &mut BTreeSet<IVar>,
        neg: &mut BTreeSet<IVar>,
    ) {
        match self {
            STy::TyVar(_) => {}
            STy::Data(d, a, ts) => {
                let mut vs = Vec::new();
                a.free_vars(&mut vs);
                for v in vs {
                    if !bound.contains(&v) {
                        if positive {
                            pos.insert(v);
                        } else {
                            neg.insert(v);
                        }
                    }
                }
                for (i, t) in ts.iter().enumerate() {
                    let var = vars
                        .get(d)
                        .and_then(|vs| vs.get(i))
                        .copied()
                        .unwrap_or(Variance::Invariant);
                    match var {
                        Variance::Unused => {}
                        Variance::Covariant => t.collect_polarity(positive, vars, bound, pos, neg),
                        Variance::Contravariant => {
                            t.collect_polarity(!positive, vars, bound, pos, neg)
                        }
                        Variance::Invariant => {
                            t.collect_polarity(positive, vars, bound, pos, neg);
                            t.collect_polarity(!positive, vars, bound, pos, neg);
                        }
                    }
                }
            }
            STy::Pair(a, b) => {
                a.collect_polarity(positive, vars, bound, pos, neg);
                b.collect_polarity(positive, vars, bound, pos, neg);
            }
            STy::Arrow(a, b) => {
                a.collect_polarity(!positive, vars, bound, pos, neg);
                b.collect_polarity(positive, vars, bound, pos, neg);
            }
            STy::Forall(vs, t) => {
                let n = vs.len();
                bound.extend(vs.iter().copied());
                t.collect_polarity(positive, vars, bound, pos, neg);
                bound.truncate(bound.len() - n);
            }
        }
    }

    /// Substitutes index terms for free index variables. Binders are
    /// globally fresh by construction, so no capture can occur; bound
    /// variables are still masked defensively.
    pub fn subst_index(&self, map: &BTreeMap<IVar, Ix>) -> STy<Ix> {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            STy::TyVar(_) => self.clone(),
            STy::Data(d, a, ts) => STy::Data(
                d.clone(),
                a.subst_vars(map),
                ts.iter().map(|t| t.subst_index(map)).collect(),
            ),
            STy::Pair(a, b) => {
                STy::Pair(Box::new(a.subst_index(map)), Box::new(b.subst_index(map)))
            }
            STy::Arrow(a, b) => {
                STy::Arrow(Box::new(a.subst_index(map)), Box::new(b.subst_index(map)))
            }
            STy::Forall(vs, t) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(v);
                }
                STy::Forall(vs.clone(), Box::new(t.subst_index(&inner)))
            }
        }
    }

    /// Substitutes sized types for type variables.
    pub fn subst_tyvars(&self, map: &BTreeMap<TyVar, STy<Ix>>) -> STy<Ix> {
        match self {
            STy::TyVar(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            STy::Data(d, a, ts) => STy::Data(
                d.clone(),
                a.clone(),
                ts.iter().map(|t| t.subst_tyvars(map)).collect(),
            ),
            STy::Pair(a, b) => {
                STy::Pair(Box::new(a.subst_tyvars(map)), Box::new(b.subst_tyvars(map)))
            }
            STy::Arrow(a, b) => {
                STy::Arrow(Box::new(a.subst_tyvars(map)), Box::new(b.subst_tyvars(map)))
            }
            STy::Forall(vs, t) => STy::Forall(vs.clone(), Box::new(t.subst_tyvars(map))),
        }
    }

    /// Renames every bound index variable to a fresh one.
    pub fn rename_binders(&self, fresh: &mut impl FnMut() -> IVar) -> STy<Ix> {
        fn go<Ix: IxLike>(
            t: &STy<Ix>,
            fresh: &mut impl FnMut() -> IVar,
            map: &BTreeMap<IVar, Ix>,
        ) -> STy<Ix> {
            match t {
                STy::TyVar(_) => t.clone(),
                STy::Data(d, a, ts) => STy::Data(
                    d.clone(),
                    a.subst_vars(map),
                    ts.iter().map(|t| go(t, fresh, map)).collect(),
                ),
                STy::Pair(a, b) => {
                    STy::Pair(Box::new(go(a, fresh, map)), Box::new(go(b, fresh, map)))
                }
                STy::Arrow(a, b) => {
                    STy::Arrow(Box::new(go(a, fresh, map)), Box::new(go(b, fresh, map)))
                }
                STy::Forall(vs, body) => {
                    let mut inner = map.clone();
                    let new_vs: Vec<IVar> = vs
                        .iter()
                        .map(|v| {
                            let nv = fresh();
                            inner.insert(*v, Ix::var(nv));
                            nv
                        })
                        .collect();
                    STy::Forall(new_vs, Box::new(go(body, fresh, &inner)))
                }
            }
        }
        go(self, fresh, &BTreeMap::new())
    }

    /// Opens a top-level quantifier, if any: returns bound variables and body.
    pub fn open(&self) -> (Vec<IVar>, &STy<Ix>) {
        match self {
            STy::Forall(vs, t) => (vs.clone(), t),
            t => (vec![], t),
        }
    }

    /// Instantiates the top-level quantifier with the given index terms.
    pub fn instantiate(&self, args: &[Ix]) -> STy<Ix> {
        let (vs, body) = self.open();
        assert_eq!(vs.len(), args.len(), "instantiation arity mismatch");
        let map: BTreeMap<IVar, Ix> = vs.into_iter().zip(args.iter().cloned()).collect();
        body.subst_index(&map)
    }

    /// Converts the index representation.
    pub fn map_index<J: IxLike>(&self, f: &impl Fn(&Ix) -> J) -> STy<J> {
        match self {
            STy::TyVar(v) => STy::TyVar(*v),
            STy::Data(d, a, ts) => {
                STy::Data(d.clone(), f(a), ts.iter().map(|t| t.map_index(f)).collect())
            }
            STy::Pair(a, b) => STy::Pair(Box::new(a.map_index(f)), Box::new(b.map_index(f))),
            STy::Arrow(a, b) => STy::Arrow(Box::new(a.map_index(f)), Box::new(b.map_index(f))),
            STy::Forall(vs, t) => STy::Forall(vs.clone(), Box::new(t.map_index(f))),
        }
    }

    /// Splits an arrow chain `t1 -> .. -> tn -> r` at monotype level.
    pub fn arrow_spine(&self) -> (Vec<&STy<Ix>>, &STy<Ix>) {
        let mut args = Vec::new();
        let mut t = self;
        while let STy::Arrow(a, b) = t {
            args.push(a.as_ref());
            t = b;
        }
        (args, t)
    }
}

/// Canonicity: index terms in negative (pattern-matchable) positions are
/// pairwise distinct variables that do not recur in the rest of the type.
pub fn is_canonical<Ix: IxLike>(t: &STy<Ix>, vars: &Variances) -> bool {
    match t {
        STy::Forall(vs, body) => {
            is_canonical_mono(body, vars)
                && body
                    .polarity_vars(false, vars)
                    .iter()
                    .all(|v| vs.contains(v))
        }
        _ => is_canonical_mono(t, vars),
    }
}

fn is_canonical_mono<Ix: IxLike>(t: &STy<Ix>, vars: &Variances) -> bool {
    match t {
        STy::TyVar(_) => true,
        STy::Data(_, _, ts) => ts.iter().all(|t| is_canonical(t, vars)),
        STy::Pair(a, b) => is_canonical_mono(a, vars) && is_canonical_mono(b, vars),
        STy::Arrow(l, r) => {
            if !is_canonical_mono_or_poly_rhs(r, vars) {
                return false;
            }
            let rhs_fnv = r.polarity_vars(false, vars);
            match l.as_ref() {
                STy::TyVar(_) => true,
                STy::Data(..) | STy::Pair(..) => {
                    // all indices must be distinct variables, absent from
                    // the negative positions of the rest
                    let mut seen: BTreeSet<IVar> = BTreeSet::new();
                    if !pattern_indexed(l, &mut seen) {
                        return false;
                    }
                    seen.iter().all(|v| !rhs_fnv.contains(v))
                }
                STy::Forall(..) => {
                    is_canonical(l, vars)
                        && l.free_ivars().iter().all(|v| !rhs_fnv.contains(v))
                }
                STy::Arrow(..) => {
                    // a monotype arrow argument acts as the polytype
                    // `forall (). ..`: canonical with no free negative vars
                    is_canonical_mono(l, vars)
                        && l.polarity_vars(false, vars).is_empty()
                        && l.free_ivars().iter().all(|v| !rhs_fnv.contains(v))
                }
            }
        }
        STy::Forall(..) => false,
    }
}

fn is_canonical_mono_or_poly_rhs<Ix: IxLike>(t: &STy<Ix>, vars: &Variances) -> bool {
    is_canonical_mono(t, vars)
}

/// Every index in the type is a variable, all pairwise distinct.
fn pattern_indexed<Ix: IxLike>(t: &STy<Ix>, seen: &mut BTreeSet<IVar>) -> bool {
    match t {
        STy::TyVar(_) => true,
        STy::Data(_, a, ts) => match a.as_var() {
            Some(v) => seen.insert(v) && ts.iter().all(|t| pattern_indexed(t, seen)),
            None => false,
        },
        STy::Pair(a, b) => pattern_indexed(a, seen) && pattern_indexed(b, seen),
        _ => false,
    }
}

/// A typing context mapping variables to sized types.
pub type SizedCtx<Ix> = BTreeMap<Name, STy<Ix>>;

/// Rendering in the surface notation, e.g. `forall i j. L_{i} a -> L_{i + j} a`.
pub fn render_sty<Ix: IxLike>(
    t: &STy<Ix>,
    render_ix: &impl Fn(&Ix, &dyn Fn(IVar) -> String) -> String,
) -> String {
    // name binders and free variables in order of appearance
    let mut names: BTreeMap<IVar, String> = BTreeMap::new();
    let mut order: Vec<IVar> = Vec::new();
    collect_var_order(t, &mut order);
    const POOL: [&str; 12] = ["i", "j", "k", "l", "m", "n", "p", "q", "r", "u", "v", "w"];
    for (pos, v) in order.iter().enumerate() {
        let nm = if pos < POOL.len() {
            POOL[pos].to_string()
        } else {
            format!("i{}", pos)
        };
        names.insert(*v, nm);
    }
    let lookup = move |v: IVar| names.get(&v).cloned().unwrap_or_else(|| format!("{v}"));
    render_inner(t, &lookup, render_ix, 0)
}

fn collect_var_order<Ix: IxLike>(t: &STy<Ix>, order: &mut Vec<IVar>) {
    match t {
        STy::TyVar(_) => {}
        STy::Data(_, a, ts) => {
            let mut vs = Vec::new();
            a.free_vars(&mut vs);
            for v in vs {
                if !order.contains(&v) {
                    order.push(v);
                }
            }
            ts.iter().for_each(|t| collect_var_order(t, order));
        }
        STy::Pair(a, b) | STy::Arrow(a, b) => {
            collect_var_order(a, order);
            collect_var_order(b, order);
        }
        STy::Forall(vs, t) => {
            for v in vs {
                if !order.contains(v) {
                    order.push(*v);
                }
            }
            collect_var_order(t, order);
        }
    }
}

fn render_inner<Ix: IxLike>(
    t: &STy<Ix>,
    names: &dyn Fn(IVar) -> String,
    render_ix: &impl Fn(&Ix, &dyn Fn(IVar) -> String) -> String,
    prec: u8,
) -> String {
    match t {
        STy::TyVar(v) => format!("{v}"),
        STy::Data(d, a, ts) => {
            let ix = render_ix(a, names);
            let base = if d == "List" && ts.len() == 1 {
                format!("L_{{{ix}}} {}", render_inner(&ts[0], names, render_ix, 2))
            } else if ts.is_empty() {
                format!("{d}_{{{ix}}}")
            } else {
                let args: Vec<String> =
                    ts.iter().map(|t| render_inner(t, names, render_ix, 2)).collect();
                format!("{d}_{{{ix}}} {}", args.join(" "))
            };
            if prec >= 2 && !ts.is_empty() {
                format!("({base})")
            } else {
                base
            }
        }
        STy::Pair(a, b) => format!(
            "({}, {})",
            render_inner(a, names, render_ix, 0),
            render_inner(b, names, render_ix, 0)
        ),
        STy::Arrow(a, b) => {
            let s = format!(
                "{} -> {}",
                render_inner(a, names, render_ix, 1),
                render_inner(b, names, render_ix, 0)
            );
            if prec >= 1 {
                format!("({s})")
            } else {
                s
            }
        }
        STy::Forall(vs, t) => {
            let binders: Vec<String> = vs.iter().map(|v| names(*v)).collect();
            let s = format!("forall {}. {}", binders.join(" "), render_inner(t, names, render_ix, 0));
            if prec >= 1 {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{IVar, Index};
    use crate::parser::parse_program;

    fn variances() -> Variances {
        compute_variances(&parse_program("").unwrap())
    }

    fn lv(d: u32, elem: STy<Index>) -> STy<Index> {
        STy::Data("List".into(), Index::Var(IVar(d)), vec![elem])
    }

    #[test]
    fn list_is_covariant() {
        let vs = variances();
        assert_eq!(vs["List"], vec![Variance::Covariant]);
    }

    #[test]
    fn canonical_rev_declaration() {
        let vars = variances();
        // forall i j. L_i a -> L_j a -> L_{i+j} a
        let a = STy::TyVar(TyVar(0));
        let ret = STy::Data(
            "List".into(),
            Index::add(Index::Var(IVar(0)), Index::Var(IVar(1))),
            vec![a.clone()],
        );
        let t = STy::forall(
            vec![IVar(0), IVar(1)],
            STy::arrow(lv(0, a.clone()), STy::arrow(lv(1, a.clone()), ret)),
        );
        assert!(is_canonical(&t, &vars));
    }

    #[test]
    fn non_variable_negative_index_not_canonical() {
        let vars = variances();
        // forall i. N_{i+i} -> N_i
        let n = |ix: Index| STy::Data("Nat".into(), ix, vec![]);
        let t = STy::forall(
            vec![IVar(0)],
            STy::arrow(
                n(Index::add(Index::Var(IVar(0)), Index::Var(IVar(0)))),
                n(Index::Var(IVar(0))),
            ),
        );
        assert!(!is_canonical(&t, &vars));
    }

    #[test]
    fn repeated_argument_variable_not_canonical() {
        let vars = variances();
        // forall i. N_i -> N_i -> N_i
        let n = |v: u32| STy::Data("Nat".into(), Index::Var(IVar(v)), vec![]);
        let t = STy::forall(
            vec![IVar(0)],
            STy::arrow(n(0), STy::arrow(n(0), n(0))),
        );
        assert!(!is_canonical(&t, &vars));
    }

    #[test]
    fn polarity_vars_flip_under_arrow() {
        let vars = variances();
        let a = STy::TyVar(TyVar(0));
        let t: STy<Index> = STy::arrow(lv(0, a.clone()), lv(1, a));
        let fnv = t.polarity_vars(false, &vars);
        let fpv = t.polarity_vars(true, &vars);
        assert!(fnv.contains(&IVar(0)) && !fnv.contains(&IVar(1)));
        assert!(fpv.contains(&IVar(1)) && !fpv.contains(&IVar(0)));
    }
}
