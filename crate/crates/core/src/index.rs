//! Index terms and their semantics.
//!
//! Index terms are built from index variables and a signature containing
//! zero, successor, addition (always interpreted as such), the interpreted
//! symbols `*` and `max` used when rendering solved types, and fresh
//! symbols introduced by annotation and skolemization. An interpretation
//! assigns a weakly monotone max-polynomial to every fresh symbol.

use crate::maxpoly::{MaxPoly, Mono, Poly};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct IVar(pub u32);

impl fmt::Display for IVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "i{}", self.0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct VarSupply {
    next: u32,
}

impl VarSupply {
    pub fn new() -> VarSupply {
        VarSupply::default()
    }

    pub fn fresh(&mut self) -> IVar {
        let v = IVar(self.next);
        self.next += 1;
        v
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FreshSym(pub u32);

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sym {
    Zero,
    Succ,
    Add,
    Mul,
    Max,
    Fresh(FreshSym),
}

impl Sym {
    pub fn arity(&self, sig: &Signature) -> usize {
        match self {
            Sym::Zero => 0,
            Sym::Succ => 1,
            Sym::Add | Sym::Mul | Sym::Max => 2,
            Sym::Fresh(s) => sig.arity(*s),
        }
    }
}

/// Origin of a fresh symbol, for reporting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymOrigin {
    /// Return-type annotation of the named program symbol.
    Annotation(String),
    /// Skolem function for a meta variable.
    Skolem(u32),
    /// Parsed from a constraint file.
    External(String),
}

#[derive(Clone, Debug, Default)]
pub struct Signature {
    names: Vec<String>,
    arities: Vec<usize>,
    origins: Vec<Option<SymOrigin>>,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    pub fn fresh(&mut self, arity: usize, origin: Option<SymOrigin>) -> FreshSym {
        let id = self.names.len() as u32;
        self.names.push(format!("f{}", id + 1));
        self.arities.push(arity);
        self.origins.push(origin);
        FreshSym(id)
    }

    pub fn fresh_named(&mut self, name: &str, arity: usize, origin: Option<SymOrigin>) -> FreshSym {
        let id = self.names.len() as u32;
        self.names.push(name.to_string());
        self.arities.push(arity);
        self.origins.push(origin);
        FreshSym(id)
    }

    pub fn arity(&self, s: FreshSym) -> usize {
        self.arities[s.0 as usize]
    }

    pub fn name(&self, s: FreshSym) -> &str {
        &self.names[s.0 as usize]
    }

    pub fn origin(&self, s: FreshSym) -> Option<&SymOrigin> {
        self.origins[s.0 as usize].as_ref()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn all(&self) -> impl Iterator<Item = FreshSym> + '_ {
        (0..self.names.len() as u32).map(FreshSym)
    }

    pub fn by_name(&self, name: &str) -> Option<FreshSym> {
        self.names.iter().position(|n| n == name).map(|i| FreshSym(i as u32))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Index {
    Var(IVar),
    App(Sym, Vec<Index>),
}

impl Index {
    pub fn zero() -> Index {
        Index::App(Sym::Zero, vec![])
    }

    pub fn succ(a: Index) -> Index {
        Index::App(Sym::Succ, vec![a])
    }

    pub fn nat(n: u64) -> Index {
        let mut t = Index::zero();
        for _ in 0..n {
            t = Index::succ(t);
        }
        t
    }

    pub fn add(a: Index, b: Index) -> Index {
        Index::App(Sym::Add, vec![a, b])
    }

    pub fn mul(a: Index, b: Index) -> Index {
        Index::App(Sym::Mul, vec![a, b])
    }

    pub fn max(a: Index, b: Index) -> Index {
        Index::App(Sym::Max, vec![a, b])
    }

    pub fn sum(terms: Vec<Index>) -> Index {
        let mut it = terms.into_iter();
        match it.next() {
            None => Index::zero(),
            Some(first) => it.fold(first, Index::add),
        }
    }

    pub fn app(s: FreshSym, args: Vec<Index>) -> Index {
        Index::App(Sym::Fresh(s), args)
    }

    pub fn vars(&self) -> Vec<IVar> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<IVar>) {
        match self {
            Index::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            Index::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn fresh_syms(&self) -> Vec<FreshSym> {
        let mut out = Vec::new();
        fn go(t: &Index, out: &mut Vec<FreshSym>) {
            if let Index::App(s, args) = t {
                if let Sym::Fresh(f) = s {
                    if !out.contains(f) {
                        out.push(*f);
                    }
                }
                args.iter().for_each(|a| go(a, out));
            }
        }
        go(self, &mut out);
        out
    }

    pub fn subst(&self, map: &BTreeMap<IVar, Index>) -> Index {
        match self {
            Index::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Index::App(s, args) => Index::App(*s, args.iter().map(|a| a.subst(map)).collect()),
        }
    }

    pub fn render(&self, sig: &Signature, var_name: &impl Fn(IVar) -> String) -> String {
        match self {
            Index::Var(v) => var_name(*v),
            Index::App(Sym::Zero, _) => "0".into(),
            Index::App(Sym::Succ, args) => {
                // render saturated successor chains as `a + n`
                let mut n = 1u64;
                let mut inner = &args[0];
                while let Index::App(Sym::Succ, next) = inner {
                    n += 1;
                    inner = &next[0];
                }
                if matches!(inner, Index::App(Sym::Zero, _)) {
                    format!("{n}")
                } else {
                    format!("{} + {n}", inner.render(sig, var_name))
                }
            }
            Index::App(Sym::Add, args) => format!(
                "{} + {}",
                args[0].render(sig, var_name),
                args[1].render(sig, var_name)
            ),
            Index::App(Sym::Mul, args) => format!(
                "{}*{}",
                atom(&args[0].render(sig, var_name)),
                atom(&args[1].render(sig, var_name))
            ),
            Index::App(Sym::Max, args) => format!(
                "max({}, {})",
                args[0].render(sig, var_name),
                args[1].render(sig, var_name)
            ),
            Index::App(Sym::Fresh(f), args) => {
                if args.is_empty() {
                    format!("{}()", sig.name(*f))
                } else {
                    let parts: Vec<String> =
                        args.iter().map(|a| a.render(sig, var_name)).collect();
                    format!("{}({})", sig.name(*f), parts.join(", "))
                }
            }
        }
    }
}

fn atom(s: &str) -> String {
    if s.contains('+') || s.contains(' ') {
        format!("({s})")
    } else {
        s.to_string()
    }
}

/// A weakly monotone interpretation of the fresh symbols. The fixed symbols
/// `0`, `s`, `+`, `*`, `max` always mean zero, successor, addition,
/// multiplication and maximum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Interp {
    pub map: BTreeMap<FreshSym, MaxPoly<u64>>,
}

#[derive(Debug, Clone)]
pub struct UninterpretedSymbol(pub String);

impl fmt::Display for UninterpretedSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uninterpreted index symbol `{}`", self.0)
    }
}

impl Interp {
    pub fn new() -> Interp {
        Interp::default()
    }

    pub fn get(&self, s: FreshSym) -> Option<&MaxPoly<u64>> {
        self.map.get(&s)
    }

    pub fn insert(&mut self, s: FreshSym, p: MaxPoly<u64>) {
        self.map.insert(s, p);
    }

    /// Unfolds an index term into a max-polynomial over its variables.
    pub fn unfold(&self, t: &Index, sig: &Signature) -> Result<MaxPoly<u64>, UninterpretedSymbol> {
        match t {
            Index::Var(v) => Ok(MaxPoly::var(v.0)),
            Index::App(s, args) => {
                let args: Vec<MaxPoly<u64>> = args
                    .iter()
                    .map(|a| self.unfold(a, sig))
                    .collect::<Result<_, _>>()?;
                Ok(match s {
                    Sym::Zero => MaxPoly::zero(),
                    Sym::Succ => args[0].add(&MaxPoly::constant(1)),
                    Sym::Add => args[0].add(&args[1]),
                    Sym::Mul => args[0].mul(&args[1]),
                    Sym::Max => args[0].clone().max(args[1].clone()),
                    Sym::Fresh(f) => {
                        let body = self
                            .map
                            .get(f)
                            .ok_or_else(|| UninterpretedSymbol(sig.name(*f).to_string()))?;
                        // Interpretation arguments are numbered 0..arity.
                        body.subst(&|i| {
                            args.get(i as usize).cloned().unwrap_or_else(MaxPoly::zero)
                        })
                    }
                })
            }
        }
    }

    pub fn eval(
        &self,
        t: &Index,
        sig: &Signature,
        assign: &BTreeMap<IVar, u64>,
    ) -> Result<u64, UninterpretedSymbol> {
        let p = self.unfold(t, sig)?;
        Ok(p.eval(&|v| assign.get(&IVar(v)).copied().unwrap_or(0)))
    }

    pub fn render(&self, sig: &Signature) -> String {
        let mut s = String::new();
        for (f, p) in &self.map {
            let args: Vec<String> = (0..sig.arity(*f)).map(arg_name).collect();
            s.push_str(&format!(
                "{}({}) = {}\n",
                sig.name(*f),
                args.join(","),
                p.render(&|v| arg_name(v as usize))
            ));
        }
        s
    }
}

pub fn arg_name(i: usize) -> String {
    const POOL: [&str; 6] = ["i", "j", "k", "l", "m", "n"];
    if i < POOL.len() {
        POOL[i].to_string()
    } else {
        format!("x{i}")
    }
}

/// Certificate produced by the semantic comparison of two index terms.
#[derive(Clone, Debug, PartialEq)]
pub enum LeqResult {
    /// Certified by absolute positiveness of the unfolded difference.
    Certified,
    /// Not certified; a grid witness of falsity when one was found.
    NotCertified(Option<BTreeMap<IVar, u64>>),
}

impl LeqResult {
    pub fn holds(&self) -> bool {
        matches!(self, LeqResult::Certified)
    }
}

/// Sound approximation of `a <= b` for all assignments: monomial-wise
/// comparison of the unfolded polynomials (each branch of the left `max`
/// must be dominated by some branch of the right). Falsity is probed on a
/// small grid to report a witness.
pub fn leq_semantic(
    a: &Index,
    b: &Index,
    interp: &Interp,
    sig: &Signature,
) -> Result<LeqResult, UninterpretedSymbol> {
    let pa = interp.unfold(a, sig)?;
    let pb = interp.unfold(b, sig)?;
    Ok(leq_maxpoly(&pa, &pb))
}

pub fn leq_maxpoly(pa: &MaxPoly<u64>, pb: &MaxPoly<u64>) -> LeqResult {
    let certified = pa.branches.iter().all(|la| {
        pb.branches.iter().any(|lb| {
            la.monos.iter().all(|m| lb.coeff_of(&m.pows) >= m.coeff)
        })
    });
    if certified {
        return LeqResult::Certified;
    }
    // grid check for a witness
    let mut vars: Vec<u32> = pa.vars();
    for v in pb.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    vars.sort();
    let mut assign: Vec<u64> = vec![0; vars.len()];
    loop {
        let lookup = |v: u32| {
            vars.iter().position(|&u| u == v).map(|i| assign[i]).unwrap_or(0)
        };
        if pa.eval(&lookup) > pb.eval(&lookup) {
            let witness = vars
                .iter()
                .enumerate()
                .map(|(i, &v)| (IVar(v), assign[i]))
                .collect();
            return LeqResult::NotCertified(Some(witness));
        }
        // advance over {0..6}^n
        let mut i = 0;
        loop {
            if i == assign.len() {
                return LeqResult::NotCertified(None);
            }
            assign[i] += 1;
            if assign[i] <= 6 {
                break;
            }
            assign[i] = 0;
            i += 1;
        }
        if assign.iter().all(|&x| x == 0) {
            return LeqResult::NotCertified(None);
        }
    }
}

/// Extends a mono-valued polynomial to an `Index` term (used when turning
/// solved interpretations back into printable index expressions).
pub fn maxpoly_to_index(p: &MaxPoly<u64>, var: &impl Fn(u32) -> Index) -> Index {
    let branch_to_index = |b: &Poly<u64>| -> Index {
        if b.monos.is_empty() {
            return Index::zero();
        }
        let mut monos = b.monos.clone();
        monos.sort_by_key(|m: &Mono<u64>| (m.degree(), m.pows.clone()));
        let terms: Vec<Index> = monos
            .iter()
            .map(|m| {
                let mut factors: Vec<Index> = Vec::new();
                for &(v, e) in &m.pows {
                    for _ in 0..e {
                        factors.push(var(v));
                    }
                }
                if factors.is_empty() {
                    Index::nat(m.coeff)
                } else {
                    let prod = factors.into_iter().reduce(Index::mul).unwrap();
                    if m.coeff == 1 {
                        prod
                    } else {
                        Index::mul(Index::nat(m.coeff), prod)
                    }
                }
            })
            .collect();
        Index::sum(terms)
    };
    p.branches
        .iter()
        .map(branch_to_index)
        .reduce(Index::max)
        .unwrap_or_else(Index::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(n: u32) -> Index {
        Index::Var(IVar(n))
    }

    #[test]
    fn fixed_symbols_evaluate() {
        let interp = Interp::new();
        let sig = Signature::new();
        let one = Index::succ(Index::zero());
        assert_eq!(interp.eval(&one, &sig, &BTreeMap::new()).unwrap(), 1);
        let sum = Index::add(iv(0), iv(1));
        let assign: BTreeMap<IVar, u64> = [(IVar(0), 2), (IVar(1), 3)].into_iter().collect();
        assert_eq!(interp.eval(&sum, &sig, &assign).unwrap(), 5);
    }

    #[test]
    fn fresh_symbol_needs_interpretation() {
        let mut sig = Signature::new();
        let f = sig.fresh(2, None);
        let t = Index::app(f, vec![iv(0), iv(1)]);
        let interp = Interp::new();
        assert!(interp.eval(&t, &sig, &BTreeMap::new()).is_err());

        let mut interp = Interp::new();
        // f(i, j) = i + j
        interp.insert(f, MaxPoly::var(0).add(&MaxPoly::var(1)));
        let assign: BTreeMap<IVar, u64> = [(IVar(0), 2), (IVar(1), 3)].into_iter().collect();
        assert_eq!(interp.eval(&t, &sig, &assign).unwrap(), 5);
    }

    #[test]
    fn leq_examples() {
        let interp = Interp::new();
        let sig = Signature::new();
        // i <= i + 1
        let r = leq_semantic(&iv(0), &Index::succ(iv(0)), &interp, &sig).unwrap();
        assert!(r.holds());
        // i + j <= i fails with a witness
        let r = leq_semantic(&Index::add(iv(0), iv(1)), &iv(0), &interp, &sig).unwrap();
        match r {
            LeqResult::NotCertified(Some(w)) => {
                assert!(w.values().any(|&v| v > 0));
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn leq_with_max() {
        let interp = Interp::new();
        let sig = Signature::new();
        // max(i, j) <= i + j
        let r = leq_semantic(
            &Index::max(iv(0), iv(1)),
            &Index::add(iv(0), iv(1)),
            &interp,
            &sig,
        )
        .unwrap();
        assert!(r.holds());
        // i + j <= max(2i, 2j) holds semantically but is not certified
        let two_i = Index::add(iv(0), iv(0));
        let two_j = Index::add(iv(1), iv(1));
        let r = leq_semantic(
            &Index::add(iv(0), iv(1)),
            &Index::max(two_i, two_j),
            &interp,
            &sig,
        )
        .unwrap();
        assert_eq!(r, LeqResult::NotCertified(None));
    }
}
