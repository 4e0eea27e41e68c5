//! Template interpretations, max elimination and the absolute positiveness
//! check, reducing constraints over templates to diophantine constraints on
//! the unknown coefficients.

use crate::index::{FreshSym, Index, Sym};
use crate::maxpoly::{MaxPoly, Mono, Poly};
use std::collections::BTreeMap;

/// Polynomials over unknown coefficient variables.
pub type UPoly = Poly<u64>;
/// Index polynomials whose coefficients are `UPoly`s.
pub type CPoly = Poly<UPoly>;
pub type CMaxPoly = MaxPoly<UPoly>;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Shape {
    /// Coefficients in {0, 1}.
    StronglyLinear,
    Linear,
    MaxTwoLinear,
    /// Single branch with all monomials up to the given total degree.
    Degree(u32),
}

impl Shape {
    pub fn ladder(degree_max: u32) -> Vec<Shape> {
        let mut l = vec![Shape::StronglyLinear, Shape::Linear, Shape::MaxTwoLinear];
        for d in 2..=degree_max {
            l.push(Shape::Degree(d));
        }
        l
    }
}

/// Bookkeeping for one unknown coefficient.
#[derive(Clone, Debug)]
pub struct CoeffVar {
    pub sym: FreshSym,
    pub branch: usize,
    /// Power vector of the monomial this coefficient scales.
    pub pows: Vec<(u32, u32)>,
    pub degree: u32,
    pub max: u64,
}

#[derive(Clone, Debug, Default)]
pub struct TemplateSet {
    /// Template per symbol, over argument positions `0..arity`.
    pub templates: BTreeMap<FreshSym, CMaxPoly>,
    pub coeffs: Vec<CoeffVar>,
}

impl TemplateSet {
    pub fn add_symbol(&mut self, sym: FreshSym, arity: usize, shape: Shape, coeff_bound: u64) {
        let branches = match shape {
            Shape::MaxTwoLinear => 2,
            _ => 1,
        };
        let monos: Vec<Vec<(u32, u32)>> = match shape {
            Shape::StronglyLinear | Shape::Linear | Shape::MaxTwoLinear => {
                let mut m: Vec<Vec<(u32, u32)>> = vec![vec![]];
                m.extend((0..arity as u32).map(|v| vec![(v, 1)]));
                m
            }
            Shape::Degree(d) => monomials_up_to(arity as u32, d),
        };
        let max = match shape {
            Shape::StronglyLinear => 1,
            _ => coeff_bound,
        };
        let mut bs = Vec::new();
        for branch in 0..branches {
            let mut poly_monos = Vec::new();
            for pows in &monos {
                let id = self.coeffs.len() as u32;
                let degree: u32 = pows.iter().map(|&(_, e)| e).sum();
                self.coeffs.push(CoeffVar {
                    sym,
                    branch,
                    pows: pows.clone(),
                    degree,
                    max,
                });
                poly_monos.push(Mono { pows: pows.clone(), coeff: UPoly::var(id) });
            }
            bs.push(Poly::from_monos(poly_monos));
        }
        self.templates.insert(sym, MaxPoly { branches: bs });
    }
}

/// All power vectors over `n` variables with total degree in `1..=d`,
/// plus the constant, restricted to at most two distinct variables per
/// monomial to keep the search tractable.
pub fn monomials_up_to(n: u32, d: u32) -> Vec<Vec<(u32, u32)>> {
    let mut out: Vec<Vec<(u32, u32)>> = vec![vec![]];
    for v in 0..n {
        for e in 1..=d {
            out.push(vec![(v, e)]);
        }
    }
    for v in 0..n {
        for w in v + 1..n {
            for ev in 1..d {
                for ew in 1..=(d - ev) {
                    out.push(vec![(v, ev), (w, ew)]);
                }
            }
        }
    }
    out
}

/// Lifts a concrete max-polynomial into template space.
pub fn lift_concrete(p: &MaxPoly<u64>) -> CMaxPoly {
    MaxPoly {
        branches: p
            .branches
            .iter()
            .map(|b| Poly {
                monos: b
                    .monos
                    .iter()
                    .map(|m| Mono { pows: m.pows.clone(), coeff: UPoly::constant(m.coeff) })
                    .collect(),
            })
            .collect(),
    }
}

/// Unfolds an index term into template space. Index variables map to
/// polynomial variables by their number; symbols are looked up first in the
/// concrete model, then among the templates.
pub fn unfold_template(
    ix: &Index,
    concrete: &impl Fn(FreshSym) -> Option<MaxPoly<u64>>,
    templates: &BTreeMap<FreshSym, CMaxPoly>,
) -> Result<CMaxPoly, FreshSym> {
    match ix {
        Index::Var(v) => Ok(MaxPoly::var(v.0)),
        Index::App(s, args) => {
            let args: Vec<CMaxPoly> = args
                .iter()
                .map(|a| unfold_template(a, concrete, templates))
                .collect::<Result<_, _>>()?;
            match s {
                Sym::Zero => Ok(MaxPoly::zero()),
                Sym::Succ => Ok(args[0].add(&MaxPoly::constant(UPoly::constant(1)))),
                Sym::Add => Ok(args[0].add(&args[1])),
                Sym::Mul => Ok(args[0].mul(&args[1])),
                Sym::Max => Ok(args[0].clone().max(args[1].clone())),
                Sym::Fresh(f) => {
                    let body = match concrete(*f) {
                        Some(p) => lift_concrete(&p),
                        None => templates.get(f).ok_or(*f)?.clone(),
                    };
                    Ok(body.subst(&|i| {
                        args.get(i as usize).cloned().unwrap_or_else(MaxPoly::zero)
                    }))
                }
            }
        }
    }
}

/// One diophantine constraint `lhs <= rhs` over the coefficient variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DioCon {
    pub lhs: UPoly,
    pub rhs: UPoly,
}

impl DioCon {
    /// Cancels identical monomials on both sides (`a + t <= b + t` iff
    /// `a <= b` over the naturals) and drops trivial constraints.
    pub fn normalize(lhs: &UPoly, rhs: &UPoly) -> Option<DioCon> {
        let mut l: Vec<Mono<u64>> = Vec::new();
        let mut r: Vec<Mono<u64>> = Vec::new();
        let mut li = lhs.monos.iter().peekable();
        let mut ri = rhs.monos.iter().peekable();
        loop {
            match (li.peek(), ri.peek()) {
                (None, None) => break,
                (Some(m), None) => {
                    l.push((*m).clone());
                    li.next();
                }
                (None, Some(m)) => {
                    r.push((*m).clone());
                    ri.next();
                }
                (Some(a), Some(b)) => match a.pows.cmp(&b.pows) {
                    std::cmp::Ordering::Less => {
                        l.push((*a).clone());
                        li.next();
                    }
                    std::cmp::Ordering::Greater => {
                        r.push((*b).clone());
                        ri.next();
                    }
                    std::cmp::Ordering::Equal => {
                        let common = a.coeff.min(b.coeff);
                        if a.coeff > common {
                            l.push(Mono { pows: a.pows.clone(), coeff: a.coeff - common });
                        }
                        if b.coeff > common {
                            r.push(Mono { pows: b.pows.clone(), coeff: b.coeff - common });
                        }
                        li.next();
                        ri.next();
                    }
                },
            }
        }
        if l.is_empty() {
            return None; // trivially satisfied
        }
        Some(DioCon { lhs: Poly { monos: l }, rhs: Poly { monos: r } })
    }
}

/// The absolute positiveness reduction: `lhs <= rhs` for all naturals is
/// certified when every monomial's coefficient on the left is dominated on
/// the right. Sound but incomplete.
pub fn absolute_positiveness(lhs: &CPoly, rhs: &CPoly) -> Vec<DioCon> {
    let mut keys: Vec<Vec<(u32, u32)>> = lhs
        .monos
        .iter()
        .chain(rhs.monos.iter())
        .map(|m| m.pows.clone())
        .collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|k| DioCon::normalize(&lhs.coeff_of(&k), &rhs.coeff_of(&k)))
        .collect()
}

/// Max elimination: `max(l1, .., lm) <= max(r1, .., rn)` becomes, for each
/// choice function picking one right branch per left branch, the
/// conjunction of the pairwise inequalities. The result is a disjunction
/// (over choice functions) of conjunctions of max-free inequalities.
pub fn eliminate_max(lhs: &CMaxPoly, rhs: &CMaxPoly) -> Vec<Vec<(CPoly, CPoly)>> {
    let m = lhs.branches.len();
    let n = rhs.branches.len();
    let mut disjuncts = Vec::new();
    let mut choice = vec![0usize; m];
    loop {
        let conj: Vec<(CPoly, CPoly)> = (0..m)
            .map(|i| (lhs.branches[i].clone(), rhs.branches[choice[i]].clone()))
            .collect();
        disjuncts.push(conj);
        // next choice function
        let mut i = 0;
        loop {
            if i == m {
                return disjuncts;
            }
            choice[i] += 1;
            if choice[i] < n {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cvar(v: u32) -> CPoly {
        Poly { monos: vec![Mono { pows: vec![(v, 1)], coeff: UPoly::constant(1) }] }
    }

    #[test]
    fn max_on_left_is_conjunctive() {
        // max(i, j) <= k
        let lhs = MaxPoly { branches: vec![cvar(0), cvar(1)] };
        let rhs = MaxPoly { branches: vec![cvar(2)] };
        let d = eliminate_max(&lhs, &rhs);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].len(), 2);
    }

    #[test]
    fn max_on_right_is_disjunctive() {
        // i <= max(2i, 2j)
        let two = |v| cvar(v).mul(&Poly::constant(UPoly::constant(2)));
        let lhs = MaxPoly { branches: vec![cvar(0)] };
        let rhs = MaxPoly { branches: vec![two(0), two(1)] };
        let d = eliminate_max(&lhs, &rhs);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn incomplete_on_sum_below_max() {
        // i + j <= max(2i, 2j): neither branch is absolutely positive
        let two = |v: u32| cvar(v).mul(&Poly::constant(UPoly::constant(2)));
        let lhs = cvar(0).add(&cvar(1));
        for rhs in [two(0), two(1)] {
            let dios = absolute_positiveness(&lhs, &rhs);
            // one side lacks a monomial entirely: 1 <= 0 appears
            assert!(
                dios.iter().any(|d| d.rhs.is_zero() && !d.lhs.is_zero()),
                "{dios:?}"
            );
        }
    }

    #[test]
    fn abspos_examples() {
        // i + 1 <= c1*i + c2  =>  {1 <= c1, 1 <= c2}
        let lhs = cvar(0).add(&Poly::constant(UPoly::constant(1)));
        let rhs = Poly::from_monos(vec![
            Mono { pows: vec![(0, 1)], coeff: UPoly::var(0) },
            Mono { pows: vec![], coeff: UPoly::var(1) },
        ]);
        let dios = absolute_positiveness(&lhs, &rhs);
        assert_eq!(dios.len(), 2);
        for d in &dios {
            assert_eq!(d.lhs, UPoly::constant(1));
        }

        // 0 <= anything is trivially satisfied
        let dios = absolute_positiveness(&CPoly::zero(), &rhs);
        assert!(dios.is_empty());

        // i*j <= c*i*j + d*i  =>  {1 <= c} only
        let ij = CPoly::from_monos(vec![Mono { pows: vec![(0, 1), (1, 1)], coeff: UPoly::constant(1) }]);
        let rhs = CPoly::from_monos(vec![
            Mono { pows: vec![(0, 1), (1, 1)], coeff: UPoly::var(2) },
            Mono { pows: vec![(0, 1)], coeff: UPoly::var(3) },
        ]);
        let dios = absolute_positiveness(&ij, &rhs);
        assert_eq!(dios.len(), 1);
        assert_eq!(dios[0].rhs, UPoly::var(2));
    }

    #[test]
    fn cancellation_detects_contradiction() {
        // c + 1 <= c  =>  1 <= 0
        let c = UPoly::var(0);
        let d = DioCon::normalize(&c.add(&UPoly::constant(1)), &c).unwrap();
        assert_eq!(d.lhs, UPoly::constant(1));
        assert!(d.rhs.is_zero());
    }
}
