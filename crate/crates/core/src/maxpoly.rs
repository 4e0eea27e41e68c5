//! Max-polynomials over the naturals: an outer `max` of polynomials whose
//! monomials carry nonnegative coefficients. Nonnegativity makes every
//! represented function weakly monotone, which the solver relies on.
//!
//! The coefficient ring is generic so the same arithmetic serves both
//! concrete models (`u64` coefficients) and solver templates (coefficients
//! that are themselves polynomials over unknown coefficient variables).

use std::fmt;

pub trait Coeff: Clone + Ord + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(n: u64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
    /// Conservative pointwise comparison: `true` only if `self >= other`
    /// for every valuation of any embedded unknowns.
    fn ge(&self, other: &Self) -> bool;
}

impl Coeff for u64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn from_u64(n: u64) -> Self {
        n
    }
    fn add(&self, other: &Self) -> Self {
        self.checked_add(*other).expect("coefficient overflow")
    }
    fn mul(&self, other: &Self) -> Self {
        self.checked_mul(*other).expect("coefficient overflow")
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn ge(&self, other: &Self) -> bool {
        self >= other
    }
}

/// A monomial `coeff * prod(var^exp)`. Powers are sorted by variable and
/// exponents are nonzero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Mono<C> {
    pub pows: Vec<(u32, u32)>,
    pub coeff: C,
}

impl<C: Coeff> Mono<C> {
    pub fn constant(c: C) -> Self {
        Mono { pows: vec![], coeff: c }
    }

    pub fn var(v: u32) -> Self {
        Mono { pows: vec![(v, 1)], coeff: C::one() }
    }

    pub fn degree(&self) -> u32 {
        self.pows.iter().map(|&(_, e)| e).sum()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut pows = self.pows.clone();
        for &(v, e) in &other.pows {
            match pows.binary_search_by_key(&v, |&(v, _)| v) {
                Ok(i) => pows[i].1 += e,
                Err(i) => pows.insert(i, (v, e)),
            }
        }
        Mono { pows, coeff: self.coeff.mul(&other.coeff) }
    }
}

/// A polynomial in normal form: monomials sorted by their power vectors,
/// no zero coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Poly<C> {
    pub monos: Vec<Mono<C>>,
}

impl<C: Coeff> Poly<C> {
    pub fn zero() -> Self {
        Poly { monos: vec![] }
    }

    pub fn constant(c: C) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { monos: vec![Mono::constant(c)] }
        }
    }

    pub fn var(v: u32) -> Self {
        Poly { monos: vec![Mono::var(v)] }
    }

    pub fn from_monos(mut monos: Vec<Mono<C>>) -> Self {
        monos.sort_by(|a, b| a.pows.cmp(&b.pows));
        let mut out: Vec<Mono<C>> = Vec::with_capacity(monos.len());
        for m in monos {
            if let Some(last) = out.last_mut() {
                if last.pows == m.pows {
                    last.coeff = last.coeff.add(&m.coeff);
                    continue;
                }
            }
            out.push(m);
        }
        out.retain(|m| !m.coeff.is_zero());
        Poly { monos: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut monos = self.monos.clone();
        monos.extend(other.monos.iter().cloned());
        Poly::from_monos(monos)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut monos = Vec::with_capacity(self.monos.len() * other.monos.len());
        for a in &self.monos {
            for b in &other.monos {
                monos.push(a.mul(b));
            }
        }
        Poly::from_monos(monos)
    }

    pub fn is_zero(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.monos.iter().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn coeff_of(&self, pows: &[(u32, u32)]) -> C {
        self.monos
            .iter()
            .find(|m| m.pows == pows)
            .map(|m| m.coeff.clone())
            .unwrap_or_else(C::zero)
    }

    /// Substitutes polynomials for variables.
    pub fn subst(&self, map: &impl Fn(u32) -> Poly<C>) -> Poly<C> {
        let mut acc = Poly::zero();
        for m in &self.monos {
            let mut term = Poly::constant(m.coeff.clone());
            for &(v, e) in &m.pows {
                let p = map(v);
                for _ in 0..e {
                    term = term.mul(&p);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn vars(&self) -> Vec<u32> {
        let mut vs: Vec<u32> = self.monos.iter().flat_map(|m| m.pows.iter().map(|&(v, _)| v)).collect();
        vs.sort();
        vs.dedup();
        vs
    }
}

impl Poly<u64> {
    pub fn eval(&self, assign: &impl Fn(u32) -> u64) -> u64 {
        self.monos
            .iter()
            .map(|m| {
                m.pows.iter().fold(m.coeff, |acc, &(v, e)| {
                    acc * assign(v).pow(e)
                })
            })
            .sum()
    }

    pub fn render(&self, name: &impl Fn(u32) -> String) -> String {
        if self.monos.is_empty() {
            return "0".to_string();
        }
        // constant first, then by increasing degree, then lexicographic
        let mut monos = self.monos.clone();
        monos.sort_by_key(|m| (m.degree(), m.pows.clone()));
        let parts: Vec<String> = monos
            .iter()
            .map(|m| {
                let vars: Vec<String> = m
                    .pows
                    .iter()
                    .flat_map(|&(v, e)| std::iter::repeat(name(v)).take(e as usize))
                    .collect();
                if vars.is_empty() {
                    format!("{}", m.coeff)
                } else if m.coeff == 1 {
                    vars.join("*")
                } else {
                    format!("{}*{}", m.coeff, vars.join("*"))
                }
            })
            .collect();
        parts.join(" + ")
    }
}

/// Polynomials over unknown coefficient variables are themselves a
/// coefficient ring (used while solving).
impl Coeff for Poly<u64> {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::constant(1)
    }
    fn from_u64(n: u64) -> Self {
        Poly::constant(n)
    }
    fn add(&self, other: &Self) -> Self {
        Poly::add(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        Poly::mul(self, other)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn ge(&self, other: &Self) -> bool {
        // Monomial-wise comparison over the unknowns; coefficients are
        // nonnegative so this is sound for every valuation.
        other.monos.iter().all(|m| self.coeff_of(&m.pows) >= m.coeff)
    }
}

/// `max` of one or more polynomials, in normal form: branches sorted and
/// deduplicated, syntactically dominated branches removed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct MaxPoly<C> {
    pub branches: Vec<Poly<C>>,
}

impl<C: Coeff> MaxPoly<C> {
    pub fn poly(p: Poly<C>) -> Self {
        MaxPoly { branches: vec![p] }
    }

    pub fn zero() -> Self {
        MaxPoly::poly(Poly::zero())
    }

    pub fn constant(c: C) -> Self {
        MaxPoly::poly(Poly::constant(c))
    }

    pub fn var(v: u32) -> Self {
        MaxPoly::poly(Poly::var(v))
    }

    pub fn normalize(mut self) -> Self {
        self.branches.sort();
        self.branches.dedup();
        // Drop branches dominated monomial-wise by another branch.
        let bs = self.branches.clone();
        self.branches.retain(|b| {
            !bs.iter().any(|other| other != b && dominates(other, b))
        });
        if self.branches.is_empty() {
            self.branches.push(Poly::zero());
        }
        self
    }

    pub fn max(mut self, other: MaxPoly<C>) -> Self {
        self.branches.extend(other.branches);
        self.normalize()
    }

    pub fn add(&self, other: &MaxPoly<C>) -> Self {
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                branches.push(a.add(b));
            }
        }
        MaxPoly { branches }.normalize()
    }

    pub fn mul(&self, other: &MaxPoly<C>) -> Self {
        let mut branches = Vec::with_capacity(self.branches.len() * other.branches.len());
        for a in &self.branches {
            for b in &other.branches {
                branches.push(a.mul(b));
            }
        }
        MaxPoly { branches }.normalize()
    }

    /// Substitutes max-polynomials for variables; exact for weakly monotone
    /// functions since `max` distributes through them.
    pub fn subst(&self, map: &impl Fn(u32) -> MaxPoly<C>) -> MaxPoly<C> {
        let mut out: Vec<Poly<C>> = Vec::new();
        for branch in &self.branches {
            // Each variable choice of a max-branch yields one combination.
            let mut combos: Vec<(Vec<(u32, Poly<C>)>, ())> = vec![(vec![], ())];
            let vars = branch.vars();
            for v in &vars {
                let mp = map(*v);
                let mut next = Vec::with_capacity(combos.len() * mp.branches.len());
                for (combo, ()) in &combos {
                    for b in &mp.branches {
                        let mut c = combo.clone();
                        c.push((*v, b.clone()));
                        next.push((c, ()));
                    }
                }
                combos = next;
            }
            for (combo, ()) in combos {
                let lookup = |v: u32| -> Poly<C> {
                    combo
                        .iter()
                        .find(|(u, _)| *u == v)
                        .map(|(_, p)| p.clone())
                        .unwrap_or_else(Poly::zero)
                };
                out.push(branch.subst(&lookup));
            }
        }
        MaxPoly { branches: out }.normalize()
    }

    pub fn is_single(&self) -> Option<&Poly<C>> {
        if self.branches.len() == 1 {
            Some(&self.branches[0])
        } else {
            None
        }
    }

    pub fn degree(&self) -> u32 {
        self.branches.iter().map(|b| b.degree()).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<u32> {
        let mut vs: Vec<u32> = self.branches.iter().flat_map(|b| b.vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }
}

/// Monomial-wise domination: every coefficient of `b` is covered by `a`.
fn dominates<C: Coeff>(a: &Poly<C>, b: &Poly<C>) -> bool {
    b.monos.iter().all(|m| Coeff::ge(&a.coeff_of(&m.pows), &m.coeff))
}

impl MaxPoly<u64> {
    pub fn eval(&self, assign: &impl Fn(u32) -> u64) -> u64 {
        self.branches.iter().map(|b| b.eval(assign)).max().unwrap_or(0)
    }

    pub fn render(&self, name: &impl Fn(u32) -> String) -> String {
        if self.branches.len() == 1 {
            self.branches[0].render(name)
        } else {
            let parts: Vec<String> = self.branches.iter().map(|b| b.render(name)).collect();
            format!("max({})", parts.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> MaxPoly<u64> {
        MaxPoly::var(0)
    }
    fn y() -> MaxPoly<u64> {
        MaxPoly::var(1)
    }

    #[test]
    fn arithmetic_normal_forms() {
        let p = x().add(&y()).add(&MaxPoly::constant(1));
        assert_eq!(p.branches.len(), 1);
        assert_eq!(p.eval(&|v| [2, 3][v as usize]), 6);

        let q = p.mul(&p);
        assert_eq!(q.eval(&|v| [2, 3][v as usize]), 36);
        assert_eq!(q.degree(), 2);
    }

    #[test]
    fn max_dedups_and_drops_dominated() {
        let m = x().max(x()).max(MaxPoly::zero());
        assert_eq!(m.branches.len(), 1);
        let m2 = x().add(&y()).max(x());
        // x is dominated by x + y
        assert_eq!(m2.branches.len(), 1);
        let m3 = x().max(y());
        assert_eq!(m3.branches.len(), 2);
        assert_eq!(m3.eval(&|v| [2, 5][v as usize]), 5);
    }

    #[test]
    fn subst_distributes_max() {
        // f(v) = v + 1, substitute v := max(x, y)
        let f = MaxPoly::poly(Poly::from_monos(vec![Mono::var(9), Mono::constant(1)]));
        let s = f.subst(&|v| if v == 9 { x().max(y()) } else { MaxPoly::var(v) });
        assert_eq!(s.branches.len(), 2);
        for (xv, yv) in [(0u64, 5u64), (7, 2), (3, 3)] {
            let direct = xv.max(yv) + 1;
            assert_eq!(s.eval(&|v| [xv, yv][v as usize]), direct);
        }
    }

    #[test]
    fn render_constant_first_then_degree() {
        let p = MaxPoly::poly(Poly::from_monos(vec![
            Mono { pows: vec![(0, 1), (1, 1)], coeff: 1 },
            Mono { pows: vec![(1, 1)], coeff: 2 },
            Mono::constant(2),
        ]));
        let names = |v: u32| ["i", "k"][v as usize].to_string();
        assert_eq!(p.render(&names), "2 + 2*k + i*k");
    }
}
