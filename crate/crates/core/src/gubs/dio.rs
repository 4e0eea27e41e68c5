//! Bounded search for nonnegative integer solutions of nonlinear
//! diophantine inequality systems, via interval propagation and
//! depth-first search in variable order with ascending values. The first
//! solution found is the lexicographic minimum compatible with pruning.

use super::template::DioCon;
use crate::maxpoly::Poly;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct Domains {
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

impl Domains {
    pub fn new(bounds: &[u64]) -> Domains {
        Domains { lo: vec![0; bounds.len()], hi: bounds.to_vec() }
    }

    fn assigned(&self, v: usize) -> bool {
        self.lo[v] == self.hi[v]
    }
}

fn eval_min(p: &Poly<u64>, d: &Domains) -> u64 {
    p.eval(&|v| d.lo[v as usize])
}

fn eval_max(p: &Poly<u64>, d: &Domains) -> u64 {
    p.eval(&|v| d.hi[v as usize])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DioOutcome {
    Sat,
    Unsat,
    Timeout,
}

/// Propagates bounds to a fixpoint. Returns false on contradiction.
fn propagate(cons: &[DioCon], d: &mut Domains) -> bool {
    loop {
        let mut changed = false;
        for c in cons {
            let lmin = eval_min(&c.lhs, d);
            let rmax = eval_max(&c.rhs, d);
            if lmin > rmax {
                return false;
            }
            // Single unassigned variable on the right with a fully
            // assigned left side: raise its lower bound.
            let rvars: Vec<u32> = c.rhs.vars();
            let unassigned: Vec<u32> =
                rvars.iter().copied().filter(|&v| !d.assigned(v as usize)).collect();
            let lhs_assigned = c.lhs.vars().iter().all(|&v| d.assigned(v as usize));
            if lhs_assigned && unassigned.len() == 1 {
                let v = unassigned[0] as usize;
                let lmin = eval_min(&c.lhs, d);
                while d.lo[v] <= d.hi[v] {
                    let at = |u: u32| if u as usize == v { d.lo[v] } else { d.hi[u as usize] };
                    if c.rhs.eval(&at) >= lmin {
                        break;
                    }
                    d.lo[v] += 1;
                    changed = true;
                }
                if d.lo[v] > d.hi[v] {
                    return false;
                }
            }
            // Single unassigned variable on the left with a fully assigned
            // right side: lower its upper bound.
            let lvars: Vec<u32> = c.lhs.vars();
            let unassigned_l: Vec<u32> =
                lvars.iter().copied().filter(|&v| !d.assigned(v as usize)).collect();
            let rhs_assigned = rvars.iter().all(|&v| d.assigned(v as usize));
            if rhs_assigned && unassigned_l.len() == 1 {
                let v = unassigned_l[0] as usize;
                let rmax = eval_max(&c.rhs, d);
                while d.lo[v] <= d.hi[v] {
                    let at = |u: u32| if u as usize == v { d.hi[v] } else { d.lo[u as usize] };
                    if c.lhs.eval(&at) <= rmax {
                        break;
                    }
                    if d.hi[v] == 0 {
                        return false;
                    }
                    d.hi[v] -= 1;
                    changed = true;
                }
                if d.lo[v] > d.hi[v] {
                    return false;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

/// Searches for an assignment within the per-variable bounds.
pub fn search(
    cons: &[DioCon],
    bounds: &[u64],
    deadline: Instant,
) -> (DioOutcome, Option<Vec<u64>>) {
    let mut d = Domains::new(bounds);
    if !propagate(cons, &mut d) {
        return (DioOutcome::Unsat, None);
    }
    match dfs(cons, &mut d, deadline) {
        DioOutcome::Sat => {
            let sol = d.lo.clone();
            (DioOutcome::Sat, Some(sol))
        }
        other => (other, None),
    }
}

fn dfs(cons: &[DioCon], d: &mut Domains, deadline: Instant) -> DioOutcome {
    if Instant::now() > deadline {
        return DioOutcome::Timeout;
    }
    let var = (0..d.lo.len()).find(|&v| !d.assigned(v));
    let v = match var {
        None => {
            // fully assigned: final check
            let ok = cons
                .iter()
                .all(|c| c.lhs.eval(&|u| d.lo[u as usize]) <= c.rhs.eval(&|u| d.lo[u as usize]));
            return if ok { DioOutcome::Sat } else { DioOutcome::Unsat };
        }
        Some(v) => v,
    };
    let (lo, hi) = (d.lo[v], d.hi[v]);
    for val in lo..=hi {
        let mut child = d.clone();
        child.lo[v] = val;
        child.hi[v] = val;
        if !propagate(cons, &mut child) {
            continue;
        }
        match dfs(cons, &mut child, deadline) {
            DioOutcome::Sat => {
                *d = child;
                return DioOutcome::Sat;
            }
            DioOutcome::Timeout => return DioOutcome::Timeout,
            DioOutcome::Unsat => {}
        }
    }
    DioOutcome::Unsat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxpoly::Poly;
    use std::time::Duration;

    fn upoly_const(n: u64) -> Poly<u64> {
        Poly::constant(n)
    }

    fn deadline() -> Instant {
        Instant::now() + Duration::from_secs(5)
    }

    #[test]
    fn finds_lexicographic_minimum() {
        // {1 <= c0, 1 <= c1}
        let cons = vec![
            DioCon { lhs: upoly_const(1), rhs: Poly::var(0) },
            DioCon { lhs: upoly_const(1), rhs: Poly::var(1) },
        ];
        let (out, sol) = search(&cons, &[3, 3], deadline());
        assert_eq!(out, DioOutcome::Sat);
        assert_eq!(sol.unwrap(), vec![1, 1]);
    }

    #[test]
    fn contradiction_is_unsat() {
        // {1 <= c0, c0 <= 0}
        let cons = vec![
            DioCon { lhs: upoly_const(1), rhs: Poly::var(0) },
            DioCon { lhs: Poly::var(0), rhs: upoly_const(0) },
        ];
        let (out, _) = search(&cons, &[3], deadline());
        assert_eq!(out, DioOutcome::Unsat);
    }

    #[test]
    fn nonlinear_products_are_handled() {
        // {4 <= c0*c1, c0 <= 2}
        let prod = Poly::var(0).mul(&Poly::var(1));
        let cons = vec![
            DioCon { lhs: upoly_const(4), rhs: prod },
            DioCon { lhs: Poly::var(0), rhs: upoly_const(2) },
        ];
        let (out, sol) = search(&cons, &[4, 4], deadline());
        assert_eq!(out, DioOutcome::Sat);
        let s = sol.unwrap();
        assert!(s[0] * s[1] >= 4 && s[0] <= 2, "{s:?}");
        // lexicographic: c0 = 1 is feasible with c1 = 4
        assert_eq!(s, vec![1, 4]);
    }
}
