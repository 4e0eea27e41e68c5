//! The dependency graph over constraints and its SCC decomposition.
//!
//! For a constraint `a <= b`, decompose `b` as a symbol-free context over
//! its outermost fresh-symbol applications. The constraint depends on every
//! constraint whose right-hand side mentions one of the symbols occurring
//! in those applications' arguments or in `a`. Interpreted symbols
//! (`0`, `s`, `+`, `*`, `max`) belong to contexts and never induce edges.

use crate::constraints::Focp;
use crate::index::{FreshSym, Index, Sym};
use crate::util::sccs;
use std::collections::BTreeSet;

/// Symbols that must be interpreted before the constraint can be solved by
/// extending the model: everything in the left-hand side and everything
/// strictly below the right-hand side's outermost fresh symbols.
pub fn dependency_syms(a: &Index, b: &Index) -> BTreeSet<FreshSym> {
    let mut out: BTreeSet<FreshSym> = a.fresh_syms().into_iter().collect();
    collect_context(b, &mut out);
    out
}

fn collect_context(t: &Index, out: &mut BTreeSet<FreshSym>) {
    match t {
        Index::Var(_) => {}
        Index::App(Sym::Fresh(_), args) => {
            for a in args {
                out.extend(a.fresh_syms());
            }
        }
        Index::App(_, args) => args.iter().for_each(|a| collect_context(a, out)),
    }
}

/// Symbols a constraint can define: the outermost fresh symbols of its
/// right-hand side.
pub fn head_syms(b: &Index) -> BTreeSet<FreshSym> {
    let mut out = BTreeSet::new();
    fn go(t: &Index, out: &mut BTreeSet<FreshSym>) {
        match t {
            Index::Var(_) => {}
            Index::App(Sym::Fresh(f), _) => {
                out.insert(*f);
            }
            Index::App(_, args) => args.iter().for_each(|a| go(a, out)),
        }
    }
    go(b, &mut out);
    out
}

/// Adjacency lists: an edge `c1 -> c2` means `c2` must be interpreted
/// before `c1` can be. Constraints whose right-hand sides share a head
/// symbol co-define it and are linked both ways, so they always land in
/// one group.
pub fn build_constraint_graph(focp: &Focp) -> Vec<Vec<usize>> {
    let deps: Vec<BTreeSet<FreshSym>> =
        focp.ineqs.iter().map(|(a, b)| dependency_syms(a, b)).collect();
    let rhs_syms: Vec<BTreeSet<FreshSym>> = focp
        .ineqs
        .iter()
        .map(|(_, b)| b.fresh_syms().into_iter().collect())
        .collect();
    let heads: Vec<BTreeSet<FreshSym>> =
        focp.ineqs.iter().map(|(_, b)| head_syms(b)).collect();
    (0..focp.ineqs.len())
        .map(|i| {
            (0..focp.ineqs.len())
                .filter(|&j| {
                    j != i
                        && (!deps[i].is_disjoint(&rhs_syms[j])
                            || !heads[i].is_disjoint(&heads[j]))
                })
                .collect()
        })
        .collect()
}

/// Constraint groups in solving order: dependencies first.
pub fn scc_topo(focp: &Focp) -> Vec<Vec<usize>> {
    if focp.ineqs.is_empty() {
        return vec![];
    }
    let graph = build_constraint_graph(focp);
    sccs(&graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{IVar, Signature};

    fn iv(n: u32) -> Index {
        Index::Var(IVar(n))
    }

    #[test]
    fn chain_orders_definitions_first() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        let g = sig.fresh(1, None);
        // c0: i <= f(i)        defines f
        // c1: f(j) <= g(j)     defines g, depends on f
        let focp = Focp {
            ineqs: vec![
                (iv(0), Index::app(f, vec![iv(0)])),
                (Index::app(f, vec![iv(1)]), Index::app(g, vec![iv(1)])),
            ],
        };
        let graph = build_constraint_graph(&focp);
        assert_eq!(graph[1], vec![0], "c1 depends on c0");
        assert!(graph[0].is_empty());
        let order = scc_topo(&focp);
        assert_eq!(order, vec![vec![0], vec![1]]);
    }

    #[test]
    fn recursive_constraint_is_a_self_loop_group() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        // f(i) + 1 <= f(i + 1)
        let focp = Focp {
            ineqs: vec![(
                Index::succ(Index::app(f, vec![iv(0)])),
                Index::app(f, vec![Index::succ(iv(0))]),
            )],
        };
        let graph = build_constraint_graph(&focp);
        // self edges are skipped but the constraint still forms its own group
        assert!(graph[0].is_empty());
        assert_eq!(scc_topo(&focp), vec![vec![0]]);
    }

    #[test]
    fn empty_problem_has_no_groups() {
        assert!(scc_topo(&Focp::default()).is_empty());
    }
}
