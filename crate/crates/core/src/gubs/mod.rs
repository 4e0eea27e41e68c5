//! Synthesis of weakly monotone max-polynomial models for first-order
//! constraint problems: SCC decomposition, template interpretations of
//! iteratively increasing shape, max elimination, absolute positiveness,
//! diophantine search, and model minimization.

pub mod dio;
pub mod graph;
pub mod parse;
pub mod smtlib;
pub mod template;

use crate::constraints::Focp;
use crate::index::{FreshSym, IVar, Index, Interp, LeqResult, Signature};
use crate::maxpoly::{MaxPoly, Poly};
use dio::DioOutcome;
use graph::scc_topo;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};
use template::{
    absolute_positiveness, eliminate_max, unfold_template, CMaxPoly, DioCon, Shape, TemplateSet,
    UPoly,
};

#[derive(Clone, Debug)]
pub struct Budget {
    pub degree_max: u32,
    pub coeff_bound: u64,
    pub scc_timeout: Duration,
    /// Upper bound on the size of a merged retry problem.
    pub merge_limit: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            degree_max: 3,
            coeff_bound: 4,
            scc_timeout: Duration::from_secs(60),
            merge_limit: 120,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    Builtin,
    SmtLib { cmd: String },
}

#[derive(Clone, Debug)]
pub struct SolveFailure {
    /// The constraints of the blocking group.
    pub group: Vec<(Index, Index)>,
    pub reason: String,
}

impl SolveFailure {
    pub fn render(&self, sig: &Signature) -> String {
        let vn = |v: IVar| format!("{v}");
        let mut s = format!("no model found: {}\nblocking constraint group:\n", self.reason);
        for (a, b) in &self.group {
            s.push_str(&format!("  {} <= {}\n", a.render(sig, &vn), b.render(sig, &vn)));
        }
        s
    }
}

#[derive(Clone, Debug)]
pub enum Violation {
    Uninterpreted { symbol: String },
    NotCertified { constraint: (Index, Index) },
    Grid { constraint: (Index, Index), witness: BTreeMap<IVar, u64> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Uninterpreted { symbol } => write!(f, "uninterpreted symbol {symbol}"),
            Violation::NotCertified { .. } => write!(f, "constraint not certified"),
            Violation::Grid { witness, .. } => write!(f, "violated at {witness:?}"),
        }
    }
}

/// Re-checks a model independently of how it was found: every constraint
/// must be certified by absolute positiveness on the concrete coefficients
/// and hold on the full grid with variables in 0..6.
pub fn verify_model(focp: &Focp, interp: &Interp, sig: &Signature) -> Result<(), Violation> {
    for (a, b) in &focp.ineqs {
        let pa = interp
            .unfold(a, sig)
            .map_err(|e| Violation::Uninterpreted { symbol: e.0 })?;
        let pb = interp
            .unfold(b, sig)
            .map_err(|e| Violation::Uninterpreted { symbol: e.0 })?;
        match crate::index::leq_maxpoly(&pa, &pb) {
            LeqResult::Certified => {}
            LeqResult::NotCertified(Some(witness)) => {
                return Err(Violation::Grid { constraint: (a.clone(), b.clone()), witness })
            }
            LeqResult::NotCertified(None) => {
                return Err(Violation::NotCertified { constraint: (a.clone(), b.clone()) })
            }
        }
    }
    Ok(())
}

/// A model under construction: raw branch polynomials per symbol, so that
/// minimization can decrement coefficients in place.
type RawModel = BTreeMap<FreshSym, Vec<Poly<u64>>>;

fn raw_to_interp(raw: &RawModel, base: &Interp) -> Interp {
    let mut out = base.clone();
    for (f, branches) in raw {
        out.insert(*f, MaxPoly { branches: branches.clone() }.normalize());
    }
    out
}

/// Solves the problem group by group. Returns a verified model or a
/// failure report naming the blocking group.
pub fn solve(
    focp: &Focp,
    sig: &Signature,
    budget: &Budget,
    backend: &Backend,
) -> Result<Interp, SolveFailure> {
    let groups = scc_topo(focp);
    let mut interp = Interp::new();
    let mut solved_shapes: BTreeMap<FreshSym, Shape> = BTreeMap::new();
    let mut solved_groups: Vec<Vec<usize>> = Vec::new();

    for group in groups {
        let cons: Vec<(Index, Index)> =
            group.iter().map(|&i| focp.ineqs[i].clone()).collect();
        match solve_group(&cons, sig, budget, backend, &interp, &mut solved_shapes) {
            Ok(raw) => {
                interp = raw_to_interp(&raw, &interp);
            }
            Err(reason) => {
                // Merge the failed group with everything it depends on and
                // retry once with previously chosen shapes pinned.
                match merged_retry(
                    focp,
                    &solved_groups,
                    &cons,
                    sig,
                    budget,
                    backend,
                    &mut interp,
                    &mut solved_shapes,
                ) {
                    Ok(()) => {}
                    Err(()) => return Err(SolveFailure { group: cons, reason }),
                }
            }
        }
        solved_groups.push(group);
    }

    match verify_model(focp, &interp, sig) {
        Ok(()) => Ok(interp),
        Err(v) => Err(SolveFailure {
            group: focp.ineqs.clone(),
            reason: format!("model verification failed: {v}"),
        }),
    }
}

/// Attempts one group through the shape ladder.
fn solve_group(
    cons: &[(Index, Index)],
    sig: &Signature,
    budget: &Budget,
    backend: &Backend,
    interp: &Interp,
    solved_shapes: &mut BTreeMap<FreshSym, Shape>,
) -> Result<RawModel, String> {
    let mut syms: BTreeSet<FreshSym> = BTreeSet::new();
    for (a, b) in cons {
        syms.extend(a.fresh_syms());
        syms.extend(b.fresh_syms());
    }
    let unsolved: Vec<FreshSym> =
        syms.into_iter().filter(|f| interp.get(*f).is_none()).collect();

    if unsolved.is_empty() {
        for (a, b) in cons {
            let ok = crate::index::leq_semantic(a, b, interp, sig)
                .map(|r| r.holds())
                .unwrap_or(false);
            if !ok {
                return Err("ground constraint not certified under the accumulated model".into());
            }
        }
        return Ok(RawModel::new());
    }

    let deadline = Instant::now() + budget.scc_timeout;
    let mut timed_out = false;
    for shape in Shape::ladder(budget.degree_max) {
        let shapes: BTreeMap<FreshSym, Shape> =
            unsolved.iter().map(|f| (*f, shape)).collect();
        match attempt(cons, &shapes, sig, budget, backend, interp, deadline) {
            AttemptResult::Sat(mut raw) => {
                minimize_raw(cons, &mut raw, interp, sig);
                solved_shapes.extend(shapes);
                return Ok(raw);
            }
            AttemptResult::Unsat => {}
            AttemptResult::Timeout => {
                timed_out = true;
                break;
            }
        }
    }
    Err(if timed_out {
        "budget exhausted (per-group timeout)".into()
    } else {
        format!("no interpretation up to degree {} and coefficient bound {}",
            budget.degree_max, budget.coeff_bound)
    })
}

/// Retry after a group failure: re-free every symbol the group depends on
/// (transitively) and solve the union of the involved constraints jointly.
/// Re-freed symbols keep the shape at which they were first solved; the
/// failed group's symbols run through the ladder again.
#[allow(clippy::too_many_arguments)]
fn merged_retry(
    focp: &Focp,
    solved_groups: &[Vec<usize>],
    failed: &[(Index, Index)],
    sig: &Signature,
    budget: &Budget,
    backend: &Backend,
    interp: &mut Interp,
    solved_shapes: &mut BTreeMap<FreshSym, Shape>,
) -> Result<(), ()> {
    let mut syms: BTreeSet<FreshSym> = BTreeSet::new();
    for (a, b) in failed {
        syms.extend(a.fresh_syms());
        syms.extend(b.fresh_syms());
    }
    let earlier: Vec<(Index, Index)> = solved_groups
        .iter()
        .flat_map(|g| g.iter().map(|&i| focp.ineqs[i].clone()))
        .collect();
    let mut merged: Vec<(Index, Index)> = failed.to_vec();
    loop {
        let mut added = false;
        for c in &earlier {
            if merged.contains(c) {
                continue;
            }
            let mut cs: BTreeSet<FreshSym> = c.0.fresh_syms().into_iter().collect();
            cs.extend(c.1.fresh_syms());
            if !cs.is_disjoint(&syms) {
                merged.push(c.clone());
                syms.extend(cs);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    if merged.len() > budget.merge_limit {
        return Err(());
    }

    let refreed: Vec<FreshSym> = syms.iter().copied().filter(|f| interp.get(*f).is_some()).collect();
    let mut base = interp.clone();
    for f in &refreed {
        base.map.remove(f);
    }
    let ladder_syms: Vec<FreshSym> =
        syms.iter().copied().filter(|f| !refreed.contains(f)).collect();

    let deadline = Instant::now() + budget.scc_timeout;
    // First pass keeps the shapes under which the dependencies were solved;
    // if that fails, run everything through the ladder again.
    for unpin in [false, true] {
        for shape in Shape::ladder(budget.degree_max) {
            let mut shapes: BTreeMap<FreshSym, Shape> = BTreeMap::new();
            for f in &refreed {
                let pinned = solved_shapes.get(f).copied().unwrap_or(shape);
                shapes.insert(*f, if unpin { shape } else { pinned });
            }
            for f in &ladder_syms {
                shapes.insert(*f, shape);
            }
            if let AttemptResult::Sat(mut raw) =
                attempt(&merged, &shapes, sig, budget, backend, &base, deadline)
            {
                minimize_raw(&merged, &mut raw, &base, sig);
                *interp = raw_to_interp(&raw, &base);
                solved_shapes.extend(shapes);
                return Ok(());
            }
        }
    }
    Err(())
}

enum AttemptResult {
    Sat(RawModel),
    Unsat,
    Timeout,
}

/// One shape assignment: build templates, reduce every constraint to a
/// disjunction of diophantine systems, and search the combined problem.
fn attempt(
    cons: &[(Index, Index)],
    shapes: &BTreeMap<FreshSym, Shape>,
    sig: &Signature,
    budget: &Budget,
    backend: &Backend,
    interp: &Interp,
    deadline: Instant,
) -> AttemptResult {
    let mut ts = TemplateSet::default();
    for (f, shape) in shapes {
        ts.add_symbol(*f, sig.arity(*f), *shape, budget.coeff_bound);
    }
    let concrete = |f: FreshSym| interp.get(f).cloned();

    let mut per_con: Vec<Vec<Vec<DioCon>>> = Vec::new();
    for (a, b) in cons {
        let la = match unfold_template(a, &concrete, &ts.templates) {
            Ok(p) => p,
            Err(_) => return AttemptResult::Unsat,
        };
        let lb = match unfold_template(b, &concrete, &ts.templates) {
            Ok(p) => p,
            Err(_) => return AttemptResult::Unsat,
        };
        let mut feasible: Vec<Vec<DioCon>> = Vec::new();
        for conj in eliminate_max(&la, &lb) {
            let mut dios = Vec::new();
            let mut ok = true;
            for (l, r) in &conj {
                for d in absolute_positiveness(l, r) {
                    // a positive constant below an empty right side can
                    // never be satisfied
                    if d.rhs.is_zero() && d.lhs.coeff_of(&[]) > 0 {
                        ok = false;
                        break;
                    }
                    dios.push(d);
                }
                if !ok {
                    break;
                }
            }
            if ok {
                feasible.push(dios);
            }
        }
        if feasible.is_empty() {
            return AttemptResult::Unsat;
        }
        per_con.push(feasible);
    }

    if let Backend::SmtLib { cmd } = backend {
        match smtlib::solve_external(cmd, &per_con, &ts) {
            Ok(Some(sol)) => return AttemptResult::Sat(instantiate(&ts, &sol)),
            Ok(None) => return AttemptResult::Unsat,
            Err(_) => return AttemptResult::Unsat,
        }
    }

    let bounds: Vec<u64> = ts.coeffs.iter().map(|c| c.max).collect();
    let mut acc: Vec<DioCon> = Vec::new();
    match combo_dfs(&per_con, 0, &mut acc, &bounds, deadline) {
        ComboResult::Sat(sol) => AttemptResult::Sat(instantiate(&ts, &sol)),
        ComboResult::Unsat => AttemptResult::Unsat,
        ComboResult::Timeout => AttemptResult::Timeout,
    }
}

enum ComboResult {
    Sat(Vec<u64>),
    Unsat,
    Timeout,
}

fn combo_dfs(
    per_con: &[Vec<Vec<DioCon>>],
    idx: usize,
    acc: &mut Vec<DioCon>,
    bounds: &[u64],
    deadline: Instant,
) -> ComboResult {
    if Instant::now() > deadline {
        return ComboResult::Timeout;
    }
    if idx == per_con.len() {
        return match dio::search(acc, bounds, deadline) {
            (DioOutcome::Sat, Some(sol)) => ComboResult::Sat(sol),
            (DioOutcome::Timeout, _) => ComboResult::Timeout,
            _ => ComboResult::Unsat,
        };
    }
    for disjunct in &per_con[idx] {
        let mark = acc.len();
        acc.extend(disjunct.iter().cloned());
        // quick infeasibility probe on the accumulated system
        let feasible = {
            let (out, _) = dio::search(acc, bounds, Instant::now() + Duration::from_millis(50));
            out != DioOutcome::Unsat
        };
        if feasible {
            match combo_dfs(per_con, idx + 1, acc, bounds, deadline) {
                ComboResult::Unsat => {}
                other => return other,
            }
        }
        acc.truncate(mark);
    }
    ComboResult::Unsat
}

/// Substitutes a coefficient assignment into the templates.
fn instantiate(ts: &TemplateSet, sol: &[u64]) -> RawModel {
    let mut out = RawModel::new();
    for (f, tpl) in &ts.templates {
        let branches: Vec<Poly<u64>> = tpl
            .branches
            .iter()
            .map(|b| {
                Poly::from_monos(
                    b.monos
                        .iter()
                        .map(|m| crate::maxpoly::Mono {
                            pows: m.pows.clone(),
                            coeff: m.coeff.eval(&|v| sol[v as usize]),
                        })
                        .collect(),
                )
            })
            .collect();
        out.insert(*f, branches);
    }
    out
}

fn certified(cons: &[(Index, Index)], raw: &RawModel, base: &Interp, sig: &Signature) -> bool {
    let interp = raw_to_interp(raw, base);
    cons.iter().all(|(a, b)| {
        matches!(
            crate::index::leq_semantic(a, b, &interp, sig),
            Ok(LeqResult::Certified)
        )
    })
}

/// Greedy minimization: decrement coefficients (highest degree first, then
/// in template order) while the group stays certified.
fn minimize_raw(cons: &[(Index, Index)], raw: &mut RawModel, base: &Interp, sig: &Signature) {
    // positions: (degree, sym, branch, mono index)
    let mut positions: Vec<(u32, FreshSym, usize, usize)> = Vec::new();
    for (f, branches) in raw.iter() {
        for (bi, b) in branches.iter().enumerate() {
            for (mi, m) in b.monos.iter().enumerate() {
                positions.push((m.degree(), *f, bi, mi));
            }
        }
    }
    positions.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)).then(a.3.cmp(&b.3)));
    loop {
        let mut improved = false;
        for &(_, f, bi, mi) in &positions {
            loop {
                let cur = raw[&f][bi].monos[mi].coeff;
                if cur == 0 {
                    break;
                }
                raw.get_mut(&f).unwrap()[bi].monos[mi].coeff = cur - 1;
                if certified(cons, raw, base, sig) {
                    improved = true;
                } else {
                    raw.get_mut(&f).unwrap()[bi].monos[mi].coeff = cur;
                    break;
                }
            }
        }
        if !improved {
            return;
        }
    }
}

/// Public minimization entry: tightens a verified model against a problem.
pub fn minimize_model(focp: &Focp, interp: &Interp, sig: &Signature) -> Interp {
    let mut raw: RawModel =
        interp.map.iter().map(|(f, p)| (*f, p.branches.clone())).collect();
    let base = Interp::new();
    minimize_raw(&focp.ineqs, &mut raw, &base, sig);
    raw_to_interp(&raw, &base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::IVar;

    fn iv(n: u32) -> Index {
        Index::Var(IVar(n))
    }

    fn builtin() -> (Budget, Backend) {
        (Budget::default(), Backend::Builtin)
    }

    #[test]
    fn solves_successor_constraint_minimally() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        // i + 1 <= f(i)
        let focp = Focp { ineqs: vec![(Index::succ(iv(0)), Index::app(f, vec![iv(0)]))] };
        let (budget, backend) = builtin();
        let interp = solve(&focp, &sig, &budget, &backend).unwrap();
        let p = interp.get(f).unwrap();
        // minimal model: f(i) = i + 1
        assert_eq!(p.render(&|_| "i".into()), "1 + i");
    }

    #[test]
    fn recursive_symbol_needs_linear_growth() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        // f(i) + 1 <= f(i + 1), 1 <= f(0)
        let focp = Focp {
            ineqs: vec![
                (
                    Index::succ(Index::app(f, vec![iv(0)])),
                    Index::app(f, vec![Index::succ(iv(0))]),
                ),
                (Index::nat(1), Index::app(f, vec![Index::zero()])),
            ],
        };
        let (budget, backend) = builtin();
        let interp = solve(&focp, &sig, &budget, &backend).unwrap();
        let assign0: BTreeMap<IVar, u64> = [(IVar(0), 5)].into_iter().collect();
        let v = interp.eval(&Index::app(f, vec![iv(0)]), &sig, &assign0).unwrap();
        assert!(v >= 6, "f(5) = {v} must dominate 6");
        verify_model(&focp, &interp, &sig).unwrap();
    }

    #[test]
    fn exponential_growth_is_reported_as_failure() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        // 2*f(i) + 1 <= f(i + 1): no polynomial model
        let lhs = Index::succ(Index::add(
            Index::app(f, vec![iv(0)]),
            Index::app(f, vec![iv(0)]),
        ));
        let focp = Focp {
            ineqs: vec![
                (lhs, Index::app(f, vec![Index::succ(iv(0))])),
                (Index::nat(1), Index::app(f, vec![Index::zero()])),
            ],
        };
        let (budget, backend) = builtin();
        let err = solve(&focp, &sig, &budget, &backend).unwrap_err();
        assert!(!err.group.is_empty());
    }

    #[test]
    fn verify_detects_bad_model() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        let focp = Focp { ineqs: vec![(iv(0), Index::app(f, vec![iv(0)]))] };
        let mut interp = Interp::new();
        interp.insert(f, MaxPoly::zero());
        match verify_model(&focp, &interp, &sig) {
            Err(Violation::Grid { witness, .. }) => {
                assert_eq!(witness.values().copied().max(), Some(1));
            }
            other => panic!("expected grid violation, got {other:?}"),
        }
    }

    #[test]
    fn minimize_recovers_tight_model() {
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        let focp = Focp { ineqs: vec![(Index::succ(iv(0)), Index::app(f, vec![iv(0)]))] };
        let mut interp = Interp::new();
        // start from f(i) = 2i + 3
        interp.insert(
            f,
            MaxPoly::var(0).mul(&MaxPoly::constant(2)).add(&MaxPoly::constant(3)),
        );
        verify_model(&focp, &interp, &sig).unwrap();
        let min = minimize_model(&focp, &interp, &sig);
        assert_eq!(min.get(f).unwrap().render(&|_| "i".into()), "1 + i");
    }

    #[test]
    fn max_template_solves_two_lower_bounds_with_join() {
        let mut sig = Signature::new();
        let f = sig.fresh(2, None);
        // i <= f(i,j), j <= f(i,j), and f(i,j) <= max(i,j) pins the join
        let fij = Index::app(f, vec![iv(0), iv(1)]);
        let focp = Focp {
            ineqs: vec![
                (iv(0), fij.clone()),
                (iv(1), fij.clone()),
                (fij, Index::max(iv(0), iv(1))),
            ],
        };
        let (budget, backend) = builtin();
        let interp = solve(&focp, &sig, &budget, &backend).unwrap();
        let p = interp.get(f).unwrap();
        assert_eq!(p.branches.len(), 2, "expected a genuine max: {p:?}");
        verify_model(&focp, &interp, &sig).unwrap();
    }
}
