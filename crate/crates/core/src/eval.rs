//! Call-by-value small-step interpreter with step counting.
//!
//! Reduction is substitution based: one step either fires an equation on a
//! fully applied function whose arguments are values, or contracts a pair
//! destructor whose scrutinee is a pair of values. The redex is picked by a
//! configurable order among all candidate positions; for normalising terms
//! the order affects neither result nor step count.

use crate::syntax::*;
use rand::Rng;
use rand::SeedableRng;
use std::collections::BTreeMap;
use std::rc::Rc;

/// Runtime terms. Lambdas may appear only when evaluating programs that
/// have not been lambda lifted; a beta step then counts as a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RTerm {
    Var(Name),
    Fun(Name),
    Con(Name),
    App(Rc<RTerm>, Rc<RTerm>),
    Pair(Rc<RTerm>, Rc<RTerm>),
    LetPair {
        left: Name,
        right: Name,
        rhs: Rc<RTerm>,
        body: Rc<RTerm>,
    },
    Lam {
        params: Vec<Name>,
        body: Rc<RTerm>,
    },
}

impl RTerm {
    pub fn from_term(t: &Term) -> Rc<RTerm> {
        Rc::new(match &t.kind {
            TermKind::Var(x) => RTerm::Var(x.clone()),
            TermKind::Fun(f) => RTerm::Fun(f.clone()),
            TermKind::Con(c) => RTerm::Con(c.clone()),
            TermKind::App(a, b) => RTerm::App(RTerm::from_term(a), RTerm::from_term(b)),
            TermKind::Pair(a, b) => RTerm::Pair(RTerm::from_term(a), RTerm::from_term(b)),
            TermKind::LetPair { left, right, rhs, body } => RTerm::LetPair {
                left: left.clone(),
                right: right.clone(),
                rhs: RTerm::from_term(rhs),
                body: RTerm::from_term(body),
            },
            TermKind::Lam { params, body } => {
                RTerm::Lam { params: params.clone(), body: RTerm::from_term(body) }
            }
        })
    }

    pub fn app(f: Rc<RTerm>, a: Rc<RTerm>) -> Rc<RTerm> {
        Rc::new(RTerm::App(f, a))
    }

    pub fn con(name: &str, args: Vec<Rc<RTerm>>) -> Rc<RTerm> {
        args.into_iter().fold(Rc::new(RTerm::Con(name.into())), RTerm::app)
    }

    pub fn nat(n: u64) -> Rc<RTerm> {
        let mut t = Rc::new(RTerm::Con("Z".into()));
        for _ in 0..n {
            t = RTerm::con("S", vec![t]);
        }
        t
    }

    pub fn list(elems: Vec<Rc<RTerm>>) -> Rc<RTerm> {
        let mut t = Rc::new(RTerm::Con("Nil".into()));
        for e in elems.into_iter().rev() {
            t = RTerm::con("Cons", vec![e, t]);
        }
        t
    }

    pub fn spine(self: &Rc<RTerm>) -> (Rc<RTerm>, Vec<Rc<RTerm>>) {
        let mut args = Vec::new();
        let mut t = self.clone();
        while let RTerm::App(f, a) = &*t {
            args.push(a.clone());
            let f = f.clone();
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Number of non-nullary constructors: the size measure of data values.
    pub fn data_size(self: &Rc<RTerm>) -> u64 {
        let (head, args) = self.spine();
        match &*head {
            RTerm::Con(_) => {
                let w = if args.is_empty() { 0 } else { 1 };
                w + args.iter().map(|a| a.data_size()).sum::<u64>()
            }
            RTerm::Pair(a, b) => a.data_size() + b.data_size(),
            _ => 0,
        }
    }

    pub fn render(self: &Rc<RTerm>) -> String {
        fn go(t: &Rc<RTerm>, prec: u8) -> String {
            match &**t {
                RTerm::Var(x) => x.clone(),
                RTerm::Fun(f) => f.clone(),
                RTerm::Con(c) => c.clone(),
                RTerm::App(..) => {
                    let (h, args) = t.spine();
                    let mut s = go(&h, 1);
                    for a in args {
                        s.push(' ');
                        s.push_str(&go(&a, 2));
                    }
                    if prec >= 2 {
                        format!("({s})")
                    } else {
                        s
                    }
                }
                RTerm::Pair(a, b) => format!("({}, {})", go(a, 0), go(b, 0)),
                RTerm::LetPair { left, right, rhs, body } => {
                    let s = format!("let ({left}, {right}) = {} in {}", go(rhs, 0), go(body, 0));
                    if prec >= 1 {
                        format!("({s})")
                    } else {
                        s
                    }
                }
                RTerm::Lam { params, body } => {
                    let s = format!("\\{} . {}", params.join(" "), go(body, 0));
                    if prec >= 1 {
                        format!("({s})")
                    } else {
                        s
                    }
                }
            }
        }
        go(self, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalOrder {
    LeftToRight,
    RightToLeft,
    Random(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Value(Rc<RTerm>),
    Stuck(Rc<RTerm>),
    FuelExhausted(Rc<RTerm>),
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub steps: u64,
    pub outcome: Outcome,
    pub order: EvalOrder,
}

pub fn is_value(prog: &Program, t: &Rc<RTerm>) -> bool {
    match &**t {
        RTerm::Var(_) => false, // ground terms only; treat as non-value
        RTerm::Fun(f) => prog.fun_arity(f).map(|a| a > 0).unwrap_or(false),
        RTerm::Con(_) => true,
        RTerm::Lam { .. } => true,
        RTerm::Pair(a, b) => is_value(prog, a) && is_value(prog, b),
        RTerm::LetPair { .. } => false,
        RTerm::App(..) => {
            let (head, args) = t.spine();
            if !args.iter().all(|a| is_value(prog, a)) {
                return false;
            }
            match &*head {
                RTerm::Con(c) => prog.ctor_arity(c).map(|a| args.len() <= a).unwrap_or(false),
                RTerm::Fun(f) => prog.fun_arity(f).map(|a| args.len() < a).unwrap_or(false),
                _ => false,
            }
        }
    }
}

fn match_pattern(pat: &Term, v: &Rc<RTerm>, out: &mut BTreeMap<Name, Rc<RTerm>>) -> bool {
    match &pat.kind {
        TermKind::Var(x) => {
            out.insert(x.clone(), v.clone());
            true
        }
        TermKind::Con(_) | TermKind::App(..) => {
            let (ph, pargs) = pat.spine();
            let pname = match &ph.kind {
                TermKind::Con(c) => c,
                _ => return false,
            };
            let (vh, vargs) = v.spine();
            match &*vh {
                RTerm::Con(c) if c == pname && vargs.len() == pargs.len() => {
                    pargs.iter().zip(vargs.iter()).all(|(p, a)| match_pattern(p, a, out))
                }
                _ => false,
            }
        }
        _ => false,
    }
}

fn substitute(t: &Rc<RTerm>, subst: &BTreeMap<Name, Rc<RTerm>>) -> Rc<RTerm> {
    if subst.is_empty() {
        return t.clone();
    }
    match &**t {
        RTerm::Var(x) => subst.get(x).cloned().unwrap_or_else(|| t.clone()),
        RTerm::Fun(_) | RTerm::Con(_) => t.clone(),
        RTerm::App(a, b) => Rc::new(RTerm::App(substitute(a, subst), substitute(b, subst))),
        RTerm::Pair(a, b) => Rc::new(RTerm::Pair(substitute(a, subst), substitute(b, subst))),
        RTerm::LetPair { left, right, rhs, body } => {
            let mut inner = subst.clone();
            inner.remove(left);
            inner.remove(right);
            Rc::new(RTerm::LetPair {
                left: left.clone(),
                right: right.clone(),
                rhs: substitute(rhs, subst),
                body: substitute(body, &inner),
            })
        }
        RTerm::Lam { params, body } => {
            let mut inner = subst.clone();
            for p in params {
                inner.remove(p);
            }
            Rc::new(RTerm::Lam { params: params.clone(), body: substitute(body, &inner) })
        }
    }
}

/// Result of walking a subterm looking for a redex.
enum Walk {
    /// The subterm is a value (no redex inside).
    Value,
    /// Neither a value nor reduced: stuck or a skipped redex inside.
    Neutral,
    Reduced(Rc<RTerm>),
}

struct Stepper<'a> {
    prog: &'a Program,
    right_first: bool,
    /// Skip this many redexes before contracting; in counting mode nothing
    /// is ever contracted and `seen` records the number of redexes.
    skip: usize,
    count_only: bool,
    seen: usize,
}

impl<'a> Stepper<'a> {
    fn take(&mut self) -> bool {
        self.seen += 1;
        if self.count_only {
            return false;
        }
        if self.skip == 0 {
            true
        } else {
            self.skip -= 1;
            false
        }
    }

    fn walk(&mut self, t: &Rc<RTerm>) -> Walk {
        match &**t {
            RTerm::Var(_) => Walk::Neutral,
            RTerm::Con(_) | RTerm::Lam { .. } => Walk::Value,
            RTerm::Fun(f) => match self.prog.fun_arity(f) {
                Some(0) => match self.equation_contractum(f, &[]) {
                    Some(r) if self.take() => Walk::Reduced(r),
                    Some(_) => Walk::Neutral,
                    None => Walk::Neutral,
                },
                Some(_) => Walk::Value,
                None => Walk::Neutral,
            },
            RTerm::Pair(a, b) => self.walk_two(t, a, b, |a, b| Rc::new(RTerm::Pair(a, b))),
            RTerm::App(a, b) => {
                match self.walk_two(t, a, b, |a, b| Rc::new(RTerm::App(a, b))) {
                    Walk::Value => self.spine_redex(t),
                    w => w,
                }
            }
            RTerm::LetPair { left, right, rhs, body } => match self.walk(rhs) {
                Walk::Reduced(r) => Walk::Reduced(Rc::new(RTerm::LetPair {
                    left: left.clone(),
                    right: right.clone(),
                    rhs: r,
                    body: body.clone(),
                })),
                Walk::Value => {
                    if let RTerm::Pair(a, b) = &**rhs {
                        let mut bind = BTreeMap::new();
                        bind.insert(left.clone(), a.clone());
                        bind.insert(right.clone(), b.clone());
                        if self.take() {
                            Walk::Reduced(substitute(body, &bind))
                        } else {
                            Walk::Neutral
                        }
                    } else {
                        Walk::Neutral // stuck: scrutinee is not a pair
                    }
                }
                Walk::Neutral => Walk::Neutral,
            },
        }
    }

    fn walk_two(
        &mut self,
        _t: &Rc<RTerm>,
        a: &Rc<RTerm>,
        b: &Rc<RTerm>,
        rebuild: impl Fn(Rc<RTerm>, Rc<RTerm>) -> Rc<RTerm>,
    ) -> Walk {
        let (first, second) = if self.right_first { (b, a) } else { (a, b) };
        let wf = self.walk(first);
        if let Walk::Reduced(r) = wf {
            return Walk::Reduced(if self.right_first {
                rebuild(a.clone(), r)
            } else {
                rebuild(r, b.clone())
            });
        }
        let ws = self.walk(second);
        if let Walk::Reduced(r) = ws {
            return Walk::Reduced(if self.right_first {
                rebuild(r, b.clone())
            } else {
                rebuild(a.clone(), r)
            });
        }
        match (wf, ws) {
            (Walk::Value, Walk::Value) => Walk::Value,
            _ => Walk::Neutral,
        }
    }

    /// Both children of an application are values: check for a spine redex.
    fn spine_redex(&mut self, t: &Rc<RTerm>) -> Walk {
        let (head, args) = t.spine();
        match &*head {
            RTerm::Fun(f) => {
                let ar = match self.prog.fun_arity(f) {
                    Some(a) => a,
                    None => return Walk::Neutral,
                };
                if args.len() < ar {
                    return Walk::Value; // partial application
                }
                if args.len() > ar {
                    return Walk::Neutral; // inner spine was stuck
                }
                match self.equation_contractum(f, &args) {
                    Some(r) if self.take() => Walk::Reduced(r),
                    Some(_) => Walk::Neutral,
                    None => Walk::Neutral, // no equation matches: stuck
                }
            }
            RTerm::Con(c) => {
                let ar = self.prog.ctor_arity(c).unwrap_or(0);
                if args.len() <= ar {
                    Walk::Value
                } else {
                    Walk::Neutral
                }
            }
            RTerm::Lam { params, body } => {
                let n = params.len().min(args.len());
                let mut subst = BTreeMap::new();
                for (p, a) in params.iter().take(n).zip(args.iter()) {
                    subst.insert(p.clone(), a.clone());
                }
                if !self.take() {
                    return Walk::Neutral;
                }
                let inner = if n == params.len() {
                    substitute(body, &subst)
                } else {
                    let lam = Rc::new(RTerm::Lam { params: params[n..].to_vec(), body: body.clone() });
                    substitute(&lam, &subst)
                };
                Walk::Reduced(args[n..].iter().cloned().fold(inner, RTerm::app))
            }
            _ => Walk::Neutral,
        }
    }

    fn equation_contractum(&self, f: &str, args: &[Rc<RTerm>]) -> Option<Rc<RTerm>> {
        for eq in &self.prog.equations {
            if eq.fun_name() != f {
                continue;
            }
            let pats = eq.patterns();
            if pats.len() != args.len() {
                continue;
            }
            let mut subst = BTreeMap::new();
            if pats.iter().zip(args.iter()).all(|(p, a)| match_pattern(p, a, &mut subst)) {
                let rhs = RTerm::from_term(&eq.rhs);
                return Some(substitute(&rhs, &subst));
            }
        }
        None
    }
}

/// Performs one reduction step, or returns `None` when the term is a value
/// or stuck (the caller distinguishes the two via `is_value`).
pub fn reduce_step(
    prog: &Program,
    t: &Rc<RTerm>,
    order: EvalOrder,
    rng: &mut Option<rand_chacha::ChaCha8Rng>,
) -> Option<Rc<RTerm>> {
    let (right_first, skip) = match order {
        EvalOrder::LeftToRight => (false, 0),
        EvalOrder::RightToLeft => (true, 0),
        EvalOrder::Random(_) => {
            let mut counter =
                Stepper { prog, right_first: false, skip: usize::MAX, count_only: true, seen: 0 };
            counter.walk(t);
            if counter.seen == 0 {
                return None;
            }
            let r = rng.as_mut().expect("random order requires an rng");
            (false, r.gen_range(0..counter.seen))
        }
    };
    let mut stepper = Stepper { prog, right_first, skip, count_only: false, seen: 0 };
    match stepper.walk(t) {
        Walk::Reduced(r) => Some(r),
        _ => None,
    }
}

/// Iterates `reduce_step` until a value, a stuck term, or fuel exhaustion.
pub fn evaluate(prog: &Program, t: Rc<RTerm>, order: EvalOrder, fuel: u64) -> Trace {
    evaluate_traced(prog, t, order, fuel, &mut |_, _| {})
}

pub fn evaluate_traced(
    prog: &Program,
    mut t: Rc<RTerm>,
    order: EvalOrder,
    fuel: u64,
    observe: &mut impl FnMut(u64, &Rc<RTerm>),
) -> Trace {
    let mut rng = match order {
        EvalOrder::Random(seed) => Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut steps = 0;
    observe(0, &t);
    loop {
        if steps >= fuel {
            return Trace { steps, outcome: Outcome::FuelExhausted(t), order };
        }
        match reduce_step(prog, &t, order, &mut rng) {
            Some(next) => {
                t = next;
                steps += 1;
                observe(steps, &t);
            }
            None => {
                let outcome = if is_value(prog, &t) {
                    Outcome::Value(t)
                } else {
                    Outcome::Stuck(t)
                };
                return Trace { steps, outcome, order };
            }
        }
    }
}

/// Applies a function symbol to data-value arguments and evaluates.
pub fn run_function(prog: &Program, f: &str, args: &[Rc<RTerm>], order: EvalOrder, fuel: u64) -> Trace {
    let t = args.iter().cloned().fold(Rc::new(RTerm::Fun(f.to_string())), RTerm::app);
    evaluate(prog, t, order, fuel)
}

/// Maximum observed step count per size tuple over the supplied inputs.
pub struct MeasureRow {
    pub sizes: Vec<u64>,
    pub max_steps: u64,
    /// Result data-value size of a worst-case run (for size soundness checks).
    pub witness: Option<Rc<RTerm>>,
    pub fuel_exhausted: bool,
    pub stuck: bool,
}

pub fn measure_runtime(
    prog: &Program,
    f: &str,
    inputs_per_size: &[(Vec<u64>, Vec<Vec<Rc<RTerm>>>)],
    order: EvalOrder,
    fuel: u64,
) -> Vec<MeasureRow> {
    let mut rows = Vec::new();
    for (sizes, inputs) in inputs_per_size {
        let mut row = MeasureRow {
            sizes: sizes.clone(),
            max_steps: 0,
            witness: None,
            fuel_exhausted: false,
            stuck: false,
        };
        for args in inputs {
            let tr = run_function(prog, f, args, order, fuel);
            match tr.outcome {
                Outcome::Value(v) => {
                    if tr.steps >= row.max_steps {
                        row.max_steps = tr.steps;
                        row.witness = Some(v);
                    }
                }
                Outcome::Stuck(_) => row.stuck = true,
                Outcome::FuelExhausted(_) => row.fuel_exhausted = true,
            }
        }
        rows.push(row);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hm::infer_simple_types;
    use crate::parser::parse_program;

    fn program(src: &str) -> Program {
        infer_simple_types(&parse_program(src).unwrap()).unwrap()
    }

    const REVERSE: &str = "\
rev [] ys = ys
rev (x : xs) ys = rev xs (x : ys)
reverse xs = rev xs []
";

    fn nat_list(ns: &[u64]) -> Rc<RTerm> {
        RTerm::list(ns.iter().map(|&n| RTerm::nat(n)).collect())
    }

    #[test]
    fn let_destructor_steps() {
        let p = program("f x = let (a, b) = (x, S x) in a\n");
        let tr = run_function(&p, "f", &[RTerm::nat(0)], EvalOrder::LeftToRight, 100);
        // one equation step + one let step
        assert_eq!(tr.steps, 2);
        assert_eq!(tr.outcome, Outcome::Value(RTerm::nat(0)));
    }

    #[test]
    fn reverse_three_elements_takes_five_steps() {
        let p = program(REVERSE);
        let tr = run_function(&p, "reverse", &[nat_list(&[1, 2, 3])], EvalOrder::LeftToRight, 100);
        assert_eq!(tr.steps, 5);
        assert_eq!(tr.outcome, Outcome::Value(nat_list(&[3, 2, 1])));
    }

    #[test]
    fn reverse_step_counts_match_closed_form() {
        let p = program(REVERSE);
        for n in 0..=5u64 {
            let xs = nat_list(&(0..n).collect::<Vec<_>>());
            let tr = run_function(&p, "reverse", &[xs], EvalOrder::LeftToRight, 1000);
            assert_eq!(tr.steps, n + 2, "length {n}");
        }
    }

    #[test]
    fn stuck_on_partial_match() {
        let p = program("head (x : xs) = x\n");
        let tr = run_function(&p, "head", &[nat_list(&[])], EvalOrder::LeftToRight, 100);
        assert!(matches!(tr.outcome, Outcome::Stuck(_)));
        assert_eq!(tr.steps, 0);
    }

    #[test]
    fn fuel_exhaustion_on_divergence() {
        let p = program("loop x = loop x\n");
        let tr = run_function(&p, "loop", &[RTerm::nat(0)], EvalOrder::LeftToRight, 100);
        assert!(matches!(tr.outcome, Outcome::FuelExhausted(_)));
        assert_eq!(tr.steps, 100);
    }

    #[test]
    fn orders_agree_on_steps_and_values() {
        let src = "\
plus Z y = y
plus (S x) y = S (plus x y)
double x = plus x x
main xs = mapd xs
mapd [] = []
mapd (x : xs) = double x : mapd xs
";
        let p = program(src);
        for n in 0..4u64 {
            let xs = nat_list(&(0..n).map(|i| i % 3).collect::<Vec<_>>());
            let l = run_function(&p, "main", &[xs.clone()], EvalOrder::LeftToRight, 10_000);
            let r = run_function(&p, "main", &[xs.clone()], EvalOrder::RightToLeft, 10_000);
            let m = run_function(&p, "main", &[xs], EvalOrder::Random(42), 10_000);
            assert_eq!(l.steps, r.steps);
            assert_eq!(l.steps, m.steps);
            assert_eq!(l.outcome, r.outcome);
            assert_eq!(l.outcome, m.outcome);
        }
    }

    #[test]
    fn measure_empty_sizes_gives_empty_table() {
        let p = program(REVERSE);
        let rows = measure_runtime(&p, "reverse", &[], EvalOrder::LeftToRight, 100);
        assert!(rows.is_empty());
    }

    #[test]
    fn data_size_counts_internal_nodes() {
        assert_eq!(nat_list(&[]).data_size(), 0);
        assert_eq!(RTerm::nat(3).data_size(), 3);
        // [1, 0] has 2 conses + element sizes 1
        assert_eq!(nat_list(&[1, 0]).data_size(), 3);
    }
}
