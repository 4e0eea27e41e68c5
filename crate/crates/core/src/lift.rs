//! Lambda lifting: every (maximal chain of) surface lambdas becomes a fresh
//! top-level function whose leading parameters are the captured variables,
//! ordered by first occurrence in the body.

use crate::syntax::*;

/// Lifts all lambdas to the top level. Fresh functions are named
/// `<fun>#l<k>` with `k` counted per enclosing function in traversal order.
pub fn lambda_lift(prog: &Program) -> Program {
    let mut prog = prog.clone();
    let mut new_eqs: Vec<Equation> = Vec::new();
    let mut new_funs: Vec<Name> = Vec::new();

    let mut eqs = std::mem::take(&mut prog.equations);
    for eq in &mut eqs {
        let fun = eq.fun_name().clone();
        // Numbering continues across equations of the same function.
        let mut counter = new_funs.iter().filter(|n| n.starts_with(&format!("{fun}#l"))).count();
        let mut rhs = std::mem::replace(&mut eq.rhs, Term::var("<hole>", eq.span));
        lift_term(&mut rhs, &fun, &mut counter, &mut new_eqs, &mut new_funs);
        eq.rhs = rhs;
    }
    prog.equations = eqs;
    prog.equations.extend(new_eqs);
    prog.funs.extend(new_funs);
    prog
}

fn lift_term(
    t: &mut Term,
    enclosing: &Name,
    counter: &mut usize,
    new_eqs: &mut Vec<Equation>,
    new_funs: &mut Vec<Name>,
) {
    if let TermKind::Lam { .. } = &t.kind {
        // Merge a maximal chain of directly nested lambdas.
        let mut params: Vec<Name> = Vec::new();
        let mut body = t.clone();
        while let TermKind::Lam { params: ps, body: b } = body.kind {
            params.extend(ps);
            body = *b;
        }
        *counter += 1;
        let name = format!("{enclosing}#l{counter}");

        // Captured variables: free in the lambda, ordered by first occurrence.
        let mut captured = body.free_vars();
        captured.retain(|v| !params.contains(v));

        let mut b = body;
        lift_term(&mut b, enclosing, counter, new_eqs, new_funs);

        let span = t.span;
        let mut lhs = Term::new(TermKind::Fun(name.clone()), span);
        for v in captured.iter().chain(params.iter()) {
            lhs = Term::app(lhs, Term::var(v, span));
        }
        new_eqs.push(Equation { lhs, rhs: b, span });
        new_funs.push(name.clone());

        // Replacement: the fresh function applied to the captured variables.
        let mut repl = Term::new(TermKind::Fun(name), span);
        for v in &captured {
            repl = Term::app(repl, Term::var(v, span));
        }
        *t = repl;
        return;
    }
    match &mut t.kind {
        TermKind::App(a, b) | TermKind::Pair(a, b) => {
            lift_term(a, enclosing, counter, new_eqs, new_funs);
            lift_term(b, enclosing, counter, new_eqs, new_funs);
        }
        TermKind::LetPair { rhs, body, .. } => {
            lift_term(rhs, enclosing, counter, new_eqs, new_funs);
            lift_term(body, enclosing, counter, new_eqs, new_funs);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate, EvalOrder, Outcome, RTerm};
    use crate::hm::infer_simple_types;
    use crate::parser::parse_program;
    use std::rc::Rc;

    #[test]
    fn noop_on_lambda_free_program() {
        let p = parse_program("id x = x\n").unwrap();
        let l = lambda_lift(&p);
        assert_eq!(l.equations.len(), 1);
        assert_eq!(l.funs.len(), 1);
    }

    #[test]
    fn product_gets_two_fresh_functions() {
        let src = "\
data P a b = MkP a b
foldr f b [] = b
foldr f b (x : xs) = f x (foldr f b xs)
product ms ns = foldr (\\m ps . foldr (\\n . (:) (MkP m n)) ps ns) [] ms
";
        let p = parse_program(src).unwrap();
        let l = lambda_lift(&p);
        let lifted: Vec<&Name> = l.funs.iter().filter(|f| f.contains("#l")).collect();
        assert_eq!(lifted.len(), 2, "{:?}", l.funs);
        assert!(!l.equations.iter().any(|e| e.rhs.contains_lambda()));
        // Result must typecheck.
        infer_simple_types(&l).unwrap();
    }

    #[test]
    fn merged_nested_lambda_evaluates_like_original() {
        // \x.\y. x applied at one site becomes a single binary function.
        let src = "konst q = (\\x y . x) q (S q)\nmain n = konst n\n";
        let orig = infer_simple_types(&parse_program(src).unwrap()).unwrap();
        let lifted = infer_simple_types(&lambda_lift(&parse_program(src).unwrap())).unwrap();
        let merged: Vec<&Name> = lifted.funs.iter().filter(|f| f.contains("#l")).collect();
        assert_eq!(merged.len(), 1);

        for n in 0..4u64 {
            let arg = RTerm::nat(n);
            let t = Rc::new(RTerm::App(
                Rc::new(RTerm::Fun("main".into())),
                arg,
            ));
            let r1 = evaluate(&orig, t.clone(), EvalOrder::LeftToRight, 10_000);
            let r2 = evaluate(&lifted, t, EvalOrder::LeftToRight, 10_000);
            match (&r1.outcome, &r2.outcome) {
                (Outcome::Value(v1), Outcome::Value(v2)) => assert_eq!(v1, v2),
                other => panic!("unexpected outcomes {other:?}"),
            }
        }
    }
}
