//! Program well-formedness checks beyond what the parser enforces.

use crate::syntax::*;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagKind {
    OverlappingEquations,
    NonLinearLhs,
    UnboundRhsVariable,
    PairPattern,
    PartialConstructorPattern,
    BadEntryType,
    LambdaPresent,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub msg: String,
    pub span: Span,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.msg)
    }
}

/// Checks all program invariants and returns one diagnostic per violation.
/// The program is well-formed iff the result is empty. `main`, when present,
/// must be first-order over data types.
pub fn validate_program(prog: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for eq in &prog.equations {
        let f = eq.fun_name().clone();
        if !eq.lhs.is_linear() {
            out.push(Diagnostic {
                kind: DiagKind::NonLinearLhs,
                msg: format!("non-linear left-hand side in equation for `{f}`"),
                span: eq.span,
            });
        }
        let bound = eq.lhs.free_vars();
        for v in eq.rhs.free_vars() {
            if !bound.contains(&v) {
                out.push(Diagnostic {
                    kind: DiagKind::UnboundRhsVariable,
                    msg: format!("variable `{v}` on the right-hand side of `{f}` is not bound by the left-hand side"),
                    span: eq.rhs.span,
                });
            }
        }
        if eq.rhs.contains_lambda() {
            out.push(Diagnostic {
                kind: DiagKind::LambdaPresent,
                msg: format!("equation for `{f}` still contains a lambda; run lambda lifting first"),
                span: eq.rhs.span,
            });
        }
        for p in eq.patterns() {
            check_pattern(prog, p, &f, &mut out);
        }
    }

    // Pairwise overlap per function.
    let mut by_fun: BTreeMap<&Name, Vec<&Equation>> = BTreeMap::new();
    for eq in &prog.equations {
        by_fun.entry(eq.fun_name()).or_default().push(eq);
    }
    for (f, eqs) in by_fun {
        for i in 0..eqs.len() {
            for j in i + 1..eqs.len() {
                if lhs_unifiable(eqs[i], eqs[j]) {
                    out.push(Diagnostic {
                        kind: DiagKind::OverlappingEquations,
                        msg: format!(
                            "equations for `{f}` overlap: `{}` and `{}`",
                            eqs[i].lhs, eqs[j].lhs
                        ),
                        span: eqs[j].span,
                    });
                }
            }
        }
    }

    if let Some(scheme) = prog.sigs.get("main") {
        check_entry_type(prog, "main", scheme, &mut out);
    }

    out
}

/// An entry point must be first-order: data-type arguments and result, and
/// fully applied by its equations (arity = arrow count).
pub fn check_entry_type(prog: &Program, name: &str, scheme: &Scheme, out: &mut Vec<Diagnostic>) {
    let (args, res) = scheme.ty.arrow_spine();
    let all_data = args.iter().all(|t| t.is_data()) && res.is_data();
    if !all_data {
        out.push(Diagnostic {
            kind: DiagKind::BadEntryType,
            msg: format!(
                "entry `{name}` must be first-order over data types, but has type {}",
                scheme.ty
            ),
            span: Span::default(),
        });
        return;
    }
    if let Some(ar) = prog.fun_arity(name) {
        if ar != args.len() {
            out.push(Diagnostic {
                kind: DiagKind::BadEntryType,
                msg: format!(
                    "entry `{name}` must be fully applied: arity {ar} but {} arguments in its type",
                    args.len()
                ),
                span: Span::default(),
            });
        }
    }
}

fn check_pattern(prog: &Program, p: &Term, f: &Name, out: &mut Vec<Diagnostic>) {
    match &p.kind {
        TermKind::Var(_) => {}
        TermKind::Con(_) | TermKind::App(..) => {
            let (head, args) = p.spine();
            if let TermKind::Con(cn) = &head.kind {
                let ar = prog.ctor_arity(cn).unwrap_or(0);
                if args.len() != ar {
                    out.push(Diagnostic {
                        kind: DiagKind::PartialConstructorPattern,
                        msg: format!(
                            "constructor `{cn}` in a pattern of `{f}` expects {ar} arguments, got {}",
                            args.len()
                        ),
                        span: p.span,
                    });
                }
                for a in args {
                    check_pattern(prog, a, f, out);
                }
            } else {
                out.push(Diagnostic {
                    kind: DiagKind::PairPattern,
                    msg: format!("invalid pattern in `{f}`"),
                    span: p.span,
                });
            }
        }
        TermKind::Pair(..) | TermKind::LetPair { .. } => out.push(Diagnostic {
            kind: DiagKind::PairPattern,
            msg: format!("pattern in `{f}` destructures a pair; use `let (x, y) = ..`"),
            span: p.span,
        }),
        _ => out.push(Diagnostic {
            kind: DiagKind::PairPattern,
            msg: format!("invalid pattern in `{f}`"),
            span: p.span,
        }),
    }
}

/// Syntactic unifiability of two left-hand sides (variables renamed apart).
fn lhs_unifiable(a: &Equation, b: &Equation) -> bool {
    #[derive(Clone, Debug, PartialEq)]
    enum P {
        Var(usize),
        Con(Name, Vec<P>),
    }
    fn conv(t: &Term, prefix: usize, next: &mut usize) -> P {
        match &t.kind {
            TermKind::Var(_) => {
                let v = *next + prefix;
                *next += 2;
                P::Var(v)
            }
            _ => {
                let (h, args) = t.spine();
                let name = match &h.kind {
                    TermKind::Con(c) => c.clone(),
                    TermKind::Fun(f) => f.clone(),
                    _ => "?".into(),
                };
                P::Con(name, args.iter().map(|a| conv(a, prefix, next)).collect())
            }
        }
    }
    fn unify(a: &P, b: &P, subst: &mut BTreeMap<usize, P>) -> bool {
        let a = walk(a, subst);
        let b = walk(b, subst);
        match (&a, &b) {
            (P::Var(x), P::Var(y)) if x == y => true,
            (P::Var(x), _) => {
                if occurs(*x, &b, subst) {
                    false
                } else {
                    subst.insert(*x, b);
                    true
                }
            }
            (_, P::Var(_)) => unify(&b, &a, subst),
            (P::Con(c1, a1), P::Con(c2, a2)) => {
                c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| {
                    let (x, y) = (x.clone(), y.clone());
                    unify(&x, &y, subst)
                })
            }
        }
    }
    fn walk(p: &P, subst: &BTreeMap<usize, P>) -> P {
        match p {
            P::Var(v) => match subst.get(v) {
                Some(q) => walk(q, subst),
                None => p.clone(),
            },
            _ => p.clone(),
        }
    }
    fn occurs(v: usize, p: &P, subst: &BTreeMap<usize, P>) -> bool {
        match walk(p, subst) {
            P::Var(u) => u == v,
            P::Con(_, args) => args.iter().any(|a| occurs(v, a, subst)),
        }
    }
    let mut n1 = 0;
    let mut n2 = 1;
    let pa = conv(&a.lhs, 0, &mut n1);
    let pb = conv(&b.lhs, 1, &mut n2);
    unify(&pa, &pb, &mut BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hm::infer_simple_types;
    use crate::parser::parse_program;

    fn check(src: &str) -> Vec<Diagnostic> {
        let p = infer_simple_types(&parse_program(src).unwrap()).unwrap();
        validate_program(&p)
    }

    #[test]
    fn reverse_is_clean() {
        let d = check("rev [] ys = ys\nrev (x : xs) ys = rev xs (x : ys)\nreverse xs = rev xs []\n");
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn overlap_detected() {
        let d = check("f Z = Z\nf x = x\n");
        assert!(d.iter().any(|d| d.kind == DiagKind::OverlappingEquations), "{d:?}");
    }

    #[test]
    fn disjoint_constructors_do_not_overlap() {
        let d = check("f Z = Z\nf (S x) = x\n");
        assert!(d.is_empty(), "{d:?}");
    }

    #[test]
    fn bad_entry_type() {
        let d = check("main x f = x\n");
        assert!(d.iter().any(|d| d.kind == DiagKind::BadEntryType), "{d:?}");
    }
}
