//! External QF_NIA backend: emits an SMT-LIB 2 script for the diophantine
//! side conditions and parses the solver's model. `unsat`/`unknown` map to
//! "no model within this shape".

use super::template::{DioCon, TemplateSet, UPoly};
use std::io::Write;
use std::process::{Command, Stdio};

#[derive(Debug)]
pub enum SmtError {
    Spawn(String),
    Protocol(String),
}

impl std::fmt::Display for SmtError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SmtError::Spawn(e) => write!(f, "failed to run external solver: {e}"),
            SmtError::Protocol(e) => write!(f, "unexpected solver output: {e}"),
        }
    }
}

fn upoly_to_smt(p: &UPoly) -> String {
    if p.monos.is_empty() {
        return "0".into();
    }
    let terms: Vec<String> = p
        .monos
        .iter()
        .map(|m| {
            let mut factors: Vec<String> = Vec::new();
            if m.coeff != 1 || m.pows.is_empty() {
                factors.push(m.coeff.to_string());
            }
            for &(v, e) in &m.pows {
                for _ in 0..e {
                    factors.push(format!("c{v}"));
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    if terms.len() == 1 {
        terms.into_iter().next().unwrap()
    } else {
        format!("(+ {})", terms.join(" "))
    }
}

/// Builds the QF_NIA script: one nonnegative integer constant per
/// coefficient, one assertion per constraint (a disjunction over its
/// max-elimination branches).
pub fn render_script(per_con: &[Vec<Vec<DioCon>>], ts: &TemplateSet) -> String {
    let mut s = String::new();
    s.push_str("(set-logic QF_NIA)\n");
    for (i, _) in ts.coeffs.iter().enumerate() {
        s.push_str(&format!("(declare-const c{i} Int)\n"));
        s.push_str(&format!("(assert (>= c{i} 0))\n"));
    }
    for disjuncts in per_con {
        let alts: Vec<String> = disjuncts
            .iter()
            .map(|conj| {
                if conj.is_empty() {
                    "true".to_string()
                } else {
                    let parts: Vec<String> = conj
                        .iter()
                        .map(|d| format!("(<= {} {})", upoly_to_smt(&d.lhs), upoly_to_smt(&d.rhs)))
                        .collect();
                    if parts.len() == 1 {
                        parts.into_iter().next().unwrap()
                    } else {
                        format!("(and {})", parts.join(" "))
                    }
                }
            })
            .collect();
        let body = if alts.len() == 1 {
            alts.into_iter().next().unwrap()
        } else {
            format!("(or {})", alts.join(" "))
        };
        s.push_str(&format!("(assert {body})\n"));
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

/// Runs the external command (split on whitespace), feeding the script on
/// stdin. Returns the coefficient assignment on `sat`.
pub fn solve_external(
    cmd: &str,
    per_con: &[Vec<Vec<DioCon>>],
    ts: &TemplateSet,
) -> Result<Option<Vec<u64>>, SmtError> {
    let script = render_script(per_con, ts);
    let mut parts = cmd.split_whitespace();
    let bin = parts.next().ok_or_else(|| SmtError::Spawn("empty command".into()))?;
    let mut child = Command::new(bin)
        .args(parts)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SmtError::Spawn(e.to_string()))?;
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(script.as_bytes())
        .map_err(|e| SmtError::Spawn(e.to_string()))?;
    let out = child.wait_with_output().map_err(|e| SmtError::Spawn(e.to_string()))?;
    let text = String::from_utf8_lossy(&out.stdout);
    parse_reply(&text, ts.coeffs.len())
}

/// Parses `sat` plus a `(define-fun cN () Int value)` model.
pub fn parse_reply(text: &str, n_coeffs: usize) -> Result<Option<Vec<u64>>, SmtError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    match lines.next() {
        Some("sat") => {}
        Some("unsat") | Some("unknown") => return Ok(None),
        other => {
            return Err(SmtError::Protocol(format!(
                "expected sat/unsat, got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let rest: String = text.splitn(2, "sat").nth(1).unwrap_or("").to_string();
    let toks = tokenize(&rest);
    let mut sol = vec![0u64; n_coeffs];
    let mut i = 0;
    while i < toks.len() {
        if toks[i] == "define-fun" && i + 1 < toks.len() {
            let name = &toks[i + 1];
            if let Some(idx) = name.strip_prefix('c').and_then(|s| s.parse::<usize>().ok()) {
                // skip: name ( ) Int value  -- value may be (- n)
                let mut j = i + 2;
                // find "Int"
                while j < toks.len() && toks[j] != "Int" {
                    j += 1;
                }
                if j + 1 < toks.len() {
                    let mut v = &toks[j + 1];
                    if v == "(" && j + 2 < toks.len() && toks[j + 2] == "-" {
                        return Err(SmtError::Protocol("negative coefficient in model".into()));
                    }
                    if v == "(" {
                        v = &toks[j + 2];
                    }
                    let val: u64 = v
                        .parse()
                        .map_err(|_| SmtError::Protocol(format!("bad value `{v}`")))?;
                    if idx < sol.len() {
                        sol[idx] = val;
                    }
                }
            }
        }
        i += 1;
    }
    Ok(Some(sol))
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::Signature;
    use crate::maxpoly::Poly;

    #[test]
    fn script_shape() {
        let mut ts = TemplateSet::default();
        let mut sig = Signature::new();
        let f = sig.fresh(1, None);
        ts.add_symbol(f, 1, super::super::template::Shape::Linear, 4);
        let per_con = vec![vec![vec![DioCon {
            lhs: Poly::constant(1),
            rhs: Poly::var(0),
        }]]];
        let s = render_script(&per_con, &ts);
        assert!(s.contains("(set-logic QF_NIA)"));
        assert!(s.contains("(declare-const c0 Int)"));
        assert!(s.contains("(assert (<= 1 c0))"));
        assert!(s.contains("(check-sat)"));
    }

    #[test]
    fn parses_sat_reply() {
        let reply = "sat\n(model\n  (define-fun c0 () Int 2)\n  (define-fun c1 () Int 0)\n)\n";
        let sol = parse_reply(reply, 2).unwrap().unwrap();
        assert_eq!(sol, vec![2, 0]);
    }

    #[test]
    fn parses_unsat_reply() {
        assert!(parse_reply("unsat\n", 1).unwrap().is_none());
    }
}
