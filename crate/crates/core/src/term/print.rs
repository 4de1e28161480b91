//! Pretty-printer. Inverse of the parser up to alpha-equivalence: binder
//! hints are reused when safe and freshened (`x`, `x'`, `x''`, `x3`, ...)
//! when they would capture a visible name.

use std::collections::BTreeSet;
use std::fmt;

use crate::term::Term;

fn fresh(hint: &str, avoid: &BTreeSet<String>) -> String {
    let base = if hint.is_empty() { "x" } else { hint };
    if !avoid.contains(base) {
        return base.to_string();
    }
    for primes in 1..=2 {
        let cand = format!("{base}{}", "'".repeat(primes));
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    (3..)
        .map(|n| format!("{base}{n}"))
        .find(|cand| !avoid.contains(cand))
        .unwrap()
}

/// Precedence levels: 0 top, 1 left operand of `(+)`, 2 function part of an
/// application, 3 argument part (atoms only).
fn go(t: &Term, prec: u8, env: &mut Vec<String>, out: &mut String) {
    match t {
        Term::Bound(i) => {
            if let Some(name) = env.iter().rev().nth(*i) {
                out.push_str(name);
            } else {
                // dangling index; only reachable when printing raw bodies
                out.push('#');
                out.push_str(&i.to_string());
            }
        }
        Term::Free(x) => out.push_str(x),
        Term::Lam(_, _) => {
            let parens = prec > 0;
            if parens {
                out.push('(');
            }
            out.push('\\');
            let mut avoid: BTreeSet<String> = t.free_names();
            avoid.extend(env.iter().cloned());
            let mut cur = t;
            let mut pushed = 0;
            while let Term::Lam(hint, body) = cur {
                let name = fresh(hint, &avoid);
                if pushed > 0 {
                    out.push(' ');
                }
                out.push_str(&name);
                avoid.insert(name.clone());
                env.push(name);
                pushed += 1;
                cur = body;
            }
            out.push_str(". ");
            go(cur, 0, env, out);
            env.truncate(env.len() - pushed);
            if parens {
                out.push(')');
            }
        }
        Term::App(f, a) => {
            let parens = prec > 2;
            if parens {
                out.push('(');
            }
            go(f, 2, env, out);
            out.push(' ');
            go(a, 3, env, out);
            if parens {
                out.push(')');
            }
        }
        Term::Op(sym, args) => {
            if sym.is_oplus() {
                let parens = prec > 1;
                if parens {
                    out.push('(');
                }
                go(&args[0], 1, env, out);
                out.push_str(" (+) ");
                go(&args[1], 2, env, out);
                if parens {
                    out.push(')');
                }
            } else {
                // tick(..), print[c](..) and any future prefix operator
                out.push_str(&sym.name);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    go(a, 0, env, out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        let mut env = Vec::new();
        go(self, 0, &mut env, &mut out);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use crate::term::{parse_term, Signature, Term};

    fn roundtrip(src: &str, sig: &Signature) {
        let t = parse_term(src, sig).unwrap();
        let printed = t.to_string();
        let back = parse_term(&printed, sig).unwrap();
        assert_eq!(t, back, "`{src}` printed as `{printed}`");
    }

    #[test]
    fn printing_reparses_to_the_same_term() {
        let prob = Signature::prob();
        for src in [
            r"\x.x",
            r"\x y. x y y",
            r"(\x.x x)(\x.x x)",
            r"\x. (\z.z) (+) x x",
            r"a (+) b (+) c",
            r"a (+) (b (+) c)",
            r"(\x.x) ((\y.y) z)",
        ] {
            roundtrip(src, &prob);
        }
        roundtrip(r"tick((\x.tick(x x)) y)", &Signature::payoff());
        roundtrip(r"print[0](\x.x) print[1](y)", &Signature::output("01"));
    }

    #[test]
    fn binder_hints_are_freshened_against_captured_names() {
        // \y.x with y substituted for x must not print as \y.y
        let sig = Signature::pure();
        let t = parse_term(r"\y.x", &sig).unwrap().subst_free("x", &Term::var("y"));
        assert_eq!(t.to_string(), r"\y'. y");
        let back = parse_term(&t.to_string(), &sig).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn shadowed_outer_binders_are_avoided() {
        // \x.\x. <outer x> would misprint without freshening
        let t = Term::lam("x", Term::lam("x", Term::Bound(1)));
        assert_eq!(t.to_string(), r"\x x'. x");
        let sig = Signature::pure();
        assert_eq!(parse_term(&t.to_string(), &sig).unwrap(), t);
    }

    #[test]
    fn respects_precedence_when_printing() {
        let sig = Signature::prob();
        let t = parse_term(r"(a (+) b) c", &sig).unwrap();
        assert_eq!(t.to_string(), "(a (+) b) c");
        let t = parse_term(r"a ((\x.x) (+) b)", &sig).unwrap();
        assert_eq!(t.to_string(), r"a ((\x. x) (+) b)");
    }
}
