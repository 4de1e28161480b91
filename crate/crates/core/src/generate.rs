//! Term corpora: seeded random generation and exhaustive enumeration.
//!
//! Random generation is deterministic in the seed. Enumeration produces every
//! term up to a size bound exactly once modulo renaming of binders (the
//! nameless representation makes each alpha-class canonical).

use std::collections::HashMap;
use std::rc::Rc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::term::{OpSym, Signature, Term};

const HINTS: [&str; 8] = ["x", "y", "z", "w", "u", "v", "s", "t"];

fn hint(depth: usize) -> String {
    let base = HINTS[depth % HINTS.len()];
    if depth < HINTS.len() {
        base.to_string()
    } else {
        format!("{base}{}", depth / HINTS.len())
    }
}

/// What to generate: sizes, how many, over which signature, and which
/// variables leaves may use.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_size: usize,
    pub count: usize,
    pub seed: u64,
    pub signature: Signature,
    /// Forbid free names entirely; every generated term is closed.
    pub closed: bool,
    pub free_names: Vec<String>,
}

impl GenConfig {
    pub fn new(max_size: usize, count: usize, seed: u64, signature: Signature) -> GenConfig {
        GenConfig {
            max_size,
            count,
            seed,
            signature,
            closed: false,
            free_names: vec!["a".to_string(), "b".to_string()],
        }
    }

    /// Smallest size a subterm can have under `depth` binders: a variable
    /// when one is in scope, otherwise an identity-style binder.
    fn min_size(&self, depth: usize) -> usize {
        if depth > 0 || (!self.closed && !self.free_names.is_empty()) {
            1
        } else {
            2
        }
    }
}

fn gen_term(rng: &mut ChaCha8Rng, cfg: &GenConfig, budget: usize, depth: usize) -> Term {
    debug_assert!(budget >= cfg.min_size(depth));
    let mut pool: Vec<Term> = (0..depth).map(Term::Bound).collect();
    if !cfg.closed {
        pool.extend(cfg.free_names.iter().cloned().map(Term::Free));
    }

    #[derive(Clone, Copy)]
    enum Kind {
        Leaf,
        Lam,
        App,
        Op(usize),
    }
    let mut choices: Vec<(u32, Kind)> = Vec::new();
    if !pool.is_empty() {
        choices.push((if budget > 3 { 1 } else { 3 }, Kind::Leaf));
    }
    if budget >= 1 + cfg.min_size(depth + 1) {
        choices.push((2, Kind::Lam));
    }
    if budget >= 1 + 2 * cfg.min_size(depth) {
        choices.push((4, Kind::App));
    }
    for (i, op) in cfg.signature.ops().iter().enumerate() {
        if budget >= 1 + op.arity * cfg.min_size(depth) {
            choices.push((2, Kind::Op(i)));
        }
    }
    debug_assert!(!choices.is_empty(), "a binder always fits");

    let total: u32 = choices.iter().map(|(w, _)| w).sum();
    let mut pick = rng.gen_range(0..total);
    let kind = choices
        .iter()
        .find(|(w, _)| {
            if pick < *w {
                true
            } else {
                pick -= w;
                false
            }
        })
        .unwrap()
        .1;

    match kind {
        Kind::Leaf => pool[rng.gen_range(0..pool.len())].clone(),
        Kind::Lam => {
            let body = gen_term(rng, cfg, budget - 1, depth + 1);
            Term::Lam(hint(depth), Box::new(body))
        }
        Kind::App => {
            let min = cfg.min_size(depth);
            let rest = budget - 1;
            let left = rng.gen_range(min..=rest - min);
            let fun = gen_term(rng, cfg, left, depth);
            let arg = gen_term(rng, cfg, rest - left, depth);
            Term::App(Box::new(fun), Box::new(arg))
        }
        Kind::Op(i) => {
            let op: OpSym = cfg.signature.ops()[i].clone();
            let min = cfg.min_size(depth);
            let rest = budget - 1;
            let args = match op.arity {
                1 => vec![gen_term(rng, cfg, rest, depth)],
                2 => {
                    let left = rng.gen_range(min..=rest - min);
                    vec![
                        gen_term(rng, cfg, left, depth),
                        gen_term(rng, cfg, rest - left, depth),
                    ]
                }
                n => (0..n).map(|_| gen_term(rng, cfg, rest / n, depth)).collect(),
            };
            Term::Op(op, args)
        }
    }
}

/// Generates `count` distinct terms, deterministically in the seed.
pub fn generate_terms(cfg: &GenConfig) -> Vec<Term> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    let budget_floor = cfg.min_size(0).max(2);
    let mut attempts = 0;
    while out.len() < cfg.count && attempts < cfg.count.saturating_mul(50) + 100 {
        attempts += 1;
        let budget = rng.gen_range(budget_floor..=cfg.max_size.max(budget_floor));
        let t = gen_term(&mut rng, cfg, budget, 0);
        debug_assert!(t.size() <= cfg.max_size.max(budget_floor));
        debug_assert!(!cfg.closed || t.is_closed());
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out
}

/// Every pure term (no operators) of size at most `max_size`, using free
/// names from `pool`, each alpha-class exactly once.
pub fn enumerate_pure(max_size: usize, pool: &[&str]) -> Vec<Term> {
    type Memo = HashMap<(usize, usize), Rc<Vec<Term>>>;

    fn of_size(n: usize, depth: usize, pool: &[&str], memo: &mut Memo) -> Rc<Vec<Term>> {
        if let Some(hit) = memo.get(&(n, depth)) {
            return hit.clone();
        }
        let mut out = Vec::new();
        if n == 1 {
            out.extend((0..depth).map(Term::Bound));
            out.extend(pool.iter().map(|s| Term::Free(s.to_string())));
        } else if n >= 2 {
            for body in of_size(n - 1, depth + 1, pool, memo).iter() {
                out.push(Term::Lam(hint(depth), Box::new(body.clone())));
            }
            for k in 1..=n.saturating_sub(2) {
                let funs = of_size(k, depth, pool, memo);
                let args = of_size(n - 1 - k, depth, pool, memo);
                for f in funs.iter() {
                    for a in args.iter() {
                        out.push(Term::App(Box::new(f.clone()), Box::new(a.clone())));
                    }
                }
            }
        }
        let rc = Rc::new(out);
        memo.insert((n, depth), rc.clone());
        rc
    }

    let mut memo = Memo::new();
    (1..=max_size)
        .flat_map(|n| of_size(n, 0, pool, &mut memo).iter().cloned().collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts_match_hand_counts() {
        // with one free name: sizes 1, 2, 3 have 1, 2, 4 terms
        let pool = ["z"];
        let by_size: Vec<usize> = (1..=3)
            .map(|n| {
                enumerate_pure(n, &pool).len()
                    - if n > 1 { enumerate_pure(n - 1, &pool).len() } else { 0 }
            })
            .collect();
        assert_eq!(by_size, vec![1, 2, 4]);
        // closed terms: none of size 1, one of size 2, two of size 3, four of size 4
        let closed: Vec<usize> = (1..=4).map(|n| enumerate_pure(n, &[]).len()).collect();
        assert_eq!(closed, vec![0, 1, 3, 7]);
    }

    #[test]
    fn enumeration_has_no_duplicates() {
        let all = enumerate_pure(7, &["z"]);
        let set: std::collections::HashSet<&Term> = all.iter().collect();
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(|t| t.size() <= 7));
    }

    #[test]
    fn generation_is_deterministic_in_the_seed() {
        let cfg = GenConfig::new(12, 40, 9, Signature::prob());
        let a = generate_terms(&cfg);
        let b = generate_terms(&cfg);
        assert_eq!(a, b);
        let other = GenConfig { seed: 10, ..cfg.clone() };
        assert_ne!(a, generate_terms(&other));
    }

    #[test]
    fn generation_respects_size_signature_and_closure() {
        let mut cfg = GenConfig::new(10, 60, 3, Signature::payoff());
        cfg.closed = true;
        let terms = generate_terms(&cfg);
        assert!(!terms.is_empty());
        for t in &terms {
            assert!(t.size() <= 10);
            assert!(t.is_closed());
            assert!(t.free_names().is_empty());
        }
    }
}
