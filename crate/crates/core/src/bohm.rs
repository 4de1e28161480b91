//! Partial normal forms and infinite normal-form approximation.
//!
//! A partial normal form prunes a term to its stable outer structure: head
//! normal parts survive as `\x1...xn. h a1 ... ap` nodes, everything not yet
//! in head normal form (including operator applications) collapses to the
//! bottom element `_|_`. Iterating the head parallel development yields a
//! monotone chain of partial normal forms whose sup is the term's infinite
//! normal form — finite exactly when the chain stabilizes without bottoms.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::Serialize;

use crate::error::StepError;
use crate::qars::{Observation, ObsValue, Qars};
use crate::strategy::{parallel_step, UnbiasedSpec};
use crate::term::Term;

/// A head variable: either a reference to one of the node's (or an outer
/// node's) binders, or a free name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PnfVar {
    Bound(usize),
    Free(String),
}

/// A partial normal form. Binder hints are kept for printing but ignored by
/// equality, hashing and ordering, exactly as for terms.
#[derive(Debug, Clone)]
pub enum PartialNf {
    Omega,
    Node {
        binders: Vec<String>,
        head: PnfVar,
        args: Vec<PartialNf>,
    },
}

impl PartialEq for PartialNf {
    fn eq(&self, other: &PartialNf) -> bool {
        match (self, other) {
            (PartialNf::Omega, PartialNf::Omega) => true,
            (
                PartialNf::Node { binders: b1, head: h1, args: a1 },
                PartialNf::Node { binders: b2, head: h2, args: a2 },
            ) => b1.len() == b2.len() && h1 == h2 && a1 == a2,
            _ => false,
        }
    }
}

impl Eq for PartialNf {}

impl Hash for PartialNf {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            PartialNf::Omega => 0u8.hash(state),
            PartialNf::Node { binders, head, args } => {
                1u8.hash(state);
                binders.len().hash(state);
                head.hash(state);
                args.hash(state);
            }
        }
    }
}

impl PartialOrd for PartialNf {
    fn partial_cmp(&self, other: &PartialNf) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PartialNf {
    fn cmp(&self, other: &PartialNf) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (PartialNf::Omega, PartialNf::Omega) => Ordering::Equal,
            (PartialNf::Omega, PartialNf::Node { .. }) => Ordering::Less,
            (PartialNf::Node { .. }, PartialNf::Omega) => Ordering::Greater,
            (
                PartialNf::Node { binders: b1, head: h1, args: a1 },
                PartialNf::Node { binders: b2, head: h2, args: a2 },
            ) => b1
                .len()
                .cmp(&b2.len())
                .then_with(|| h1.cmp(h2))
                .then_with(|| a1.cmp(a2)),
        }
    }
}

impl PartialNf {
    /// True when no bottom occurs anywhere: the value is a finite normal
    /// form and maximal in the approximation order.
    pub fn is_total(&self) -> bool {
        match self {
            PartialNf::Omega => false,
            PartialNf::Node { args, .. } => args.iter().all(PartialNf::is_total),
        }
    }

    pub fn omega_count(&self) -> usize {
        match self {
            PartialNf::Omega => 1,
            PartialNf::Node { args, .. } => args.iter().map(PartialNf::omega_count).sum(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PartialNf::Omega => 0,
            PartialNf::Node { args, .. } => {
                1 + args.iter().map(PartialNf::depth).max().unwrap_or(0)
            }
        }
    }

    /// A term rendering the partial normal form, with bottoms as the free
    /// placeholder `_|_` (not a parseable identifier, so it cannot clash).
    fn to_term(&self) -> Term {
        match self {
            PartialNf::Omega => Term::Free("_|_".to_string()),
            PartialNf::Node { binders, head, args } => {
                let h = match head {
                    PnfVar::Bound(i) => Term::Bound(*i),
                    PnfVar::Free(n) => Term::Free(n.clone()),
                };
                let spine = args
                    .iter()
                    .fold(h, |f, a| Term::App(Box::new(f), Box::new(a.to_term())));
                binders
                    .iter()
                    .rev()
                    .fold(spine, |b, hint| Term::Lam(hint.clone(), Box::new(b)))
            }
        }
    }

    /// The JSON view, with binder hints freshened the same way printing
    /// freshens them.
    pub fn to_tree(&self) -> PnfTree {
        fn free_names(p: &PartialNf, out: &mut std::collections::BTreeSet<String>) {
            if let PartialNf::Node { head, args, .. } = p {
                if let PnfVar::Free(n) = head {
                    out.insert(n.clone());
                }
                args.iter().for_each(|a| free_names(a, out));
            }
        }
        fn fresh(hint: &str, used: &std::collections::BTreeSet<String>) -> String {
            if !used.contains(hint) {
                return hint.to_string();
            }
            let primed = format!("{hint}'");
            if !used.contains(&primed) {
                return primed;
            }
            let doubled = format!("{hint}''");
            if !used.contains(&doubled) {
                return doubled;
            }
            (3..)
                .map(|k| format!("{hint}{k}"))
                .find(|c| !used.contains(c))
                .unwrap()
        }
        fn go(p: &PartialNf, env: &mut Vec<String>) -> PnfTree {
            match p {
                PartialNf::Omega => PnfTree::Omega,
                PartialNf::Node { binders, head, args } => {
                    let mut used: std::collections::BTreeSet<String> =
                        env.iter().cloned().collect();
                    free_names(p, &mut used);
                    let depth0 = env.len();
                    let mut names = Vec::with_capacity(binders.len());
                    for hint in binders {
                        let n = fresh(hint, &used);
                        used.insert(n.clone());
                        env.push(n.clone());
                        names.push(n);
                    }
                    let head_name = match head {
                        PnfVar::Free(n) => n.clone(),
                        PnfVar::Bound(i) => env
                            .get(env.len().wrapping_sub(1 + i))
                            .cloned()
                            .unwrap_or_else(|| format!("#{i}")),
                    };
                    let args = args.iter().map(|a| go(a, env)).collect();
                    env.truncate(depth0);
                    PnfTree::Node { binders: names, head: head_name, args }
                }
            }
        }
        go(self, &mut Vec::new())
    }
}

impl fmt::Display for PartialNf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_term(), f)
    }
}

/// Serializable tree view of a partial normal form.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PnfTree {
    Omega,
    Node {
        binders: Vec<String>,
        head: String,
        args: Vec<PnfTree>,
    },
}

/// Prunes a term to its partial normal form: strip the leading binders, and
/// if what remains is a variable applied to arguments, keep that node and
/// recurse into the arguments; anything else — a beta redex at the head, or
/// an operator — is not yet head normal and collapses to bottom.
pub fn pnf_of(t: &Term) -> PartialNf {
    let mut binders = Vec::new();
    let mut cur = t;
    while let Term::Lam(hint, body) = cur {
        binders.push(hint.clone());
        cur = body;
    }
    let mut rev_args = Vec::new();
    while let Term::App(fun, arg) = cur {
        rev_args.push(arg.as_ref());
        cur = fun;
    }
    let head = match cur {
        Term::Bound(i) => PnfVar::Bound(*i),
        Term::Free(n) => PnfVar::Free(n.clone()),
        Term::Lam(..) | Term::Op(..) => return PartialNf::Omega,
        Term::App(..) => unreachable!("spine walk consumed applications"),
    };
    let args = rev_args.into_iter().rev().map(pnf_of).collect();
    PartialNf::Node { binders, head, args }
}

/// The approximation order: bottom below everything, nodes compatible when
/// binder count, head and arity agree and arguments compare pointwise.
pub fn pnf_leq(a: &PartialNf, b: &PartialNf) -> bool {
    match (a, b) {
        (PartialNf::Omega, _) => true,
        (PartialNf::Node { .. }, PartialNf::Omega) => false,
        (
            PartialNf::Node { binders: b1, head: h1, args: a1 },
            PartialNf::Node { binders: b2, head: h2, args: a2 },
        ) => {
            b1.len() == b2.len()
                && h1 == h2
                && a1.len() == a2.len()
                && a1.iter().zip(a2).all(|(x, y)| pnf_leq(x, y))
        }
    }
}

/// Least upper bound in the approximation order, when the shapes are
/// compatible.
pub fn pnf_join(a: &PartialNf, b: &PartialNf) -> Option<PartialNf> {
    match (a, b) {
        (PartialNf::Omega, x) | (x, PartialNf::Omega) => Some(x.clone()),
        (
            PartialNf::Node { binders: b1, head: h1, args: a1 },
            PartialNf::Node { binders: b2, head: h2, args: a2 },
        ) => {
            if b1.len() != b2.len() || h1 != h2 || a1.len() != a2.len() {
                return None;
            }
            let args: Option<Vec<PartialNf>> =
                a1.iter().zip(a2).map(|(x, y)| pnf_join(x, y)).collect();
            Some(PartialNf::Node { binders: b1.clone(), head: h1.clone(), args: args? })
        }
    }
}

/// The pruning observation into the partial-normal-form cpo.
pub fn pnf_observation() -> Observation<Term> {
    Observation::new("pnf", |t: &Term| ObsValue::Pnf(pnf_of(t)))
}

/// One chain of partial normal forms obtained by iterating the head
/// parallel development.
#[derive(Debug, Clone, Serialize)]
pub struct BtApprox {
    pub start: String,
    pub depth: usize,
    pub approximants: Vec<PnfTree>,
    pub rendered: Vec<String>,
    /// The chain stabilized before the depth bound.
    pub stabilized: bool,
    #[serde(skip)]
    pub chain: Vec<PartialNf>,
    #[serde(skip)]
    pub terms: Vec<Term>,
}

/// Develops `t` for up to `depth` rounds and prunes every stage. The chain
/// is monotone by construction; this is asserted, not assumed.
pub fn bt_chain(t: &Term, depth: usize) -> Result<BtApprox, StepError> {
    let spec = UnbiasedSpec::cbn();
    let mut terms = vec![t.clone()];
    let mut chain = vec![pnf_of(t)];
    let mut stabilized = false;
    for _ in 0..depth {
        let cur = terms.last().unwrap();
        let (next, fired) = parallel_step(cur, &spec)?;
        if fired.is_empty() {
            stabilized = true;
            break;
        }
        let p = pnf_of(&next);
        assert!(
            pnf_leq(chain.last().unwrap(), &p),
            "development chain must be monotone: {} then {}",
            chain.last().unwrap(),
            p
        );
        terms.push(next);
        chain.push(p);
    }
    Ok(BtApprox {
        start: t.to_string(),
        depth,
        approximants: chain.iter().map(PartialNf::to_tree).collect(),
        rendered: chain.iter().map(|p| p.to_string()).collect(),
        stabilized,
        chain,
        terms,
    })
}

/// The head parallel development as a deterministic rewrite system on terms.
#[derive(Debug, Clone, Copy, Default)]
pub struct TreeSystem;

impl Qars for TreeSystem {
    type State = Term;

    fn name(&self) -> String {
        "head-parallel".to_string()
    }

    fn successors(&self, s: &Term) -> Result<Vec<Term>, StepError> {
        let (u, fired) = parallel_step(s, &UnbiasedSpec::cbn())?;
        Ok(if fired.is_empty() { vec![] } else { vec![u] })
    }

    fn render(&self, s: &Term) -> String {
        s.to_string()
    }

    fn size(&self, s: &Term) -> usize {
        s.size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_term, Signature};

    fn t(src: &str) -> Term {
        parse_term(src, &Signature::prob()).unwrap()
    }

    fn node(binders: &[&str], head: PnfVar, args: Vec<PartialNf>) -> PartialNf {
        PartialNf::Node {
            binders: binders.iter().map(|s| s.to_string()).collect(),
            head,
            args,
        }
    }

    #[test]
    fn head_normal_terms_keep_their_spine() {
        let p = pnf_of(&t("\\x.x ((\\y.y) (\\y.y)) z"));
        let expect = node(
            &["x"],
            PnfVar::Bound(0),
            vec![PartialNf::Omega, node(&[], PnfVar::Free("z".into()), vec![])],
        );
        assert_eq!(p, expect);
        assert!(!p.is_total());
        assert_eq!(p.omega_count(), 1);
    }

    #[test]
    fn redexes_and_operators_prune_to_bottom() {
        assert_eq!(pnf_of(&t("(\\x.x x) (\\x.x x)")), PartialNf::Omega);
        assert_eq!(pnf_of(&t("y (+) z")), PartialNf::Omega);
        // a body that is not a variable spine makes the whole term bottom
        assert_eq!(pnf_of(&t("\\x.y (+) z")), PartialNf::Omega);
    }

    #[test]
    fn pruning_ignores_binder_hints() {
        assert_eq!(pnf_of(&t("\\x.x")), pnf_of(&t("\\y.y")));
        assert!(pnf_of(&t("\\x.x")).is_total());
    }

    #[test]
    fn approximation_order_grows_by_filling_bottoms() {
        let a = node(&[], PnfVar::Free("z".into()), vec![PartialNf::Omega]);
        let b = node(
            &[],
            PnfVar::Free("z".into()),
            vec![node(&[], PnfVar::Free("z".into()), vec![PartialNf::Omega])],
        );
        assert!(pnf_leq(&PartialNf::Omega, &a));
        assert!(pnf_leq(&a, &b));
        assert!(!pnf_leq(&b, &a));
        assert_eq!(pnf_join(&a, &b), Some(b.clone()));
        let c = node(&[], PnfVar::Free("w".into()), vec![]);
        assert_eq!(pnf_join(&b, &c), None);
    }

    #[test]
    fn growing_spine_produces_the_expected_chain() {
        // \x.z (x x) applied to itself unfolds to z (z (z ...))
        let m = t("(\\x.z (x x)) (\\x.z (x x))");
        let bt = bt_chain(&m, 3).unwrap();
        assert_eq!(
            bt.rendered,
            vec!["_|_", "z _|_", "z (z _|_)", "z (z (z _|_))"]
        );
        assert!(!bt.stabilized);
    }

    #[test]
    fn chains_stabilize_on_normalizing_terms() {
        let m = t("(\\x.\\y.y x) ((\\u.u) z)");
        let bt = bt_chain(&m, 10).unwrap();
        assert!(bt.stabilized);
        let last = bt.chain.last().unwrap();
        assert!(last.is_total());
        assert_eq!(last.to_string(), "\\y. y z");
    }

    #[test]
    fn display_freshens_binder_hints() {
        // the binder hint collides with a free name below it
        let p = node(
            &["z"],
            PnfVar::Bound(0),
            vec![node(&[], PnfVar::Free("z".into()), vec![])],
        );
        assert_eq!(p.to_string(), "\\z'. z' z");
    }

    #[test]
    fn json_tree_resolves_head_names() {
        let p = pnf_of(&t("\\x.x y"));
        let tree = p.to_tree();
        let json = serde_json::to_string(&tree).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"node","binders":["x"],"head":"x","args":[{"kind":"node","binders":[],"head":"y","args":[]}]}"#
        );
    }
}
