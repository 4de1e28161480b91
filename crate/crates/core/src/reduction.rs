//! Root rules and their closure under a configurable class of contexts.
//!
//! A calculus is a list of (rule, context-class) pairs. One generic walker
//! enumerates redex positions for any such pair, in leftmost-outermost
//! order, so every relation in the crate (full, weak, head, left, right,
//! and the composites built on top) shares a single traversal.

use serde::Serialize;

use crate::error::StepError;
use crate::rat::{half, Rat};
use crate::term::{Dir, Position, Term};

/// Root rewrite rules.
///
/// `Beta` contracts `(\x.M) N` for any argument; `BetaV` only when the
/// argument is a value. `Oplus` splits a fair choice, `Tick` and `Print`
/// strip their operator and emit an effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RuleKind {
    Beta,
    BetaV,
    Oplus,
    Tick,
    Print,
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::Beta => "beta",
            RuleKind::BetaV => "betav",
            RuleKind::Oplus => "oplus",
            RuleKind::Tick => "tick",
            RuleKind::Print => "print",
        }
    }

    /// Does the rule fire at the root of `t`?
    pub fn matches_root(&self, t: &Term) -> bool {
        match self {
            RuleKind::Beta => matches!(t, Term::App(f, _) if matches!(**f, Term::Lam(_, _))),
            RuleKind::BetaV => matches!(
                t,
                Term::App(f, a) if matches!(**f, Term::Lam(_, _)) && a.is_value()
            ),
            RuleKind::Oplus => matches!(t, Term::Op(sym, _) if sym.is_oplus()),
            RuleKind::Tick => matches!(t, Term::Op(sym, _) if sym.is_tick()),
            RuleKind::Print => {
                matches!(t, Term::Op(sym, _) if sym.print_char().is_some())
            }
        }
    }
}

/// Grammar of admissible contexts, as a predicate on single descent steps.
///
/// * `Full` — anywhere.
/// * `Weak` — only through applications; never under a binder or into an
///   operator argument.
/// * `Head` — through binders and function parts (the non-deterministic
///   head contexts; restricting to the leftmost redex recovers the classical
///   head step).
/// * `Left` — function parts freely, argument parts only once the function
///   part is a value.
/// * `Right` — argument parts freely, function parts only once the argument
///   part is a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ContextClass {
    Full,
    Weak,
    Head,
    Left,
    Right,
}

impl ContextClass {
    pub fn name(&self) -> &'static str {
        match self {
            ContextClass::Full => "full",
            ContextClass::Weak => "weak",
            ContextClass::Head => "head",
            ContextClass::Left => "left",
            ContextClass::Right => "right",
        }
    }

    /// May a context of this class descend from `parent` in direction `dir`?
    pub fn allows(&self, parent: &Term, dir: Dir) -> bool {
        match self {
            ContextClass::Full => true,
            ContextClass::Weak => matches!(dir, Dir::AppFun | Dir::AppArg),
            ContextClass::Head => matches!(dir, Dir::AppFun | Dir::LamBody),
            ContextClass::Left => match (parent, dir) {
                (Term::App(_, _), Dir::AppFun) => true,
                (Term::App(f, _), Dir::AppArg) => f.is_value(),
                _ => false,
            },
            ContextClass::Right => match (parent, dir) {
                (Term::App(_, _), Dir::AppArg) => true,
                (Term::App(_, a), Dir::AppFun) => a.is_value(),
                _ => false,
            },
        }
    }
}

/// A redex occurrence: a rule plus the position where it fires.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Redex {
    pub pos: Position,
    pub rule: RuleKind,
}

impl Redex {
    pub fn describe(&self) -> String {
        format!("{}@{}", self.rule.name(), self.pos)
    }
}

/// Side effect emitted by a `Tick` or `Print` contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Tick,
    Print(char),
}

/// Result of firing a single redex.
///
/// Deterministic rules rewrite to one term; `Oplus` splits into two
/// half-weighted branches (weights always sum to one); the effect rules
/// rewrite to one term and emit their effect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepResult {
    One(Term),
    Split(Vec<(Rat, Term)>),
    Emit(Effect, Term),
}

impl StepResult {
    /// The plain term of a deterministic step; panics on a split.
    pub fn into_one(self) -> Term {
        match self {
            StepResult::One(t) | StepResult::Emit(_, t) => t,
            StepResult::Split(_) => panic!("choice step where a deterministic one was expected"),
        }
    }
}

fn collect(
    t: &Term,
    whole: &Term,
    rule: RuleKind,
    class: ContextClass,
    pos: &mut Vec<Dir>,
    out: &mut Vec<Redex>,
) {
    if rule.matches_root(t) {
        out.push(Redex { pos: Position(pos.clone()), rule });
    }
    for (dir, child) in t.children() {
        if class.allows(t, dir) {
            pos.push(dir);
            collect(child, whole, rule, class, pos, out);
            pos.pop();
        }
    }
}

/// All positions where `rule` fires inside a `class` context, in
/// leftmost-outermost order.
pub fn redexes(t: &Term, rule: RuleKind, class: ContextClass) -> Vec<Redex> {
    let mut out = Vec::new();
    collect(t, t, rule, class, &mut Vec::new(), &mut out);
    out
}

/// Union of redexes over several (rule, class) pairs, leftmost-outermost.
pub fn redexes_multi(t: &Term, pairs: &[(RuleKind, ContextClass)]) -> Vec<Redex> {
    let mut out = Vec::new();
    for &(rule, class) in pairs {
        out.extend(redexes(t, rule, class));
    }
    out.sort();
    out.dedup();
    out
}

/// Fires one redex. The split of `Oplus` carries the surrounding context
/// into both branches: `C[M (+) N]` rewrites to `[1/2 C[M], 1/2 C[N]]`.
pub fn step(t: &Term, redex: &Redex) -> Result<StepResult, StepError> {
    let stale = |detail: &str| StepError::StaleRedex {
        pos: redex.pos.to_string(),
        detail: detail.to_string(),
    };
    let sub = t
        .subterm_at(&redex.pos)
        .map_err(|_| stale("position no longer exists"))?;
    if !redex.rule.matches_root(sub) {
        return Err(stale(&format!("`{sub}` is not a {} redex", redex.rule.name())));
    }
    match redex.rule {
        RuleKind::Beta | RuleKind::BetaV => {
            let Term::App(f, a) = sub else { unreachable!() };
            let Term::Lam(_, body) = &**f else { unreachable!() };
            let contracted = body.open(a);
            Ok(StepResult::One(t.replace_at(&redex.pos, contracted).unwrap()))
        }
        RuleKind::Oplus => {
            let Term::Op(_, args) = sub else { unreachable!() };
            let left = t.replace_at(&redex.pos, args[0].clone()).unwrap();
            let right = t.replace_at(&redex.pos, args[1].clone()).unwrap();
            Ok(StepResult::Split(vec![(half(), left), (half(), right)]))
        }
        RuleKind::Tick => {
            let Term::Op(_, args) = sub else { unreachable!() };
            let stripped = t.replace_at(&redex.pos, args[0].clone()).unwrap();
            Ok(StepResult::Emit(Effect::Tick, stripped))
        }
        RuleKind::Print => {
            let Term::Op(sym, args) = sub else { unreachable!() };
            let c = sym.print_char().unwrap();
            let stripped = t.replace_at(&redex.pos, args[0].clone()).unwrap();
            Ok(StepResult::Emit(Effect::Print(c), stripped))
        }
    }
}

/// No redex of any configured pair fires.
pub fn is_normal(t: &Term, pairs: &[(RuleKind, ContextClass)]) -> bool {
    pairs
        .iter()
        .all(|&(rule, class)| redexes(t, rule, class).is_empty())
}

/// Firing a redex under a non-empty context leaves the root constructor of
/// the term untouched. Returns whether that holds for this (term, redex)
/// pair; reduction under non-root positions always preserves shape.
pub fn shape_preserved(t: &Term, redex: &Redex) -> Result<bool, StepError> {
    fn same_shape(a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Bound(_), Term::Bound(_)) => true,
            (Term::Free(_), Term::Free(_)) => true,
            (Term::Lam(_, _), Term::Lam(_, _)) => true,
            (Term::App(_, _), Term::App(_, _)) => true,
            (Term::Op(s, _), Term::Op(u, _)) => s == u,
            _ => false,
        }
    }
    if redex.pos.is_root() {
        return Ok(false);
    }
    let after = step(t, redex)?;
    Ok(match after {
        StepResult::One(u) | StepResult::Emit(_, u) => same_shape(t, &u),
        StepResult::Split(branches) => branches.iter().all(|(_, u)| same_shape(t, u)),
    })
}
