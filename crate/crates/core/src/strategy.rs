//! Reduction strategies over pure terms.
//!
//! The centrepiece is the unbiased strategy: fire a surface redex when one
//! exists, otherwise descend into *every* child (including operator
//! arguments), so no reducible position is starved. Its complement inside the
//! full relation — the internal steps — never creates or destroys surface
//! normal forms, which is what makes surface-first factorization possible.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::StepError;
use crate::qars::{CheckReport, Qars, Violation};
use crate::reduction::{is_normal, redexes, step, ContextClass, Redex, RuleKind};
use crate::term::{Position, Term};

/// How a run resolves non-determinism among candidate redexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Leftmost,
    Rightmost,
    Random(u64),
    /// Keep all candidates; only meaningful for successor enumeration.
    All,
}

impl Mode {
    pub fn name(&self) -> String {
        match self {
            Mode::Leftmost => "leftmost".to_string(),
            Mode::Rightmost => "rightmost".to_string(),
            Mode::Random(seed) => format!("random({seed})"),
            Mode::All => "all".to_string(),
        }
    }
}

/// The beta rule of a calculus together with its surface contexts.
///
/// `Beta` (call-by-name) pairs with `Head`; `BetaV` (call-by-value) pairs
/// with `Weak`, `Left` or `Right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnbiasedSpec {
    pub rule: RuleKind,
    pub surface: ContextClass,
}

impl UnbiasedSpec {
    pub fn new(rule: RuleKind, surface: ContextClass) -> Result<UnbiasedSpec, StepError> {
        let ok = match rule {
            RuleKind::Beta => matches!(surface, ContextClass::Head),
            RuleKind::BetaV => matches!(
                surface,
                ContextClass::Weak | ContextClass::Left | ContextClass::Right
            ),
            _ => false,
        };
        if ok {
            Ok(UnbiasedSpec { rule, surface })
        } else {
            Err(StepError::Config(format!(
                "{} has no {} surface",
                rule.name(),
                surface.name()
            )))
        }
    }

    pub fn cbn() -> UnbiasedSpec {
        UnbiasedSpec { rule: RuleKind::Beta, surface: ContextClass::Head }
    }

    pub fn cbv() -> UnbiasedSpec {
        UnbiasedSpec { rule: RuleKind::BetaV, surface: ContextClass::Weak }
    }
}

/// True when the term has no surface redex.
pub fn is_surface_normal(t: &Term, spec: &UnbiasedSpec) -> bool {
    redexes(t, spec.rule, spec.surface).is_empty()
}

/// Redexes of the unbiased strategy: the surface redexes when there are any,
/// otherwise the union of the strategy's redexes of all children. Empty
/// exactly on full normal forms.
pub fn unbiased_redexes(t: &Term, spec: &UnbiasedSpec) -> Vec<Redex> {
    let surface = redexes(t, spec.rule, spec.surface);
    if !surface.is_empty() {
        return surface;
    }
    let mut out = Vec::new();
    for (dir, child) in t.children() {
        for r in unbiased_redexes(child, spec) {
            let mut dirs = vec![dir];
            dirs.extend(r.pos.0);
            out.push(Redex { pos: Position(dirs), rule: r.rule });
        }
    }
    out
}

/// Full-relation redexes that the unbiased strategy does not select in the
/// current term.
pub fn internal_redexes(t: &Term, spec: &UnbiasedSpec) -> Vec<Redex> {
    let chosen: HashSet<Redex> = unbiased_redexes(t, spec).into_iter().collect();
    redexes(t, spec.rule, ContextClass::Full)
        .into_iter()
        .filter(|r| !chosen.contains(r))
        .collect()
}

fn fire(t: &Term, r: &Redex) -> Result<Term, StepError> {
    Ok(step(t, r)?.into_one())
}

/// All one-step results of the unbiased strategy, deduplicated, in leftmost
/// redex order.
pub fn unbiased_successors(t: &Term, spec: &UnbiasedSpec) -> Result<Vec<Term>, StepError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in unbiased_redexes(t, spec) {
        let u = fire(t, &r)?;
        if seen.insert(u.clone()) {
            out.push(u);
        }
    }
    Ok(out)
}

/// One parallel development: contract the leftmost surface redex if the term
/// has one; return the term unchanged if it is a normal form; otherwise
/// develop every child in parallel. Returns the result together with the
/// redexes contracted, in leftmost order.
pub fn parallel_step(t: &Term, spec: &UnbiasedSpec) -> Result<(Term, Vec<Redex>), StepError> {
    let surface = redexes(t, spec.rule, spec.surface);
    if let Some(r) = surface.first() {
        return Ok((fire(t, r)?, vec![r.clone()]));
    }
    if is_normal(t, &[(spec.rule, ContextClass::Full)]) {
        return Ok((t.clone(), vec![]));
    }
    let mut fired = Vec::new();
    let rebuilt = match t {
        Term::Bound(_) | Term::Free(_) => t.clone(),
        Term::Lam(hint, body) => {
            let (b, rs) = parallel_step(body, spec)?;
            extend_under(&mut fired, t, 0, rs);
            Term::Lam(hint.clone(), Box::new(b))
        }
        Term::App(fun, arg) => {
            let (f, rf) = parallel_step(fun, spec)?;
            let (a, ra) = parallel_step(arg, spec)?;
            extend_under(&mut fired, t, 0, rf);
            extend_under(&mut fired, t, 1, ra);
            Term::App(Box::new(f), Box::new(a))
        }
        Term::Op(op, args) => {
            let mut developed = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                let (d, rs) = parallel_step(a, spec)?;
                extend_under(&mut fired, t, i, rs);
                developed.push(d);
            }
            Term::Op(op.clone(), developed)
        }
    };
    Ok((rebuilt, fired))
}

fn extend_under(fired: &mut Vec<Redex>, parent: &Term, child_index: usize, rs: Vec<Redex>) {
    let dir = parent.children()[child_index].0;
    for r in rs {
        let mut dirs = vec![dir];
        dirs.extend(r.pos.0);
        fired.push(Redex { pos: Position(dirs), rule: r.rule });
    }
}

/// Which one-step relation a run or a successor enumeration exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PureRelation {
    /// The rule in full contexts.
    Full,
    /// The rule restricted to one context class.
    Class(ContextClass),
    /// The unbiased strategy.
    Unbiased,
    /// One full parallel development per step (deterministic, total).
    Parallel,
    /// Full-relation steps the unbiased strategy does not take.
    Internal,
}

impl PureRelation {
    pub fn name(&self) -> String {
        match self {
            PureRelation::Full => "full".to_string(),
            PureRelation::Class(c) => c.name().to_string(),
            PureRelation::Unbiased => "unbiased".to_string(),
            PureRelation::Parallel => "parallel".to_string(),
            PureRelation::Internal => "internal".to_string(),
        }
    }

    pub fn candidates(&self, t: &Term, spec: &UnbiasedSpec) -> Vec<Redex> {
        match self {
            PureRelation::Full => redexes(t, spec.rule, ContextClass::Full),
            PureRelation::Class(c) => redexes(t, spec.rule, *c),
            PureRelation::Unbiased => unbiased_redexes(t, spec),
            PureRelation::Internal => internal_redexes(t, spec),
            PureRelation::Parallel => {
                unreachable!("parallel steps are not redex-driven")
            }
        }
    }
}

/// One recorded step of a pure-term run.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub fired: Vec<String>,
    pub term: String,
}

/// A fuel-bounded run of a pure relation under a policy.
#[derive(Debug, Clone, Serialize)]
pub struct Trace {
    pub relation: String,
    pub mode: String,
    pub start: String,
    pub steps: Vec<TraceStep>,
    /// The run stopped because no step applies (or the development is
    /// stationary), not because fuel ran out.
    pub terminated: bool,
    pub fuel_exhausted: bool,
    #[serde(skip)]
    pub final_term: Term,
    #[serde(skip)]
    pub step_terms: Vec<Term>,
}

/// Runs `relation` from `t0` for at most `fuel` steps under `mode`.
pub fn run(
    t0: &Term,
    spec: &UnbiasedSpec,
    relation: PureRelation,
    mode: Mode,
    fuel: usize,
) -> Result<Trace, StepError> {
    let mut rng = match mode {
        Mode::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        Mode::All => {
            return Err(StepError::Config(
                "mode 'all' enumerates successors and cannot drive a single run".to_string(),
            ))
        }
        _ => None,
    };
    let mut cur = t0.clone();
    let mut steps = Vec::new();
    let mut step_terms = Vec::new();
    let mut terminated = false;
    for _ in 0..fuel {
        let (next, fired) = match relation {
            PureRelation::Parallel => {
                let (next, rs) = parallel_step(&cur, spec)?;
                if rs.is_empty() {
                    terminated = true;
                    break;
                }
                (next, rs)
            }
            _ => {
                let candidates = relation.candidates(&cur, spec);
                if candidates.is_empty() {
                    terminated = true;
                    break;
                }
                let r = match &mut rng {
                    Some(rng) => candidates.choose(rng).unwrap(),
                    None if mode == Mode::Rightmost => candidates.last().unwrap(),
                    None => candidates.first().unwrap(),
                };
                (fire(&cur, r)?, vec![r.clone()])
            }
        };
        steps.push(TraceStep {
            fired: fired.iter().map(Redex::describe).collect(),
            term: next.to_string(),
        });
        step_terms.push(next.clone());
        cur = next;
    }
    let fuel_exhausted = !terminated && steps.len() == fuel;
    Ok(Trace {
        relation: relation.name(),
        mode: mode.name(),
        start: t0.to_string(),
        steps,
        terminated,
        fuel_exhausted,
        final_term: cur,
        step_terms,
    })
}

/// A pure-term rewrite system: a relation plus a policy for enumeration.
#[derive(Debug, Clone, Copy)]
pub struct PureSystem {
    pub spec: UnbiasedSpec,
    pub relation: PureRelation,
    pub mode: Mode,
}

impl PureSystem {
    pub fn new(spec: UnbiasedSpec, relation: PureRelation, mode: Mode) -> PureSystem {
        PureSystem { spec, relation, mode }
    }
}

impl Qars for PureSystem {
    type State = Term;

    fn name(&self) -> String {
        format!("{}[{}/{}]", self.relation.name(), self.spec.rule.name(), self.mode.name())
    }

    fn successors(&self, s: &Term) -> Result<Vec<Term>, StepError> {
        if let PureRelation::Parallel = self.relation {
            let (u, _) = parallel_step(s, &self.spec)?;
            return Ok(vec![u]);
        }
        let candidates = self.relation.candidates(s, &self.spec);
        let picked: Vec<&Redex> = match self.mode {
            Mode::All => candidates.iter().collect(),
            Mode::Leftmost => candidates.first().into_iter().collect(),
            Mode::Rightmost => candidates.last().into_iter().collect(),
            Mode::Random(_) => {
                return Err(StepError::Config(
                    "random policy cannot enumerate successors deterministically".to_string(),
                ))
            }
        };
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for r in picked {
            let u = fire(s, r)?;
            if seen.insert(u.clone()) {
                out.push(u);
            }
        }
        Ok(out)
    }

    fn render(&self, s: &Term) -> String {
        s.to_string()
    }

    fn size(&self, s: &Term) -> usize {
        s.size()
    }
}

/// Checks the one-step diamond: distinct peaks close in at most one step on
/// each side.
pub fn check_rd_diamond<Q: Qars>(sys: &Q, corpus: &[Q::State]) -> Result<CheckReport, StepError> {
    let mut violations = Vec::new();
    for s in corpus {
        let succs = sys.successors(s)?;
        for i in 0..succs.len() {
            for j in (i + 1)..succs.len() {
                let (t1, t2) = (&succs[i], &succs[j]);
                if t1 == t2 {
                    continue;
                }
                let n1: HashSet<Q::State> = sys.successors(t1)?.into_iter().collect();
                if !sys.successors(t2)?.into_iter().any(|u| n1.contains(&u)) {
                    violations.push(Violation {
                        state: sys.render(s),
                        detail: format!(
                            "peak {} / {} does not join in one step",
                            sys.render(t1),
                            sys.render(t2)
                        ),
                    });
                }
            }
        }
    }
    Ok(CheckReport::new(
        &format!("rd-diamond[{}]", sys.name()),
        corpus.len(),
        violations,
        vec![],
    ))
}

/// Outcome of searching for a strategy-first rearrangement of one reachable
/// pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorOutcome {
    /// `start` reaches `target` by essential steps followed by internal ones.
    Witness { essential: usize, internal: usize },
    /// The whole essential-then-internal search space was exhausted without
    /// reaching the target.
    Refuted,
    /// A depth or size budget cut the search before exhaustion.
    Inconclusive,
}

struct Closure<S> {
    dist: HashMap<S, usize>,
    complete: bool,
}

fn bfs_closure<Q: Qars>(
    sys: &Q,
    seeds: &[(Q::State, usize)],
    bound: usize,
    budget: usize,
) -> Result<Closure<Q::State>, StepError> {
    let mut dist: HashMap<Q::State, usize> = HashMap::new();
    let mut queue: VecDeque<Q::State> = VecDeque::new();
    for (s, d) in seeds {
        if !dist.contains_key(s) {
            dist.insert(s.clone(), *d);
            queue.push_back(s.clone());
        }
    }
    let mut complete = true;
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if d >= bound {
            if !sys.successors(&s)?.is_empty() {
                complete = false;
            }
            continue;
        }
        for u in sys.successors(&s)? {
            if !dist.contains_key(&u) {
                if dist.len() >= budget {
                    complete = false;
                    continue;
                }
                dist.insert(u.clone(), d + 1);
                queue.push_back(u);
            }
        }
    }
    Ok(Closure { dist, complete })
}

/// Searches for `start -->* target` rearranged as essential steps first,
/// internal steps afterwards. `bound` limits the length of each phase and
/// `budget` the number of distinct states explored per phase.
pub fn factorization_witness<E, I>(
    essential: &E,
    internal: &I,
    start: &E::State,
    target: &E::State,
    bound: usize,
    budget: usize,
) -> Result<FactorOutcome, StepError>
where
    E: Qars,
    I: Qars<State = E::State>,
{
    let phase1 = bfs_closure(essential, &[(start.clone(), 0)], bound, budget)?;
    if let Some(d) = phase1.dist.get(target) {
        return Ok(FactorOutcome::Witness { essential: *d, internal: 0 });
    }
    // Phase two explores internal steps from every essential-reachable state,
    // carrying the (essential, internal) phase lengths along each discovery.
    let mut seeds: Vec<(E::State, usize)> = phase1.dist.into_iter().collect();
    seeds.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    let mut complete = phase1.complete;
    let mut lengths: HashMap<E::State, (usize, usize)> = HashMap::new();
    let mut queue: VecDeque<E::State> = VecDeque::new();
    for (s, d) in seeds {
        lengths.insert(s.clone(), (d, 0));
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        let (e, i) = lengths[&s];
        if i >= 2 * bound {
            if !internal.successors(&s)?.is_empty() {
                complete = false;
            }
            continue;
        }
        for u in internal.successors(&s)? {
            if !lengths.contains_key(&u) {
                if lengths.len() >= budget {
                    complete = false;
                    continue;
                }
                lengths.insert(u.clone(), (e, i + 1));
                queue.push_back(u);
            }
        }
    }
    if let Some((e, i)) = lengths.get(target) {
        return Ok(FactorOutcome::Witness { essential: *e, internal: *i });
    }
    if complete {
        Ok(FactorOutcome::Refuted)
    } else {
        Ok(FactorOutcome::Inconclusive)
    }
}

/// Report of a factorization sweep over every state reachable from a start.
#[derive(Debug, Clone, Serialize)]
pub struct FactorReport {
    pub system: String,
    pub start: String,
    pub targets: usize,
    pub witnesses: usize,
    pub refuted: Vec<String>,
    pub inconclusive: Vec<String>,
    pub status: String,
}

/// Enumerates all states reachable from `start` in at most `depth` full
/// steps and searches a factorization witness for each.
pub fn check_factorization<F, E, I>(
    full: &F,
    essential: &E,
    internal: &I,
    start: &F::State,
    depth: usize,
    budget: usize,
) -> Result<FactorReport, StepError>
where
    F: Qars,
    E: Qars<State = F::State>,
    I: Qars<State = F::State>,
{
    let reach = bfs_closure(full, &[(start.clone(), 0)], depth, budget)?;
    let start_size = full.size(start).max(1);
    let max_size = reach.dist.keys().map(|s| full.size(s)).max().unwrap_or(start_size);
    let growth = max_size.div_ceil(start_size);
    let bound = 2 * depth * (1 + growth);

    let mut targets: Vec<&F::State> = reach.dist.keys().collect();
    targets.sort();
    let mut witnesses = 0;
    let mut refuted = Vec::new();
    let mut inconclusive = Vec::new();
    for target in &targets {
        match factorization_witness(essential, internal, start, target, bound, budget)? {
            FactorOutcome::Witness { .. } => witnesses += 1,
            FactorOutcome::Refuted => refuted.push(full.render(target)),
            FactorOutcome::Inconclusive => inconclusive.push(full.render(target)),
        }
    }
    if !reach.complete {
        inconclusive.push(format!(
            "reachable set truncated at depth {depth} / budget {budget}"
        ));
    }
    let status = if !refuted.is_empty() {
        "refuted"
    } else if !inconclusive.is_empty() {
        "inconclusive"
    } else {
        "factorizes"
    };
    Ok(FactorReport {
        system: full.name(),
        start: full.render(start),
        targets: targets.len(),
        witnesses,
        refuted,
        inconclusive,
        status: status.to_string(),
    })
}

impl fmt::Display for FactorOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorOutcome::Witness { essential, internal } => {
                write!(f, "witness ({essential} essential + {internal} internal)")
            }
            FactorOutcome::Refuted => f.write_str("refuted"),
            FactorOutcome::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_term, Signature};

    fn sig() -> Signature {
        Signature::prob()
    }

    fn t(src: &str) -> Term {
        parse_term(src, &sig()).unwrap()
    }

    #[test]
    fn unbiased_prefers_surface_redexes() {
        // a weak redex exists, so the frozen operator-argument redex is not selected
        let m = t("((\\x.x) y) (z (+) ((\\u.u) v))");
        let spec = UnbiasedSpec::cbv();
        let descs: Vec<String> =
            unbiased_redexes(&m, &spec).iter().map(Redex::describe).collect();
        assert_eq!(descs, vec!["betav@fun"]);
        let internal: Vec<String> =
            internal_redexes(&m, &spec).iter().map(Redex::describe).collect();
        assert_eq!(internal, vec!["betav@arg.op1"]);
    }

    #[test]
    fn unbiased_descends_into_frozen_operator_arguments() {
        // no weak redex: the only strategy step is under the operator
        let m = t("y (+) ((\\x.x) z)");
        let spec = UnbiasedSpec::cbv();
        assert!(is_surface_normal(&m, &spec));
        let rs = unbiased_redexes(&m, &spec);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].describe(), "betav@op1");
        let succs = unbiased_successors(&m, &spec).unwrap();
        assert_eq!(succs, vec![t("y (+) z")]);
    }

    #[test]
    fn unbiased_descends_under_binders_for_cbv() {
        let m = t("\\w.(\\x.x) z");
        let rs = unbiased_redexes(&m, &UnbiasedSpec::cbv());
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].describe(), "betav@body");
    }

    #[test]
    fn unbiased_is_empty_exactly_on_normal_forms() {
        let spec = UnbiasedSpec::cbv();
        for src in ["x", "\\x.x", "x y", "\\x.y (+) z"] {
            let m = t(src);
            assert!(unbiased_redexes(&m, &spec).is_empty(), "{src}");
            assert!(is_normal(&m, &[(spec.rule, ContextClass::Full)]), "{src}");
        }
        let m = t("\\w.(\\x.x) z");
        assert!(!unbiased_redexes(&m, &spec).is_empty());
    }

    #[test]
    fn internal_steps_are_the_unselected_full_steps() {
        let spec = UnbiasedSpec::cbv();
        // surface redex at root; the body redex under the binder is internal
        let m = t("(\\x.\\w.(\\y.y) x) z");
        let internal = internal_redexes(&m, &spec);
        assert_eq!(internal.len(), 1);
        assert_eq!(internal[0].describe(), "betav@fun.body.body");
        // once no surface redex remains, the same position becomes a strategy step
        let m2 = t("\\w.(\\y.y) z");
        assert!(internal_redexes(&m2, &spec).is_empty());
        assert_eq!(unbiased_redexes(&m2, &spec).len(), 1);
    }

    #[test]
    fn parallel_step_develops_all_children_when_surface_normal() {
        // both redexes sit under binders, so the term is surface normal
        let spec = UnbiasedSpec::cbv();
        let m = t("z (\\w.(\\x.x) y) (\\w.(\\x.x) z)");
        let (next, fired) = parallel_step(&m, &spec).unwrap();
        assert_eq!(next, t("z (\\w.y) (\\w.z)"));
        let descs: Vec<String> = fired.iter().map(Redex::describe).collect();
        assert_eq!(descs, vec!["betav@fun.arg.body", "betav@arg.body"]);
    }

    #[test]
    fn parallel_step_fires_leftmost_surface_redex_first() {
        let spec = UnbiasedSpec::cbv();
        let m = t("((\\x.x) y) ((\\x.x) z)");
        let (next, fired) = parallel_step(&m, &spec).unwrap();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].describe(), "betav@fun");
        assert_eq!(next, t("y ((\\x.x) z)"));
    }

    #[test]
    fn parallel_step_is_reflexive_on_normal_forms() {
        let spec = UnbiasedSpec::cbv();
        let m = t("\\x.y (+) z");
        let (next, fired) = parallel_step(&m, &spec).unwrap();
        assert_eq!(next, m);
        assert!(fired.is_empty());
    }

    #[test]
    fn head_parallel_development_works_under_binders() {
        let spec = UnbiasedSpec::cbn();
        let m = t("\\x.(\\y.y) x w");
        let (next, fired) = parallel_step(&m, &spec).unwrap();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].describe(), "beta@body.fun");
        assert_eq!(next, t("\\x.x w"));
    }

    #[test]
    fn run_policies_agree_on_the_normal_form_here() {
        let spec = UnbiasedSpec::cbv();
        let m = t("(\\x.x x) ((\\y.y) (\\z.z))");
        for mode in [Mode::Leftmost, Mode::Rightmost, Mode::Random(7)] {
            let tr = run(&m, &spec, PureRelation::Unbiased, mode, 50).unwrap();
            assert!(tr.terminated, "{:?}", mode);
            assert_eq!(tr.final_term, t("\\z.z"), "{:?}", mode);
        }
    }

    #[test]
    fn run_flags_fuel_exhaustion_on_loops() {
        let spec = UnbiasedSpec::cbv();
        let m = t("(\\x.x x) (\\x.x x)");
        let tr = run(&m, &spec, PureRelation::Unbiased, Mode::Leftmost, 10).unwrap();
        assert!(!tr.terminated);
        assert!(tr.fuel_exhausted);
        assert_eq!(tr.final_term, m);
    }

    #[test]
    fn unbiased_strategy_has_the_one_step_diamond() {
        let spec = UnbiasedSpec::cbv();
        let sys = PureSystem::new(spec, PureRelation::Unbiased, Mode::All);
        let corpus: Vec<Term> = [
            "(\\x.x) ((\\y.y) z)",
            "((\\x.x) y) ((\\x.x) z)",
            "(y (+) ((\\x.x) y)) (+) ((\\x.x) z)",
            "\\w.((\\x.x) y) ((\\x.x) z)",
            "(\\x.x x) ((\\y.y) (\\z.z))",
        ]
        .iter()
        .map(|s| t(s))
        .collect();
        let all = crate::qars::reachable_states(&sys, &corpus, 6, 10_000).unwrap();
        let report = check_rd_diamond(&sys, &all).unwrap();
        assert!(report.passed(), "{:?}", report.violations);
    }

    #[test]
    fn full_relation_fails_the_one_step_diamond() {
        // duplicating peak: contracting the root copies the reducible value,
        // contracting inside the value does not, and the results need two
        // steps on one side to meet
        let spec = UnbiasedSpec::cbv();
        let sys = PureSystem::new(spec, PureRelation::Full, Mode::All);
        let m = t("(\\x.x x) (\\w.(\\y.y) z)");
        let report = check_rd_diamond(&sys, &[m]).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn factorization_finds_strategy_first_witnesses() {
        let spec = UnbiasedSpec::cbv();
        let full = PureSystem::new(spec, PureRelation::Full, Mode::All);
        let essential = PureSystem::new(spec, PureRelation::Unbiased, Mode::All);
        let internal = PureSystem::new(spec, PureRelation::Internal, Mode::All);
        let m = t("(\\x.\\w.(\\y.y) x) z");
        let report = check_factorization(&full, &essential, &internal, &m, 8, 10_000).unwrap();
        assert_eq!(report.status, "factorizes", "{:?}", report);
        assert_eq!(report.refuted.len(), 0);
    }

    #[test]
    fn spec_validation_rejects_mismatched_surfaces() {
        assert!(UnbiasedSpec::new(RuleKind::Beta, ContextClass::Weak).is_err());
        assert!(UnbiasedSpec::new(RuleKind::BetaV, ContextClass::Head).is_err());
        assert!(UnbiasedSpec::new(RuleKind::BetaV, ContextClass::Left).is_ok());
    }
}
