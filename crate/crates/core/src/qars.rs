//! Quantitative analysis of rewrite systems.
//!
//! A system here is any finitely branching relation whose states can be
//! observed in an ω-cpo: the observation grows monotonically along every
//! reduction sequence, so each sequence has a well-defined limit (the sup of
//! its observation chain). Everything in this module is generic over the
//! [`Qars`] trait so the same checkers run on plain terms, multi-distributions,
//! payoff states and output states.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::ser::Serializer;
use serde::Serialize;

use crate::bohm::{pnf_join, pnf_leq, PartialNf};
use crate::error::StepError;
use crate::prob::SubDist;
use crate::rat::{one, Rat};
use crate::term::Term;

/// Natural numbers completed with a top element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NatInf {
    Fin(u64),
    Inf,
}

impl fmt::Display for NatInf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NatInf::Fin(n) => write!(f, "{n}"),
            NatInf::Inf => f.write_str("inf"),
        }
    }
}

/// A value in one of the ω-cpos the crate observes into.
///
/// * `Bool` — the two-point order `0 < 1`;
/// * `Rat` — exact rationals in `[0,1]`;
/// * `NatInf` — counters with `inf` on top;
/// * `FlatTerm` — normal forms in the flat order (`None` is bottom, distinct
///   terms are incomparable);
/// * `Dist` — subdistributions over normal forms, ordered pointwise;
/// * `Pnf` — partial normal forms, bottom `_|_` may grow into structure;
/// * `Str` — output buffers ordered by the suffix relation (writers prepend,
///   so older output is a suffix of newer output).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObsValue {
    Bool(bool),
    Rat(Rat),
    NatInf(NatInf),
    FlatTerm(Option<Term>),
    Dist(SubDist),
    Pnf(PartialNf),
    Str(String),
}

impl ObsValue {
    pub fn kind(&self) -> &'static str {
        match self {
            ObsValue::Bool(_) => "two-point",
            ObsValue::Rat(_) => "rational",
            ObsValue::NatInf(_) => "nat-inf",
            ObsValue::FlatTerm(_) => "flat-normal-form",
            ObsValue::Dist(_) => "subdistribution",
            ObsValue::Pnf(_) => "partial-normal-form",
            ObsValue::Str(_) => "buffer",
        }
    }

    /// The partial order of the value's cpo. Panics when the two values live
    /// in different cpos; comparing those is a programming error.
    pub fn leq(&self, other: &ObsValue) -> bool {
        match (self, other) {
            (ObsValue::Bool(a), ObsValue::Bool(b)) => !a | b,
            (ObsValue::Rat(a), ObsValue::Rat(b)) => a <= b,
            (ObsValue::NatInf(a), ObsValue::NatInf(b)) => a <= b,
            (ObsValue::FlatTerm(a), ObsValue::FlatTerm(b)) => match (a, b) {
                (None, _) => true,
                (Some(x), Some(y)) => x == y,
                (Some(_), None) => false,
            },
            (ObsValue::Dist(a), ObsValue::Dist(b)) => a.leq(b),
            (ObsValue::Pnf(a), ObsValue::Pnf(b)) => pnf_leq(a, b),
            (ObsValue::Str(a), ObsValue::Str(b)) => b.ends_with(a.as_str()),
            (a, b) => panic!("comparing {} with {}", a.kind(), b.kind()),
        }
    }

    /// Least upper bound of two values, when it exists in the cpo.
    pub fn join(&self, other: &ObsValue) -> Option<ObsValue> {
        match (self, other) {
            (ObsValue::Bool(a), ObsValue::Bool(b)) => Some(ObsValue::Bool(a | b)),
            (ObsValue::Rat(a), ObsValue::Rat(b)) => Some(ObsValue::Rat(a.clone().max(b.clone()))),
            (ObsValue::NatInf(a), ObsValue::NatInf(b)) => Some(ObsValue::NatInf((*a).max(*b))),
            (ObsValue::FlatTerm(a), ObsValue::FlatTerm(b)) => match (a, b) {
                (None, x) | (x, None) => Some(ObsValue::FlatTerm(x.clone())),
                (Some(x), Some(y)) if x == y => Some(self.clone()),
                _ => None,
            },
            (ObsValue::Dist(a), ObsValue::Dist(b)) => {
                let env = a.pointwise_max(b);
                (env.mass() <= one()).then_some(ObsValue::Dist(env))
            }
            (ObsValue::Pnf(a), ObsValue::Pnf(b)) => pnf_join(a, b).map(ObsValue::Pnf),
            (ObsValue::Str(a), ObsValue::Str(b)) => {
                if a.ends_with(b.as_str()) {
                    Some(self.clone())
                } else if b.ends_with(a.as_str()) {
                    Some(other.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// True when no strictly larger element exists, so any chain passing
    /// through the value has it as its sup.
    pub fn is_maximal(&self) -> bool {
        match self {
            ObsValue::Bool(b) => *b,
            ObsValue::Rat(r) => *r == one(),
            ObsValue::NatInf(n) => *n == NatInf::Inf,
            ObsValue::FlatTerm(t) => t.is_some(),
            ObsValue::Dist(d) => d.mass() == one(),
            ObsValue::Pnf(p) => p.is_total(),
            ObsValue::Str(_) => false,
        }
    }

    pub fn render(&self) -> String {
        match self {
            ObsValue::Bool(b) => if *b { "1" } else { "0" }.to_string(),
            ObsValue::Rat(r) => r.to_string(),
            ObsValue::NatInf(n) => n.to_string(),
            ObsValue::FlatTerm(None) => "_|_".to_string(),
            ObsValue::FlatTerm(Some(t)) => t.to_string(),
            ObsValue::Dist(d) => d.render(),
            ObsValue::Pnf(p) => p.to_string(),
            ObsValue::Str(s) => format!("\"{s}\""),
        }
    }
}

impl fmt::Display for ObsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for ObsValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

/// A named monotone map from states into an ω-cpo.
pub struct Observation<S> {
    name: String,
    f: Box<dyn Fn(&S) -> ObsValue>,
}

impl<S> Observation<S> {
    pub fn new(name: &str, f: impl Fn(&S) -> ObsValue + 'static) -> Observation<S> {
        Observation { name: name.to_string(), f: Box::new(f) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, s: &S) -> ObsValue {
        (self.f)(s)
    }
}

/// A finitely branching rewrite system whose states can be enumerated,
/// compared and rendered. Implementations decide which relation
/// `successors` exposes (a full relation, a strategy, internal steps, ...).
pub trait Qars {
    type State: Clone + Eq + std::hash::Hash + Ord + fmt::Debug;

    fn name(&self) -> String;

    /// All one-step successors. Deterministic systems return at most one.
    fn successors(&self, s: &Self::State) -> Result<Vec<Self::State>, StepError>;

    fn render(&self, s: &Self::State) -> String;

    /// A size estimate used by bounded searches.
    fn size(&self, s: &Self::State) -> usize {
        self.render(s).chars().count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    /// The chain provably reached its sup (normal form, self-loop sink, or a
    /// maximal cpo element).
    Exact,
    /// A finite prefix was observed; the true limit dominates this value.
    LowerBound,
}

/// The observation of one reduction sequence truncated at a finite depth.
#[derive(Debug, Clone, Serialize)]
pub struct LimitApprox {
    pub value: ObsValue,
    pub status: LimitStatus,
    /// Steps taken from the start state when the value was recorded.
    pub depth: usize,
}

/// The observation chain of a single (policy-resolved) run.
#[derive(Debug, Clone, Serialize)]
pub struct ObsChain {
    pub system: String,
    pub observation: String,
    pub start: String,
    pub values: Vec<ObsValue>,
}

/// Follows the first successor for up to `fuel` steps, recording the
/// observation chain, and fails loudly if monotonicity is violated.
pub fn observe_chain<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    start: &Q::State,
    fuel: usize,
) -> Result<(ObsChain, LimitApprox), StepError> {
    let mut cur = start.clone();
    let mut values = vec![obs.apply(&cur)];
    let mut status = LimitStatus::LowerBound;
    let mut depth = 0;
    for step in 0..fuel {
        if values.last().unwrap().is_maximal() {
            status = LimitStatus::Exact;
            break;
        }
        let succs = sys.successors(&cur)?;
        let Some(next) = succs.first().cloned() else {
            status = LimitStatus::Exact;
            break;
        };
        let stationary = next == cur;
        let v = obs.apply(&next);
        let prev = values.last().unwrap();
        if !prev.leq(&v) {
            return Err(StepError::NotMonotone {
                obs: obs.name().to_string(),
                step,
                before: prev.render(),
                after: v.render(),
            });
        }
        if stationary && succs.iter().all(|u| *u == cur) {
            status = LimitStatus::Exact;
            break;
        }
        cur = next;
        depth = step + 1;
        values.push(v);
    }
    let approx = LimitApprox { value: values.last().unwrap().clone(), status, depth };
    let chain = ObsChain {
        system: sys.name(),
        observation: obs.name().to_string(),
        start: sys.render(start),
        values,
    };
    Ok((chain, approx))
}

/// Summary of a brute-force limit-set exploration.
#[derive(Debug, Clone, Serialize)]
pub struct LimitSetReport {
    pub system: String,
    pub observation: String,
    pub start: String,
    pub depth: usize,
    pub approximations: Vec<LimitApprox>,
    /// An `Exact` value dominating every approximation, when one exists.
    pub greatest_exact: Option<ObsValue>,
    /// Pointwise join of all approximations, when the cpo has it.
    pub join_of_approximations: Option<ObsValue>,
}

impl LimitSetReport {
    pub fn exact_values(&self) -> Vec<&ObsValue> {
        self.approximations
            .iter()
            .filter(|a| a.status == LimitStatus::Exact)
            .map(|a| &a.value)
            .collect()
    }
}

/// Explores every reduction sequence from `start` up to `depth` steps and
/// returns the deduplicated set of truncated limits.
///
/// `Exact` entries are genuine members of the limit set: sequences that
/// reached a state with no successors, a state all of whose successors are
/// itself, a maximal observation, or a self-loop that can be taken forever.
/// Everything else is reported as a `LowerBound`. The all-stay lifted
/// successor (the identity) is expected to be excluded by the system; real
/// self-loops (e.g. a term rewriting to itself) are handled here.
pub fn limit_set_bruteforce<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    start: &Q::State,
    depth: usize,
    budget: usize,
) -> Result<LimitSetReport, StepError> {
    struct Ctx<'a, Q: Qars> {
        sys: &'a Q,
        obs: &'a Observation<Q::State>,
        budget: usize,
        visited: usize,
        memo: HashMap<(Q::State, usize), Vec<(ObsValue, LimitStatus, usize)>>,
    }

    fn insert(acc: &mut Vec<(ObsValue, LimitStatus, usize)>, v: ObsValue, st: LimitStatus, d: usize) {
        for (ev, est, ed) in acc.iter_mut() {
            if *ev == v {
                if st == LimitStatus::Exact && *est == LimitStatus::LowerBound {
                    *est = LimitStatus::Exact;
                }
                *ed = (*ed).min(d);
                return;
            }
        }
        acc.push((v, st, d));
    }

    fn go<Q: Qars>(
        ctx: &mut Ctx<Q>,
        s: &Q::State,
        remaining: usize,
        taken: usize,
    ) -> Result<Vec<(ObsValue, LimitStatus, usize)>, StepError> {
        if let Some(hit) = ctx.memo.get(&(s.clone(), remaining)) {
            return Ok(hit.clone());
        }
        ctx.visited += 1;
        if ctx.visited > ctx.budget {
            return Err(StepError::SearchBudget { visited: ctx.visited });
        }
        let here = ctx.obs.apply(s);
        let mut acc = Vec::new();
        if here.is_maximal() {
            insert(&mut acc, here, LimitStatus::Exact, taken);
        } else {
            let succs = ctx.sys.successors(s)?;
            let mut others: Vec<&Q::State> = Vec::new();
            let mut seen = HashSet::new();
            let mut self_loop = false;
            for u in &succs {
                if u == s {
                    self_loop = true;
                } else if seen.insert(u) {
                    others.push(u);
                }
            }
            if succs.is_empty() || (self_loop && others.is_empty()) {
                insert(&mut acc, here, LimitStatus::Exact, taken);
            } else {
                if self_loop {
                    // the sequence looping here forever is maximal
                    insert(&mut acc, here.clone(), LimitStatus::Exact, taken);
                }
                if remaining == 0 {
                    insert(&mut acc, here, LimitStatus::LowerBound, taken);
                } else {
                    for u in others {
                        for (v, st, d) in go(ctx, u, remaining - 1, taken + 1)? {
                            insert(&mut acc, v, st, d);
                        }
                    }
                }
            }
        }
        ctx.memo.insert((s.clone(), remaining), acc.clone());
        Ok(acc)
    }

    let mut ctx = Ctx { sys, obs, budget, visited: 0, memo: HashMap::new() };
    let raw = go(&mut ctx, start, depth, 0)?;
    let mut approximations: Vec<LimitApprox> = raw
        .into_iter()
        .map(|(value, status, depth)| LimitApprox { value, status, depth })
        .collect();
    approximations.sort_by_key(|a| (a.value.render(), a.status == LimitStatus::LowerBound));

    let greatest_exact = approximations
        .iter()
        .filter(|a| a.status == LimitStatus::Exact)
        .map(|a| &a.value)
        .find(|v| approximations.iter().all(|a| a.value.leq(v)))
        .cloned();
    let join_of_approximations = approximations
        .iter()
        .map(|a| Some(a.value.clone()))
        .reduce(|a, b| a.and_then(|x| b.and_then(|y| x.join(&y))))
        .flatten();

    Ok(LimitSetReport {
        system: sys.name(),
        observation: obs.name().to_string(),
        start: sys.render(start),
        depth,
        approximations,
        greatest_exact,
        join_of_approximations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub state: String,
    pub detail: String,
}

/// A machine-checkable law verdict over a finite corpus.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub corpus_size: usize,
    pub violations: Vec<Violation>,
    pub inconclusive: Vec<Violation>,
    pub status: String,
}

impl CheckReport {
    pub fn new(
        check: &str,
        corpus_size: usize,
        violations: Vec<Violation>,
        inconclusive: Vec<Violation>,
    ) -> CheckReport {
        let status = if !violations.is_empty() {
            "fail"
        } else if !inconclusive.is_empty() {
            "inconclusive"
        } else {
            "pass"
        };
        CheckReport {
            check: check.to_string(),
            corpus_size,
            violations,
            inconclusive,
            status: status.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// Steps of the given system must not change the observation. Used with a
/// system exposing only the internal (non-strategy) steps.
pub fn check_neutrality<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    corpus: &[Q::State],
) -> Result<CheckReport, StepError> {
    let mut violations = Vec::new();
    for s in corpus {
        let before = obs.apply(s);
        for u in sys.successors(s)? {
            let after = obs.apply(&u);
            if before != after {
                violations.push(Violation {
                    state: sys.render(s),
                    detail: format!(
                        "{} changed {} -> {} via step to {}",
                        obs.name(),
                        before.render(),
                        after.render(),
                        sys.render(&u)
                    ),
                });
            }
        }
    }
    Ok(CheckReport::new(
        &format!("neutrality[{}/{}]", sys.name(), obs.name()),
        corpus.len(),
        violations,
        vec![],
    ))
}

/// Every observation must grow along every step of the system.
pub fn check_monotonicity<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    corpus: &[Q::State],
) -> Result<CheckReport, StepError> {
    let mut violations = Vec::new();
    for s in corpus {
        let before = obs.apply(s);
        for u in sys.successors(s)? {
            let after = obs.apply(&u);
            if !before.leq(&after) {
                violations.push(Violation {
                    state: sys.render(s),
                    detail: format!(
                        "{} decreased {} -> {} via step to {}",
                        obs.name(),
                        before.render(),
                        after.render(),
                        sys.render(&u)
                    ),
                });
            }
        }
    }
    Ok(CheckReport::new(
        &format!("monotonicity[{}/{}]", sys.name(), obs.name()),
        corpus.len(),
        violations,
        vec![],
    ))
}

/// Peaks `t1 <- s -> t2` must join in at most one step on each side, with
/// both peak successors observed equal.
pub fn check_obs_diamond<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    corpus: &[Q::State],
) -> Result<CheckReport, StepError> {
    let mut violations = Vec::new();
    for s in corpus {
        let succs = sys.successors(s)?;
        for i in 0..succs.len() {
            for j in (i + 1)..succs.len() {
                let (t1, t2) = (&succs[i], &succs[j]);
                let (o1, o2) = (obs.apply(t1), obs.apply(t2));
                if o1 != o2 {
                    violations.push(Violation {
                        state: sys.render(s),
                        detail: format!(
                            "peak successors observe differently: {} vs {}",
                            o1.render(),
                            o2.render()
                        ),
                    });
                    continue;
                }
                if t1 == t2 {
                    continue;
                }
                let n1: HashSet<Q::State> = sys.successors(t1)?.into_iter().collect();
                let joins = sys.successors(t2)?.into_iter().any(|u| n1.contains(&u));
                if !joins {
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
        &format!("obs-diamond[{}/{}]", sys.name(), obs.name()),
        corpus.len(),
        violations,
        vec![],
    ))
}

/// Every `Exact` limit of the big relation must be dominated by some element
/// of the strategy's limit set at the same depth budget.
pub fn check_asymptotic_completeness<B, E>(
    big: &B,
    strategy: &E,
    obs: &Observation<B::State>,
    starts: &[B::State],
    depth: usize,
    budget: usize,
) -> Result<CheckReport, StepError>
where
    B: Qars,
    E: Qars<State = B::State>,
{
    let mut violations = Vec::new();
    let mut inconclusive = Vec::new();
    for s in starts {
        let big_set = limit_set_bruteforce(big, obs, s, depth, budget)?;
        let strat_set = limit_set_bruteforce(strategy, obs, s, depth, budget)?;
        let strat_has_open = strat_set
            .approximations
            .iter()
            .any(|a| a.status == LimitStatus::LowerBound);
        for q in big_set.exact_values() {
            let dominated = strat_set.approximations.iter().any(|p| q.leq(&p.value));
            if dominated {
                continue;
            }
            let v = Violation {
                state: big.render(s),
                detail: format!(
                    "big-relation limit {} not dominated by any strategy approximation",
                    q.render()
                ),
            };
            if strat_has_open {
                // deeper exploration could still dominate it
                inconclusive.push(v);
            } else {
                violations.push(v);
            }
        }
    }
    Ok(CheckReport::new(
        &format!("asymptotic-completeness[{} vs {}]", big.name(), strategy.name()),
        starts.len(),
        violations,
        inconclusive,
    ))
}

/// Helper shared by the corpus-driven checkers: the reachable set of `sys`
/// from the seeds, up to `closure_depth` steps, deduplicated.
pub fn reachable_states<Q: Qars>(
    sys: &Q,
    seeds: &[Q::State],
    closure_depth: usize,
    budget: usize,
) -> Result<Vec<Q::State>, StepError> {
    let mut seen: HashSet<Q::State> = seeds.iter().cloned().collect();
    let mut frontier: Vec<Q::State> = seeds.to_vec();
    let mut out: Vec<Q::State> = seeds.to_vec();
    for _ in 0..closure_depth {
        let mut next = Vec::new();
        for s in &frontier {
            for u in sys.successors(s)? {
                if seen.insert(u.clone()) {
                    if out.len() >= budget {
                        return Err(StepError::SearchBudget { visited: out.len() });
                    }
                    next.push(u.clone());
                    out.push(u);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(out)
}

/// Renders a deduplicated multiset of rendered states, used in reports.
pub fn render_states<Q: Qars>(sys: &Q, states: &[Q::State]) -> Vec<String> {
    let mut m: BTreeMap<String, usize> = BTreeMap::new();
    for s in states {
        *m.entry(sys.render(s)).or_default() += 1;
    }
    m.into_iter()
        .map(|(s, n)| if n == 1 { s } else { format!("{s} (x{n})") })
        .collect()
}
