//! Probabilistic reduction of terms with binary fair choice.
//!
//! States are multi-distributions: weighted multisets of terms whose weights
//! sum to at most one. Entries are never merged, so two reduction histories
//! that happen to reach the same term stay distinct. A choice step replaces
//! one entry of weight `w` by the two branches at `w/2` each; beta steps keep
//! the weight. A relation on terms is lifted to multi-distributions by
//! letting every entry either take one of its steps or stay put (full lifting
//! forbids staying unless the entry has no step at all).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::StepError;
use crate::qars::{Observation, ObsValue, Qars};
use crate::rat::{one, zero, Rat};
use crate::reduction::{redexes_multi, step, ContextClass, Redex, RuleKind, StepResult};
use crate::strategy::{unbiased_redexes, UnbiasedSpec};
use crate::term::{Signature, Term};

/// Which beta discipline the calculus uses, and therefore where choice may
/// fire: call-by-value pairs full beta-value with weak choice, call-by-name
/// pairs full beta with head choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Cbv,
    Cbn,
}

impl Flavor {
    pub fn name(&self) -> &'static str {
        match self {
            Flavor::Cbv => "cbv",
            Flavor::Cbn => "cbn",
        }
    }

    pub fn beta(&self) -> RuleKind {
        match self {
            Flavor::Cbv => RuleKind::BetaV,
            Flavor::Cbn => RuleKind::Beta,
        }
    }

    /// The surface contexts of both rules.
    pub fn surface(&self) -> ContextClass {
        match self {
            Flavor::Cbv => ContextClass::Weak,
            Flavor::Cbn => ContextClass::Head,
        }
    }

    /// The full one-step relation: beta everywhere, choice at surface
    /// positions only.
    pub fn full_pairs(&self) -> Vec<(RuleKind, ContextClass)> {
        vec![(self.beta(), ContextClass::Full), (RuleKind::Oplus, self.surface())]
    }

    /// Both rules restricted to surface positions.
    pub fn surface_pairs(&self) -> Vec<(RuleKind, ContextClass)> {
        vec![(self.beta(), self.surface()), (RuleKind::Oplus, self.surface())]
    }

    pub fn unbiased(&self) -> UnbiasedSpec {
        match self {
            Flavor::Cbv => UnbiasedSpec::cbv(),
            Flavor::Cbn => UnbiasedSpec::cbn(),
        }
    }

    pub fn signature(&self) -> Signature {
        Signature::prob()
    }
}

/// A weighted multiset of terms with total weight at most one. Weights are
/// exact rationals in `(0, 1]`; entries are kept separate even when their
/// terms coincide.
#[derive(Debug, Clone)]
pub struct MultiDist {
    entries: Vec<(Rat, Term)>,
}

impl MultiDist {
    pub fn new(entries: Vec<(Rat, Term)>) -> Result<MultiDist, StepError> {
        let mut mass = zero();
        for (w, t) in &entries {
            if *w <= zero() || *w > one() {
                return Err(StepError::Config(format!(
                    "entry weight {w} for {t} is outside (0, 1]"
                )));
            }
            mass += w;
        }
        if mass > one() {
            return Err(StepError::Config(format!("total weight {mass} exceeds 1")));
        }
        Ok(MultiDist { entries })
    }

    pub fn singleton(t: Term) -> MultiDist {
        MultiDist { entries: vec![(one(), t)] }
    }

    pub fn entries(&self) -> &[(Rat, Term)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> Rat {
        self.entries.iter().fold(zero(), |acc, (w, _)| acc + w)
    }

    /// Entries sorted by term then weight; the canonical multiset view used
    /// for equality, hashing and ordering.
    fn canonical(&self) -> Vec<&(Rat, Term)> {
        let mut v: Vec<&(Rat, Term)> = self.entries.iter().collect();
        v.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        v
    }

    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return "[]".to_string();
        }
        let parts: Vec<String> =
            self.entries.iter().map(|(w, t)| format!("{} {}", crate::rat::render(w), t)).collect();
        format!("[{}]", parts.join(", "))
    }
}

impl PartialEq for MultiDist {
    fn eq(&self, other: &MultiDist) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for MultiDist {}

impl Hash for MultiDist {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let canon = self.canonical();
        canon.len().hash(state);
        for (w, t) in canon {
            w.numer().hash(state);
            w.denom().hash(state);
            t.hash(state);
        }
    }
}

impl PartialOrd for MultiDist {
    fn partial_cmp(&self, other: &MultiDist) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiDist {
    fn cmp(&self, other: &MultiDist) -> std::cmp::Ordering {
        self.canonical().cmp(&other.canonical())
    }
}

impl fmt::Display for MultiDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// A subdistribution over terms, merged by term, ordered pointwise.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubDist(pub BTreeMap<Term, Rat>);

impl SubDist {
    pub fn new() -> SubDist {
        SubDist(BTreeMap::new())
    }

    pub fn add(&mut self, t: Term, w: Rat) {
        let slot = self.0.entry(t).or_insert_with(zero);
        *slot += w;
    }

    pub fn mass(&self) -> Rat {
        self.0.values().fold(zero(), |acc, w| acc + w)
    }

    pub fn weight(&self, t: &Term) -> Rat {
        self.0.get(t).cloned().unwrap_or_else(zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &Term> {
        self.0.keys()
    }

    pub fn leq(&self, other: &SubDist) -> bool {
        self.0.iter().all(|(t, w)| *w <= other.weight(t))
    }

    pub fn pointwise_max(&self, other: &SubDist) -> SubDist {
        let mut out = self.clone();
        for (t, w) in &other.0 {
            let slot = out.0.entry(t.clone()).or_insert_with(zero);
            if *w > *slot {
                *slot = w.clone();
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> =
            self.0.iter().map(|(t, w)| format!("{}: {}", t, crate::rat::render(w))).collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn to_json_map(&self) -> BTreeMap<String, String> {
        self.0.iter().map(|(t, w)| (t.to_string(), crate::rat::render(w))).collect()
    }
}

impl Hash for SubDist {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.len().hash(state);
        for (t, w) in &self.0 {
            t.hash(state);
            w.numer().hash(state);
            w.denom().hash(state);
        }
    }
}

/// Fires one redex of a pure probabilistic term, as a weighted bag of
/// results: beta keeps the mass on one result, choice splits it in half.
fn fire(t: &Term, r: &Redex) -> Result<Vec<(Rat, Term)>, StepError> {
    match step(t, r)? {
        StepResult::One(u) => Ok(vec![(one(), u)]),
        StepResult::Split(branches) => Ok(branches),
        StepResult::Emit(..) => Err(StepError::Config(
            "effect rules do not belong to the probabilistic fragment".to_string(),
        )),
    }
}

/// One entry's available steps under some relation: the redex and the bag of
/// weighted results of firing it (weights relative to the entry).
pub type EntryOptions = Vec<(Redex, Vec<(Rat, Term)>)>;

fn options_for(t: &Term, rs: Vec<Redex>) -> Result<EntryOptions, StepError> {
    rs.into_iter().map(|r| Ok((r.clone(), fire(t, &r)?))).collect()
}

/// Redexes of the evaluation strategy: all surface redexes while any exists,
/// otherwise the unbiased beta strategy's redexes (which reach under binders
/// and into frozen choice arguments).
pub fn eval_redexes(t: &Term, flavor: Flavor) -> Vec<Redex> {
    let surface = redexes_multi(t, &flavor.surface_pairs());
    if !surface.is_empty() {
        return surface;
    }
    unbiased_redexes(t, &flavor.unbiased())
}

/// Full-relation redexes not selected by the evaluation strategy.
pub fn internal_redexes_p(t: &Term, flavor: Flavor) -> Vec<Redex> {
    let chosen: HashSet<Redex> = eval_redexes(t, flavor).into_iter().collect();
    redexes_multi(t, &flavor.full_pairs())
        .into_iter()
        .filter(|r| !chosen.contains(r))
        .collect()
}

pub fn is_surface_normal_p(t: &Term, flavor: Flavor) -> bool {
    redexes_multi(t, &flavor.surface_pairs()).is_empty()
}

pub fn is_normal_p(t: &Term, flavor: Flavor) -> bool {
    redexes_multi(t, &flavor.full_pairs()).is_empty()
}

/// The term-level relations that get lifted to multi-distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbRelation {
    /// Plain lifting of the full relation (entries may stay).
    Big,
    /// Plain lifting of the evaluation strategy.
    Eval,
    /// Full lifting of the evaluation strategy: an entry stays only when it
    /// has no step.
    EvalFull,
    /// Full lifting of the surface relation: entries stop at surface normal
    /// forms.
    SurfaceFull,
    /// Plain lifting of the internal (non-strategy) steps.
    Internal,
}

impl ProbRelation {
    pub fn name(&self) -> &'static str {
        match self {
            ProbRelation::Big => "big",
            ProbRelation::Eval => "eval",
            ProbRelation::EvalFull => "eval-full",
            ProbRelation::SurfaceFull => "surface-full",
            ProbRelation::Internal => "internal",
        }
    }

    pub fn lift_mode(&self) -> LiftMode {
        match self {
            ProbRelation::EvalFull | ProbRelation::SurfaceFull => LiftMode::FullLift,
            _ => LiftMode::Lift,
        }
    }

    pub fn redexes(&self, t: &Term, flavor: Flavor) -> Vec<Redex> {
        match self {
            ProbRelation::Big => redexes_multi(t, &flavor.full_pairs()),
            ProbRelation::Eval | ProbRelation::EvalFull => eval_redexes(t, flavor),
            ProbRelation::SurfaceFull => redexes_multi(t, &flavor.surface_pairs()),
            ProbRelation::Internal => internal_redexes_p(t, flavor),
        }
    }

    pub fn options(&self, t: &Term, flavor: Flavor) -> Result<EntryOptions, StepError> {
        options_for(t, self.redexes(t, flavor))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiftMode {
    /// Every entry may stay put.
    Lift,
    /// An entry may stay only if it has no step.
    FullLift,
}

/// What one entry does during a lifted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryChoice {
    Stay,
    Fire(usize),
}

/// Default cap on the number of entries a lifted state may grow to.
pub fn default_entry_budget() -> usize {
    std::env::var("ASYMLAM_ENTRY_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(1 << 16)
}

/// One lifted step driven by a per-entry chooser. Returns the new state and
/// a description of the redexes fired (entry index prefixed).
pub fn lift_with(
    m: &MultiDist,
    flavor: Flavor,
    relation: ProbRelation,
    mut choose: impl FnMut(usize, &Term, &EntryOptions) -> EntryChoice,
    entry_budget: usize,
) -> Result<(MultiDist, Vec<String>), StepError> {
    let mode = relation.lift_mode();
    let mut out: Vec<(Rat, Term)> = Vec::new();
    let mut fired = Vec::new();
    for (i, (w, t)) in m.entries.iter().enumerate() {
        let options = relation.options(t, flavor)?;
        match choose(i, t, &options) {
            EntryChoice::Stay => {
                if mode == LiftMode::FullLift && !options.is_empty() {
                    return Err(StepError::FrozenReducible { term: t.to_string() });
                }
                out.push((w.clone(), t.clone()));
            }
            EntryChoice::Fire(k) => {
                let (r, results) = &options[k];
                fired.push(format!("{}@entry{}", r.describe(), i));
                for (wr, u) in results {
                    out.push((w * wr, u.clone()));
                }
            }
        }
        if out.len() > entry_budget {
            return Err(StepError::EntryBudget { entries: out.len(), budget: entry_budget });
        }
    }
    let next = MultiDist { entries: out };
    debug_assert_eq!(next.mass(), m.mass(), "lifted steps preserve mass");
    Ok((next, fired))
}

/// All lifted successors of a state, excluding the identity (the all-stay
/// combination), deduplicated as multisets. The number of combinations is
/// capped by `search_budget`.
pub fn lifted_successors(
    m: &MultiDist,
    flavor: Flavor,
    relation: ProbRelation,
    entry_budget: usize,
    search_budget: usize,
) -> Result<Vec<MultiDist>, StepError> {
    let mode = relation.lift_mode();
    let mut per_entry: Vec<Vec<EntryChoice>> = Vec::with_capacity(m.len());
    let mut combos: usize = 1;
    for (_, t) in &m.entries {
        let options = relation.options(t, flavor)?;
        let mut choices = Vec::new();
        if options.is_empty() || mode == LiftMode::Lift {
            choices.push(EntryChoice::Stay);
        }
        choices.extend((0..options.len()).map(EntryChoice::Fire));
        combos = combos.saturating_mul(choices.len());
        if combos > search_budget {
            return Err(StepError::SearchBudget { visited: combos });
        }
        per_entry.push(choices);
    }

    let mut seen: HashSet<MultiDist> = HashSet::new();
    let mut out = Vec::new();
    let mut picks = vec![0usize; per_entry.len()];
    loop {
        let combo: Vec<EntryChoice> =
            picks.iter().zip(&per_entry).map(|(&k, cs)| cs[k]).collect();
        if combo.iter().any(|c| matches!(c, EntryChoice::Fire(_))) {
            let (next, _) = lift_with(m, flavor, relation, |i, _, _| combo[i], entry_budget)?;
            if seen.insert(next.clone()) {
                out.push(next);
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == picks.len() {
                return Ok(out);
            }
            picks[i] += 1;
            if picks[i] < per_entry[i].len() {
                break;
            }
            picks[i] = 0;
            i += 1;
        }
        if picks.is_empty() {
            return Ok(out);
        }
    }
}

/// How a run resolves each entry's choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbScheduler {
    /// Fire the leftmost redex of every reducible entry.
    Leftmost,
    /// Fire the rightmost redex of every reducible entry.
    Rightmost,
    /// Fire a uniformly random redex of every reducible entry.
    Random(u64),
    /// As `Leftmost`, with entries processed in parallel.
    ParallelLeftmost,
}

impl ProbScheduler {
    pub fn name(&self) -> String {
        match self {
            ProbScheduler::Leftmost => "leftmost".to_string(),
            ProbScheduler::Rightmost => "rightmost".to_string(),
            ProbScheduler::Random(seed) => format!("random({seed})"),
            ProbScheduler::ParallelLeftmost => "parallel-leftmost".to_string(),
        }
    }
}

fn parallel_leftmost_step(
    m: &MultiDist,
    flavor: Flavor,
    relation: ProbRelation,
    entry_budget: usize,
) -> Result<(MultiDist, Vec<String>), StepError> {
    let parts: Result<Vec<(Vec<(Rat, Term)>, Option<String>)>, StepError> = m
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, (w, t))| {
            let options = relation.options(t, flavor)?;
            match options.first() {
                Some((r, results)) => Ok((
                    results.iter().map(|(wr, u)| (w * wr, u.clone())).collect(),
                    Some(format!("{}@entry{}", r.describe(), i)),
                )),
                None => Ok((vec![(w.clone(), t.clone())], None)),
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut fired = Vec::new();
    for (entries, desc) in parts? {
        out.extend(entries);
        fired.extend(desc);
        if out.len() > entry_budget {
            return Err(StepError::EntryBudget { entries: out.len(), budget: entry_budget });
        }
    }
    let next = MultiDist { entries: out };
    debug_assert_eq!(next.mass(), m.mass(), "lifted steps preserve mass");
    Ok((next, fired))
}

/// One scheduled lifted step.
pub fn scheduled_step(
    m: &MultiDist,
    flavor: Flavor,
    relation: ProbRelation,
    scheduler: ProbScheduler,
    rng: Option<&mut ChaCha8Rng>,
    entry_budget: usize,
) -> Result<(MultiDist, Vec<String>), StepError> {
    match scheduler {
        ProbScheduler::ParallelLeftmost => {
            parallel_leftmost_step(m, flavor, relation, entry_budget)
        }
        ProbScheduler::Leftmost => lift_with(
            m,
            flavor,
            relation,
            |_, _, opts| if opts.is_empty() { EntryChoice::Stay } else { EntryChoice::Fire(0) },
            entry_budget,
        ),
        ProbScheduler::Rightmost => lift_with(
            m,
            flavor,
            relation,
            |_, _, opts| {
                if opts.is_empty() {
                    EntryChoice::Stay
                } else {
                    EntryChoice::Fire(opts.len() - 1)
                }
            },
            entry_budget,
        ),
        ProbScheduler::Random(_) => {
            let rng = rng.expect("random scheduling needs an rng");
            lift_with(
                m,
                flavor,
                relation,
                |_, _, opts| {
                    if opts.is_empty() {
                        EntryChoice::Stay
                    } else {
                        EntryChoice::Fire(rng.gen_range(0..opts.len()))
                    }
                },
                entry_budget,
            )
        }
    }
}

/// Probability assigned to full normal forms, merged by term.
pub fn norm_dist(m: &MultiDist, flavor: Flavor) -> SubDist {
    let mut d = SubDist::new();
    for (w, t) in m.entries() {
        if is_normal_p(t, flavor) {
            d.add(t.clone(), w.clone());
        }
    }
    d
}

/// Total probability of having reached a full normal form.
pub fn norm_mass(m: &MultiDist, flavor: Flavor) -> Rat {
    norm_dist(m, flavor).mass()
}

/// Probability assigned to surface normal forms, merged by term.
pub fn surface_norm_dist(m: &MultiDist, flavor: Flavor) -> SubDist {
    let mut d = SubDist::new();
    for (w, t) in m.entries() {
        if is_surface_normal_p(t, flavor) {
            d.add(t.clone(), w.clone());
        }
    }
    d
}

/// Total probability of having reached a surface normal form.
pub fn surface_norm_mass(m: &MultiDist, flavor: Flavor) -> Rat {
    surface_norm_dist(m, flavor).mass()
}

pub fn obs_norm_dist(flavor: Flavor) -> Observation<MultiDist> {
    Observation::new("obs_N", move |m| ObsValue::Dist(norm_dist(m, flavor)))
}

pub fn obs_norm_mass(flavor: Flavor) -> Observation<MultiDist> {
    Observation::new("obs_pn", move |m| ObsValue::Rat(norm_mass(m, flavor)))
}

pub fn obs_surface_dist(flavor: Flavor) -> Observation<MultiDist> {
    Observation::new("obs_SN", move |m| ObsValue::Dist(surface_norm_dist(m, flavor)))
}

pub fn obs_surface_mass(flavor: Flavor) -> Observation<MultiDist> {
    Observation::new("obs_psn", move |m| ObsValue::Rat(surface_norm_mass(m, flavor)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DistEntryJson {
    pub w: String,
    pub term: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbStepJson {
    pub i: usize,
    pub dist: Vec<DistEntryJson>,
    pub obs_pn: String,
    #[serde(rename = "obs_N")]
    pub obs_n: BTreeMap<String, String>,
    pub fired: Vec<String>,
}

/// A fuel-bounded lifted run, with per-step observations.
#[derive(Debug, Clone, Serialize)]
pub struct ProbTrace {
    pub flavor: String,
    pub relation: String,
    pub scheduler: String,
    pub steps: Vec<ProbStepJson>,
    pub status: String,
    #[serde(skip)]
    pub states: Vec<MultiDist>,
}

impl ProbTrace {
    pub fn final_state(&self) -> &MultiDist {
        self.states.last().expect("trace records the start state")
    }
}

fn snapshot(i: usize, m: &MultiDist, flavor: Flavor, fired: Vec<String>) -> ProbStepJson {
    ProbStepJson {
        i,
        dist: m
            .entries()
            .iter()
            .map(|(w, t)| DistEntryJson { w: crate::rat::render(w), term: t.to_string() })
            .collect(),
        obs_pn: crate::rat::render(&norm_mass(m, flavor)),
        obs_n: norm_dist(m, flavor).to_json_map(),
        fired,
    }
}

/// Runs the lifted relation from `m0` for at most `fuel` steps.
pub fn run_prob(
    m0: &MultiDist,
    flavor: Flavor,
    relation: ProbRelation,
    scheduler: ProbScheduler,
    fuel: usize,
    entry_budget: usize,
) -> Result<ProbTrace, StepError> {
    let mut rng = match scheduler {
        ProbScheduler::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut states = vec![m0.clone()];
    let mut steps = vec![snapshot(0, m0, flavor, vec![])];
    let mut terminated = false;
    for i in 1..=fuel {
        let cur = states.last().unwrap();
        let (next, fired) =
            scheduled_step(cur, flavor, relation, scheduler, rng.as_mut(), entry_budget)?;
        if fired.is_empty() {
            terminated = true;
            break;
        }
        steps.push(snapshot(i, &next, flavor, fired));
        states.push(next);
    }
    Ok(ProbTrace {
        flavor: flavor.name().to_string(),
        relation: relation.name().to_string(),
        scheduler: scheduler.name(),
        steps,
        status: if terminated { "terminated" } else { "fuel-exhausted" }.to_string(),
        states,
    })
}

/// A lifted rewrite system over multi-distributions.
#[derive(Debug, Clone, Copy)]
pub struct ProbSystem {
    pub flavor: Flavor,
    pub relation: ProbRelation,
    /// `None` enumerates all lifted successors; `Some` follows one scheduler.
    pub scheduler: Option<ProbScheduler>,
    pub entry_budget: usize,
    pub search_budget: usize,
}

impl ProbSystem {
    pub fn enumerating(flavor: Flavor, relation: ProbRelation) -> ProbSystem {
        ProbSystem {
            flavor,
            relation,
            scheduler: None,
            entry_budget: default_entry_budget(),
            search_budget: 1 << 20,
        }
    }

    pub fn scheduled(flavor: Flavor, relation: ProbRelation, s: ProbScheduler) -> ProbSystem {
        ProbSystem {
            flavor,
            relation,
            scheduler: Some(s),
            entry_budget: default_entry_budget(),
            search_budget: 1 << 20,
        }
    }
}

impl Qars for ProbSystem {
    type State = MultiDist;

    fn name(&self) -> String {
        match self.scheduler {
            None => format!("{}[{}/all]", self.relation.name(), self.flavor.name()),
            Some(s) => format!("{}[{}/{}]", self.relation.name(), self.flavor.name(), s.name()),
        }
    }

    fn successors(&self, m: &MultiDist) -> Result<Vec<MultiDist>, StepError> {
        match self.scheduler {
            None => lifted_successors(
                m,
                self.flavor,
                self.relation,
                self.entry_budget,
                self.search_budget,
            ),
            Some(ProbScheduler::Random(_)) => Err(StepError::Config(
                "random scheduling cannot enumerate successors deterministically".to_string(),
            )),
            Some(s) => {
                let (next, fired) =
                    scheduled_step(m, self.flavor, self.relation, s, None, self.entry_budget)?;
                Ok(if fired.is_empty() { vec![] } else { vec![next] })
            }
        }
    }

    fn render(&self, m: &MultiDist) -> String {
        m.render()
    }

    fn size(&self, m: &MultiDist) -> usize {
        m.entries().iter().map(|(_, t)| t.size()).sum::<usize>() + m.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{half, rat};
    use crate::term::parse_term;

    fn t(src: &str) -> Term {
        parse_term(src, &Signature::prob()).unwrap()
    }

    #[test]
    fn choice_splits_mass_in_half() {
        let m = MultiDist::singleton(t("y (+) z"));
        let (next, fired) = scheduled_step(
            &m,
            Flavor::Cbv,
            ProbRelation::EvalFull,
            ProbScheduler::Leftmost,
            None,
            1 << 10,
        )
        .unwrap();
        assert_eq!(fired, vec!["oplus@root@entry0"]);
        let expect =
            MultiDist::new(vec![(half(), t("y")), (half(), t("z"))]).unwrap();
        assert_eq!(next, expect);
        assert_eq!(next.mass(), one());
    }

    #[test]
    fn entries_with_equal_terms_stay_separate() {
        let m = MultiDist::singleton(t("(y (+) y) (+) y"));
        let trace = run_prob(
            &m,
            Flavor::Cbv,
            ProbRelation::EvalFull,
            ProbScheduler::Leftmost,
            10,
            1 << 10,
        )
        .unwrap();
        assert_eq!(trace.status, "terminated");
        let last = trace.final_state();
        // [1/4 y, 1/4 y, 1/2 y]: histories are not merged
        assert_eq!(last.len(), 3);
        assert_eq!(norm_dist(last, Flavor::Cbv).weight(&t("y")), one());
    }

    #[test]
    fn lambda_freezes_choice_in_cbv_but_not_in_cbn() {
        let m = t("\\x.y (+) z");
        assert!(is_normal_p(&m, Flavor::Cbv));
        assert!(!is_normal_p(&m, Flavor::Cbn));
        assert!(!is_surface_normal_p(&m, Flavor::Cbn));
        let rs = ProbRelation::SurfaceFull.redexes(&m, Flavor::Cbn);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].describe(), "oplus@body");
    }

    #[test]
    fn eval_keeps_surface_steps_first_then_goes_inside() {
        // the application is not surface normal: the choice at the function
        // position fires before anything frozen inside it
        let m = t("((\\x.x) (+) ((\\x.x x) (\\x.x x))) (\\w.(\\u.u) v)");
        let rs = eval_redexes(&m, Flavor::Cbv);
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].describe(), "oplus@fun");
        // surface normal forms make eval reach under the binder
        let frozen = t("\\w.(\\u.u) v");
        let rs2 = eval_redexes(&frozen, Flavor::Cbv);
        assert_eq!(rs2.len(), 1);
        assert_eq!(rs2[0].describe(), "betav@body");
    }

    #[test]
    fn internal_steps_are_the_rest_of_the_full_relation() {
        let m = t("(\\x.y) (\\w.(\\u.u) v)");
        let ev: Vec<String> =
            eval_redexes(&m, Flavor::Cbv).iter().map(Redex::describe).collect();
        let int: Vec<String> =
            internal_redexes_p(&m, Flavor::Cbv).iter().map(Redex::describe).collect();
        assert_eq!(ev, vec!["betav@root"]);
        assert_eq!(int, vec!["betav@arg.body"]);
    }

    #[test]
    fn plain_lifting_allows_stays_and_excludes_the_identity() {
        let m = MultiDist::new(vec![(half(), t("y (+) z")), (half(), t("w"))]).unwrap();
        let succs =
            lifted_successors(&m, Flavor::Cbv, ProbRelation::Big, 1 << 10, 1 << 10).unwrap();
        // reducible entry: stay or fire; normal entry: stay only; identity dropped
        assert_eq!(succs.len(), 1);
        let expect = MultiDist::new(vec![
            (rat(1, 4), t("y")),
            (rat(1, 4), t("z")),
            (half(), t("w")),
        ])
        .unwrap();
        assert_eq!(succs[0], expect);
    }

    #[test]
    fn full_lifting_rejects_staying_on_reducible_entries() {
        let m = MultiDist::singleton(t("y (+) z"));
        let err = lift_with(
            &m,
            Flavor::Cbv,
            ProbRelation::EvalFull,
            |_, _, _| EntryChoice::Stay,
            1 << 10,
        )
        .unwrap_err();
        assert!(matches!(err, StepError::FrozenReducible { .. }));
    }

    #[test]
    fn entry_budget_is_enforced() {
        let m = MultiDist::singleton(t("(y (+) y) (+) (y (+) y)"));
        let err = run_prob(
            &m,
            Flavor::Cbv,
            ProbRelation::EvalFull,
            ProbScheduler::Leftmost,
            10,
            3,
        )
        .unwrap_err();
        assert!(matches!(err, StepError::EntryBudget { .. }));
    }

    #[test]
    fn schedulers_agree_where_every_entry_has_one_redex() {
        let m = MultiDist::singleton(t("((\\x.x) y) (+) ((\\x.x) z)"));
        let mut finals = Vec::new();
        for s in [
            ProbScheduler::Leftmost,
            ProbScheduler::Rightmost,
            ProbScheduler::Random(11),
            ProbScheduler::ParallelLeftmost,
        ] {
            let trace =
                run_prob(&m, Flavor::Cbv, ProbRelation::EvalFull, s, 20, 1 << 10).unwrap();
            assert_eq!(trace.status, "terminated", "{}", s.name());
            finals.push(trace.final_state().clone());
        }
        for f in &finals[1..] {
            assert_eq!(f, &finals[0]);
        }
        let expect = MultiDist::new(vec![(half(), t("y")), (half(), t("z"))]).unwrap();
        assert_eq!(finals[0], expect);
    }

    #[test]
    fn norm_observations_grow_along_runs() {
        let m = MultiDist::singleton(t("(\\x.x) (y (+) ((\\u.u) z))"));
        let trace = run_prob(
            &m,
            Flavor::Cbv,
            ProbRelation::EvalFull,
            ProbScheduler::Leftmost,
            20,
            1 << 10,
        )
        .unwrap();
        assert_eq!(trace.status, "terminated");
        let mut prev = zero();
        for m in &trace.states {
            let pn = norm_mass(m, Flavor::Cbv);
            assert!(prev <= pn);
            prev = pn;
        }
        assert_eq!(prev, one());
        let d = norm_dist(trace.final_state(), Flavor::Cbv);
        assert_eq!(d.weight(&t("y")), half());
        assert_eq!(d.weight(&t("z")), half());
    }

    #[test]
    fn multidist_equality_is_multiset_equality() {
        let a = MultiDist::new(vec![(half(), t("y")), (half(), t("z"))]).unwrap();
        let b = MultiDist::new(vec![(half(), t("z")), (half(), t("y"))]).unwrap();
        let c = MultiDist::new(vec![(half(), t("y")), (rat(1, 4), t("z"))]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut s = HashSet::new();
        s.insert(a);
        assert!(s.contains(&b));
    }

    #[test]
    fn weights_outside_unit_interval_are_rejected() {
        assert!(MultiDist::new(vec![(rat(3, 2), t("y"))]).is_err());
        assert!(MultiDist::new(vec![(zero(), t("y"))]).is_err());
        assert!(MultiDist::new(vec![(half(), t("y")), (rat(2, 3), t("z"))]).is_err());
    }
}
