//! Effectful call-by-value calculi: tick counting and character output.
//!
//! Both instrument reduction with an accumulator carried next to the term.
//! Payoff states pair a counter with a term; a `tick` step increments the
//! counter. Output states pair a buffer with a term; a `print[c]` step
//! prepends `c` to the buffer, so earlier output survives as a suffix of
//! later buffers and the buffer observation is monotone in the suffix order.

use std::fmt;

use crate::error::StepError;
use crate::qars::{NatInf, Observation, ObsValue, Qars};
use crate::reduction::{redexes_multi, step, ContextClass, Effect, Redex, RuleKind, StepResult};
use crate::strategy::Mode;
use crate::term::Term;

/// A term together with the number of ticks fired so far.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PayoffState {
    pub count: u64,
    pub term: Term,
}

impl PayoffState {
    pub fn start(term: Term) -> PayoffState {
        PayoffState { count: 0, term }
    }
}

impl fmt::Display for PayoffState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} : {}>", self.count, self.term)
    }
}

/// Where payoff steps may fire. Beta-value follows the named context class;
/// `tick` only ever fires at weak positions — even in the full relation,
/// ticks under a binder stay latent until the binder is consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoffRelation {
    Weak,
    Left,
    Right,
    Full,
    /// One deterministic parallel-weak development per step.
    ParallelWeak,
}

impl PayoffRelation {
    pub fn name(&self) -> &'static str {
        match self {
            PayoffRelation::Weak => "weak",
            PayoffRelation::Left => "left",
            PayoffRelation::Right => "right",
            PayoffRelation::Full => "full",
            PayoffRelation::ParallelWeak => "parallel-weak",
        }
    }

    pub fn pairs(&self) -> Vec<(RuleKind, ContextClass)> {
        match self {
            PayoffRelation::Weak => {
                vec![(RuleKind::BetaV, ContextClass::Weak), (RuleKind::Tick, ContextClass::Weak)]
            }
            PayoffRelation::Left => {
                vec![(RuleKind::BetaV, ContextClass::Left), (RuleKind::Tick, ContextClass::Left)]
            }
            PayoffRelation::Right => {
                vec![(RuleKind::BetaV, ContextClass::Right), (RuleKind::Tick, ContextClass::Right)]
            }
            PayoffRelation::Full => {
                vec![(RuleKind::BetaV, ContextClass::Full), (RuleKind::Tick, ContextClass::Weak)]
            }
            PayoffRelation::ParallelWeak => {
                unreachable!("parallel developments are not redex-driven")
            }
        }
    }
}

fn fire_payoff(s: &PayoffState, r: &Redex) -> Result<PayoffState, StepError> {
    match step(&s.term, r)? {
        StepResult::One(u) => Ok(PayoffState { count: s.count, term: u }),
        StepResult::Emit(Effect::Tick, u) => Ok(PayoffState { count: s.count + 1, term: u }),
        StepResult::Emit(Effect::Print(_), _) | StepResult::Split(_) => Err(StepError::Config(
            "only beta-value and tick belong to the payoff calculus".to_string(),
        )),
    }
}

pub fn payoff_redexes(t: &Term, rel: PayoffRelation) -> Vec<Redex> {
    redexes_multi(t, &rel.pairs())
}

/// All one-step successors of a payoff state under a redex-driven relation.
pub fn payoff_successors(s: &PayoffState, rel: PayoffRelation) -> Result<Vec<PayoffState>, StepError> {
    if rel == PayoffRelation::ParallelWeak {
        let next = payoff_parallel_step(s)?;
        return Ok(if next == *s { vec![] } else { vec![next] });
    }
    payoff_redexes(&s.term, rel).iter().map(|r| fire_payoff(s, r)).collect()
}

/// One parallel-weak development: fire the root redex alone if there is one
/// (counting a root tick); leave values alone; otherwise develop both sides
/// of an application and add their tick counts. Deterministic and total;
/// stationary exactly on weak normal forms.
pub fn payoff_parallel_step(s: &PayoffState) -> Result<PayoffState, StepError> {
    fn pw(t: &Term) -> Result<(u64, Term), StepError> {
        if RuleKind::BetaV.matches_root(t) {
            let u = step(t, &Redex { pos: crate::term::Position::root(), rule: RuleKind::BetaV })?
                .into_one();
            return Ok((0, u));
        }
        if RuleKind::Tick.matches_root(t) {
            match step(t, &Redex { pos: crate::term::Position::root(), rule: RuleKind::Tick })? {
                StepResult::Emit(Effect::Tick, u) => return Ok((1, u)),
                _ => unreachable!("tick emits a tick"),
            }
        }
        if t.is_value() {
            return Ok((0, t.clone()));
        }
        if let Term::App(fun, arg) = t {
            let (kf, f) = pw(fun)?;
            let (ka, a) = pw(arg)?;
            return Ok((kf + ka, Term::App(Box::new(f), Box::new(a))));
        }
        Ok((0, t.clone()))
    }
    let (k, term) = pw(&s.term)?;
    Ok(PayoffState { count: s.count + k, term })
}

pub fn payoff_counter() -> Observation<PayoffState> {
    Observation::new("counter", |s: &PayoffState| ObsValue::NatInf(NatInf::Fin(s.count)))
}

/// The payoff calculus as a rewrite system.
#[derive(Debug, Clone, Copy)]
pub struct PayoffSystem {
    pub relation: PayoffRelation,
    pub mode: Mode,
}

impl PayoffSystem {
    pub fn new(relation: PayoffRelation, mode: Mode) -> PayoffSystem {
        PayoffSystem { relation, mode }
    }
}

impl Qars for PayoffSystem {
    type State = PayoffState;

    fn name(&self) -> String {
        format!("payoff-{}[{}]", self.relation.name(), self.mode.name())
    }

    fn successors(&self, s: &PayoffState) -> Result<Vec<PayoffState>, StepError> {
        if self.relation == PayoffRelation::ParallelWeak {
            return payoff_successors(s, self.relation);
        }
        let rs = payoff_redexes(&s.term, self.relation);
        let picked: Vec<&Redex> = match self.mode {
            Mode::All => rs.iter().collect(),
            Mode::Leftmost => rs.first().into_iter().collect(),
            Mode::Rightmost => rs.last().into_iter().collect(),
            Mode::Random(_) => {
                return Err(StepError::Config(
                    "random policy cannot enumerate successors deterministically".to_string(),
                ))
            }
        };
        let mut out = Vec::new();
        for r in picked {
            let u = fire_payoff(s, r)?;
            if !out.contains(&u) {
                out.push(u);
            }
        }
        Ok(out)
    }

    fn render(&self, s: &PayoffState) -> String {
        s.to_string()
    }

    fn size(&self, s: &PayoffState) -> usize {
        s.term.size()
    }
}

/// A term together with everything printed so far; the newest character
/// sits at the front of the buffer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutputState {
    pub buffer: String,
    pub term: Term,
}

impl OutputState {
    pub fn start(term: Term) -> OutputState {
        OutputState { buffer: String::new(), term }
    }
}

impl fmt::Display for OutputState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<\"{}\" : {}>", self.buffer, self.term)
    }
}

/// Like the payoff relations: beta-value at weak or full positions, prints
/// only at weak positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputRelation {
    Weak,
    Full,
}

impl OutputRelation {
    pub fn name(&self) -> &'static str {
        match self {
            OutputRelation::Weak => "weak",
            OutputRelation::Full => "full",
        }
    }

    pub fn pairs(&self) -> Vec<(RuleKind, ContextClass)> {
        match self {
            OutputRelation::Weak => {
                vec![(RuleKind::BetaV, ContextClass::Weak), (RuleKind::Print, ContextClass::Weak)]
            }
            OutputRelation::Full => {
                vec![(RuleKind::BetaV, ContextClass::Full), (RuleKind::Print, ContextClass::Weak)]
            }
        }
    }
}

fn fire_output(s: &OutputState, r: &Redex) -> Result<OutputState, StepError> {
    match step(&s.term, r)? {
        StepResult::One(u) => Ok(OutputState { buffer: s.buffer.clone(), term: u }),
        StepResult::Emit(Effect::Print(c), u) => {
            Ok(OutputState { buffer: format!("{c}{}", s.buffer), term: u })
        }
        StepResult::Emit(Effect::Tick, _) | StepResult::Split(_) => Err(StepError::Config(
            "only beta-value and print belong to the output calculus".to_string(),
        )),
    }
}

pub fn output_redexes(t: &Term, rel: OutputRelation) -> Vec<Redex> {
    redexes_multi(t, &rel.pairs())
}

pub fn output_successors(s: &OutputState, rel: OutputRelation) -> Result<Vec<OutputState>, StepError> {
    output_redexes(&s.term, rel).iter().map(|r| fire_output(s, r)).collect()
}

pub fn output_buffer() -> Observation<OutputState> {
    Observation::new("buffer", |s: &OutputState| ObsValue::Str(s.buffer.clone()))
}

/// The output calculus as a rewrite system.
#[derive(Debug, Clone, Copy)]
pub struct OutputSystem {
    pub relation: OutputRelation,
    pub mode: Mode,
}

impl OutputSystem {
    pub fn new(relation: OutputRelation, mode: Mode) -> OutputSystem {
        OutputSystem { relation, mode }
    }
}

impl Qars for OutputSystem {
    type State = OutputState;

    fn name(&self) -> String {
        format!("output-{}[{}]", self.relation.name(), self.mode.name())
    }

    fn successors(&self, s: &OutputState) -> Result<Vec<OutputState>, StepError> {
        let rs = output_redexes(&s.term, self.relation);
        let picked: Vec<&Redex> = match self.mode {
            Mode::All => rs.iter().collect(),
            Mode::Leftmost => rs.first().into_iter().collect(),
            Mode::Rightmost => rs.last().into_iter().collect(),
            Mode::Random(_) => {
                return Err(StepError::Config(
                    "random policy cannot enumerate successors deterministically".to_string(),
                ))
            }
        };
        let mut out = Vec::new();
        for r in picked {
            let u = fire_output(s, r)?;
            if !out.contains(&u) {
                out.push(u);
            }
        }
        Ok(out)
    }

    fn render(&self, s: &OutputState) -> String {
        s.to_string()
    }

    fn size(&self, s: &OutputState) -> usize {
        s.term.size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{parse_term, Signature};

    fn pt(src: &str) -> Term {
        parse_term(src, &Signature::payoff()).unwrap()
    }

    fn ot(src: &str) -> Term {
        parse_term(src, &Signature::output("01")).unwrap()
    }

    #[test]
    fn tick_increments_the_counter() {
        let s = PayoffState::start(pt("tick(\\x.x)"));
        let succs = payoff_successors(&s, PayoffRelation::Weak).unwrap();
        assert_eq!(succs, vec![PayoffState { count: 1, term: pt("\\x.x") }]);
    }

    #[test]
    fn ticks_under_binders_stay_latent_even_in_the_full_relation() {
        let m = pt("\\x.tick(x)");
        assert!(payoff_redexes(&m, PayoffRelation::Full).is_empty());
        // consuming the binder releases the tick
        let s = PayoffState::start(pt("(\\x.tick(x)) (\\y.y)"));
        let s1 = &payoff_successors(&s, PayoffRelation::Weak).unwrap()[0];
        assert_eq!(s1.term, pt("tick(\\y.y)"));
        let s2 = &payoff_successors(s1, PayoffRelation::Weak).unwrap()[0];
        assert_eq!(s2, &PayoffState { count: 1, term: pt("\\y.y") });
    }

    #[test]
    fn left_and_right_orders_count_differently() {
        // the left side loops silently, the right side ticks forever
        let silent = "(\\x.x x) (\\x.x x)";
        let noisy = "(\\x.tick(x x)) (\\x.tick(x x))";
        let m = pt(&format!("({silent}) ({noisy})"));
        let mut left = PayoffState::start(m.clone());
        let mut right = PayoffState::start(m);
        for _ in 0..20 {
            left = payoff_successors(&left, PayoffRelation::Left).unwrap()[0].clone();
            right = payoff_successors(&right, PayoffRelation::Right).unwrap()[0].clone();
        }
        assert_eq!(left.count, 0);
        // right alternates beta-value and tick
        assert_eq!(right.count, 10);
    }

    #[test]
    fn parallel_weak_counts_both_sides_at_once() {
        let m = pt("(tick(\\x.x)) (tick(\\y.y))");
        let s1 = payoff_parallel_step(&PayoffState::start(m)).unwrap();
        assert_eq!(s1, PayoffState { count: 2, term: pt("(\\x.x) (\\y.y)") });
        let s2 = payoff_parallel_step(&s1).unwrap();
        assert_eq!(s2, PayoffState { count: 2, term: pt("\\y.y") });
        // stationary on the value
        let s3 = payoff_parallel_step(&s2).unwrap();
        assert_eq!(s3, s2);
        assert!(payoff_successors(&s2, PayoffRelation::ParallelWeak).unwrap().is_empty());
    }

    #[test]
    fn parallel_weak_fires_a_root_redex_alone() {
        // the root redex takes priority: the argument's latent tick is not
        // touched in the same development
        let m = pt("(\\x.x) (\\y.tick(y))");
        let s1 = payoff_parallel_step(&PayoffState::start(m)).unwrap();
        assert_eq!(s1, PayoffState { count: 0, term: pt("\\y.tick(y)") });
    }

    #[test]
    fn print_prepends_so_old_output_is_a_suffix() {
        let s = OutputState::start(ot("print[0](print[1](\\x.x))"));
        let s1 = &output_successors(&s, OutputRelation::Weak).unwrap()[0];
        assert_eq!(s1.buffer, "0");
        let s2 = &output_successors(s1, OutputRelation::Weak).unwrap()[0];
        assert_eq!(s2.buffer, "10");
        assert!(s2.buffer.ends_with(&s1.buffer));
        assert_eq!(s2.term, ot("\\x.x"));
    }

    #[test]
    fn buffer_observation_is_monotone_in_the_suffix_order() {
        let a = ObsValue::Str("0".to_string());
        let b = ObsValue::Str("10".to_string());
        let c = ObsValue::Str("01".to_string());
        assert!(a.leq(&b));
        assert!(!b.leq(&a));
        assert!(!a.leq(&c) || c.render() == a.render());
        assert_eq!(a.join(&b), Some(b.clone()));
        assert_eq!(b.join(&c), None);
    }

    #[test]
    fn different_orders_can_commit_to_different_buffers() {
        let m = ot("(\\x.\\y.y) (print[0](\\u.u)) (print[1](\\v.v))");
        let sys = OutputSystem::new(OutputRelation::Weak, Mode::All);
        let states =
            crate::qars::reachable_states(&sys, &[OutputState::start(m)], 10, 1000).unwrap();
        let finals: std::collections::BTreeSet<String> = states
            .iter()
            .filter(|s| output_redexes(&s.term, OutputRelation::Weak).is_empty())
            .map(|s| s.buffer.clone())
            .collect();
        assert!(finals.contains("10"));
        assert!(finals.contains("01"));
    }
}
