//! Flag parsing and validation: which relations, policies and observations
//! make sense for which calculus, and how they map onto engine types.

use std::fmt;

use asymlam::effects::{OutputRelation, PayoffRelation};
use asymlam::prob::{Flavor, ProbRelation, ProbScheduler};
use asymlam::reduction::ContextClass;
use asymlam::strategy::{PureRelation, UnbiasedSpec};
use asymlam::Signature;

/// Alphabet accepted for print operators when none is configured.
pub const DEFAULT_ALPHABET: &str = "0123456789";

#[derive(Debug, Clone)]
pub enum CliError {
    /// A term (or corpus line) failed to parse, or an input file is
    /// unreadable. Exit code 2.
    Parse(String),
    /// The flag combination is invalid for the requested run. Exit code 3.
    Config(String),
    /// A lifted state outgrew the entry budget. Exit code 4.
    Budget(String),
    /// The engine reported an unexpected failure. Exit code 1.
    Run(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Config(_) => 3,
            CliError::Budget(_) => 4,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

pub fn step_err(e: asymlam::StepError) -> CliError {
    match e {
        asymlam::StepError::EntryBudget { .. } => CliError::Budget(e.to_string()),
        asymlam::StepError::Config(_) => CliError::Config(e.to_string()),
        other => CliError::Run(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calculus {
    PureCbn,
    PureCbv,
    ProbCbn,
    ProbCbv,
    Payoff,
    Output,
}

impl Calculus {
    pub fn parse(s: &str) -> Result<Calculus, CliError> {
        match s {
            "pure-cbn" => Ok(Calculus::PureCbn),
            "pure-cbv" => Ok(Calculus::PureCbv),
            "prob-cbn" => Ok(Calculus::ProbCbn),
            "prob-cbv" => Ok(Calculus::ProbCbv),
            "payoff" => Ok(Calculus::Payoff),
            "output" => Ok(Calculus::Output),
            other => Err(CliError::Config(format!(
                "unknown calculus `{other}` (expected pure-cbn, pure-cbv, prob-cbn, prob-cbv, payoff or output)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Calculus::PureCbn => "pure-cbn",
            Calculus::PureCbv => "pure-cbv",
            Calculus::ProbCbn => "prob-cbn",
            Calculus::ProbCbv => "prob-cbv",
            Calculus::Payoff => "payoff",
            Calculus::Output => "output",
        }
    }

    pub fn signature(&self) -> Signature {
        match self {
            Calculus::PureCbn | Calculus::PureCbv => Signature::pure(),
            Calculus::ProbCbn | Calculus::ProbCbv => Signature::prob(),
            Calculus::Payoff => Signature::payoff(),
            Calculus::Output => Signature::output(DEFAULT_ALPHABET),
        }
    }

    /// Corpora for the effectful calculi must be closed so every operator
    /// occurrence can actually fire.
    pub fn closed_corpus(&self) -> bool {
        matches!(self, Calculus::Payoff | Calculus::Output)
    }
}

/// A `(calculus, relation)` pair resolved to the engine relation it runs.
#[derive(Debug, Clone, Copy)]
pub enum Resolved {
    Pure { spec: UnbiasedSpec, relation: PureRelation },
    Prob { flavor: Flavor, relation: ProbRelation },
    Payoff { relation: PayoffRelation },
    Output { relation: OutputRelation },
}

pub fn resolve_relation(calculus: Calculus, relation: &str) -> Result<Resolved, CliError> {
    let bad = |valid: &str| {
        Err(CliError::Config(format!(
            "relation `{relation}` is not available for calculus `{}` (valid: {valid})",
            calculus.name()
        )))
    };
    match calculus {
        Calculus::PureCbn => {
            let spec = UnbiasedSpec::cbn();
            let rel = match relation {
                "full" => PureRelation::Full,
                "surface" => PureRelation::Class(ContextClass::Head),
                "u" => PureRelation::Unbiased,
                "pd" => PureRelation::Parallel,
                _ => return bad("full, surface, u, pd"),
            };
            Ok(Resolved::Pure { spec, relation: rel })
        }
        Calculus::PureCbv => {
            let spec = UnbiasedSpec::cbv();
            let rel = match relation {
                "full" => PureRelation::Full,
                "surface" => PureRelation::Class(ContextClass::Weak),
                "left" => PureRelation::Class(ContextClass::Left),
                "right" => PureRelation::Class(ContextClass::Right),
                "u" => PureRelation::Unbiased,
                "pd" => PureRelation::Parallel,
                _ => return bad("full, surface, left, right, u, pd"),
            };
            Ok(Resolved::Pure { spec, relation: rel })
        }
        Calculus::ProbCbn | Calculus::ProbCbv => {
            let flavor = if calculus == Calculus::ProbCbn { Flavor::Cbn } else { Flavor::Cbv };
            let rel = match relation {
                "full" => ProbRelation::Big,
                "surface" => ProbRelation::SurfaceFull,
                "ll" => ProbRelation::Eval,
                "llfull" => ProbRelation::EvalFull,
                _ => return bad("full, surface, ll, llfull"),
            };
            Ok(Resolved::Prob { flavor, relation: rel })
        }
        Calculus::Payoff => {
            let rel = match relation {
                "full" => PayoffRelation::Full,
                "surface" => PayoffRelation::Weak,
                "left" => PayoffRelation::Left,
                "right" => PayoffRelation::Right,
                "pw" => PayoffRelation::ParallelWeak,
                _ => return bad("full, surface, left, right, pw"),
            };
            Ok(Resolved::Payoff { relation: rel })
        }
        Calculus::Output => {
            let rel = match relation {
                "full" => OutputRelation::Full,
                "surface" => OutputRelation::Weak,
                _ => return bad("full, surface"),
            };
            Ok(Resolved::Output { relation: rel })
        }
    }
}

/// How a single run picks among the enumerated successors of each state.
#[derive(Debug, Clone, Copy)]
pub enum Policy {
    Leftmost,
    Rightmost,
    Random(u64),
}

impl Policy {
    pub fn parse(s: Option<&str>, seed: Option<u64>) -> Result<Policy, CliError> {
        match s.unwrap_or("leftmost") {
            "leftmost" => Ok(Policy::Leftmost),
            "rightmost" => Ok(Policy::Rightmost),
            "random" => Ok(Policy::Random(seed.unwrap_or(0))),
            other => Err(CliError::Config(format!(
                "unknown policy `{other}` (expected leftmost, rightmost or random)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Leftmost => "leftmost",
            Policy::Rightmost => "rightmost",
            Policy::Random(_) => "random",
        }
    }

    pub fn scheduler(&self) -> ProbScheduler {
        match self {
            Policy::Leftmost => ProbScheduler::Leftmost,
            Policy::Rightmost => ProbScheduler::Rightmost,
            Policy::Random(seed) => ProbScheduler::Random(*seed),
        }
    }
}

/// Observation selected for a run or check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObsChoice {
    /// Flat normal-form observation: bottom until a normal form is reached.
    Nf,
    /// Partial normal form (tree approximant) of the current term.
    Pnf,
    /// Probability mass on normal forms.
    Pn,
    /// Subdistribution over normal forms.
    NDist,
    /// Ticks fired so far.
    Counter,
    /// Characters printed so far.
    Buffer,
}

impl ObsChoice {
    pub fn name(&self) -> &'static str {
        match self {
            ObsChoice::Nf => "nf",
            ObsChoice::Pnf => "pnf",
            ObsChoice::Pn => "pn",
            ObsChoice::NDist => "N",
            ObsChoice::Counter => "counter",
            ObsChoice::Buffer => "buffer",
        }
    }
}

pub fn resolve_obs(calculus: Calculus, requested: Option<&str>) -> Result<ObsChoice, CliError> {
    let bad = |valid: &str, got: &str| {
        Err(CliError::Config(format!(
            "observation `{got}` is not available for calculus `{}` (valid: {valid})",
            calculus.name()
        )))
    };
    match calculus {
        Calculus::PureCbn | Calculus::PureCbv => match requested {
            None | Some("nf") => Ok(ObsChoice::Nf),
            Some("pnf") => Ok(ObsChoice::Pnf),
            Some(other) => bad("nf, pnf", other),
        },
        Calculus::ProbCbn | Calculus::ProbCbv => match requested {
            None | Some("pn") => Ok(ObsChoice::Pn),
            Some("N") | Some("n") => Ok(ObsChoice::NDist),
            Some(other) => bad("pn, N", other),
        },
        Calculus::Payoff => match requested {
            None | Some("counter") => Ok(ObsChoice::Counter),
            Some(other) => bad("counter", other),
        },
        Calculus::Output => match requested {
            None | Some("buffer") => Ok(ObsChoice::Buffer),
            Some(other) => bad("buffer", other),
        },
    }
}

/// Parsed form of `--gen size=8,count=500,seed=7`.
#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub size: usize,
    pub count: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn parse(s: &str) -> Result<GenSpec, CliError> {
        let mut spec = GenSpec { size: 8, count: 100, seed: 0 };
        for part in s.split(',').filter(|p| !p.is_empty()) {
            let Some((key, value)) = part.split_once('=') else {
                return Err(CliError::Config(format!(
                    "malformed generator spec item `{part}` (expected key=value)"
                )));
            };
            let parse_num = |what: &str| {
                value.parse::<u64>().map_err(|_| {
                    CliError::Config(format!("generator {what} `{value}` is not a number"))
                })
            };
            match key {
                "size" => spec.size = parse_num("size")? as usize,
                "count" => spec.count = parse_num("count")? as usize,
                "seed" => spec.seed = parse_num("seed")?,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown generator key `{other}` (expected size, count or seed)"
                    )))
                }
            }
        }
        if spec.size == 0 || spec.count == 0 {
            return Err(CliError::Config("generator size and count must be positive".to_string()));
        }
        Ok(spec)
    }
}

pub fn parse_format(s: &str) -> Result<bool, CliError> {
    match s {
        "json" => Ok(true),
        "text" => Ok(false),
        other => Err(CliError::Config(format!(
            "unknown format `{other}` (expected json or text)"
        ))),
    }
}
