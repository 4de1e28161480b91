//! Subcommand drivers: resolve a configuration, run the engine, and render
//! the result as JSON or text together with the process exit code.

use std::collections::BTreeSet;

use asymlam::bohm::{bt_chain, pnf_observation, BtApprox};
use asymlam::effects::{
    output_buffer, payoff_counter, OutputState, OutputSystem, PayoffState, PayoffSystem,
};
use asymlam::generate::{generate_terms, GenConfig};
use asymlam::prob::{
    default_entry_budget, norm_dist, norm_mass, run_prob, Flavor, MultiDist, ProbSystem,
};
use asymlam::qars::{
    check_monotonicity, check_neutrality, check_obs_diamond, CheckReport, LimitApprox,
    LimitStatus, ObsValue, Observation, Qars,
};
use asymlam::reduction::{redexes, ContextClass, RuleKind};
use asymlam::strategy::{check_rd_diamond, Mode, PureRelation, PureSystem};
use asymlam::{parse_term, OpSym, Signature, StepError, Term};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    resolve_obs, resolve_relation, step_err, Calculus, CliError, GenSpec, ObsChoice, Policy,
    Resolved,
};

// ---------------------------------------------------------------------------
// shared JSON envelope pieces

/// Echo of the resolved configuration, embedded in every JSON response so
/// outputs are self-describing and reproducible.
#[derive(Serialize)]
pub struct ConfigEcho {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calculus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fuel: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obs: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen: Option<String>,
    pub format: String,
}

impl ConfigEcho {
    fn new(command: &str, json: bool) -> ConfigEcho {
        ConfigEcho {
            command: command.to_string(),
            calculus: None,
            relation: None,
            check: None,
            policy: None,
            fuel: None,
            seed: None,
            obs: None,
            depth: None,
            gen: None,
            format: if json { "json" } else { "text" }.to_string(),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Run(format!("serialization failed: {e}")))
}

fn status_name(status: LimitStatus) -> &'static str {
    match status {
        LimitStatus::Exact => "exact",
        LimitStatus::LowerBound => "lower-bound",
    }
}

// ---------------------------------------------------------------------------
// reduce

#[derive(Serialize)]
struct StepJson {
    step: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    counter: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffer: Option<String>,
    term: String,
    obs: String,
}

#[derive(Serialize)]
struct ReduceJson<T: Serialize> {
    config: ConfigEcho,
    input: String,
    steps: Vec<T>,
    limit: LimitApprox,
}

pub struct ReduceRequest {
    pub calculus: String,
    pub relation: String,
    pub policy: Option<String>,
    pub fuel: usize,
    pub seed: Option<u64>,
    pub obs: Option<String>,
    pub format: String,
    pub source: String,
}

/// Follows one policy-resolved trajectory for up to `fuel` steps. The limit
/// approximant is exact when the observation hit a maximal value, the state
/// has no successors, or every successor loops back to the same state.
fn drive<Q: Qars>(
    sys: &Q,
    obs: &Observation<Q::State>,
    start: Q::State,
    fuel: usize,
    policy: Policy,
) -> Result<(Vec<Q::State>, Vec<ObsValue>, LimitApprox), CliError> {
    let mut rng = match policy {
        Policy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut states = vec![start];
    let mut values = vec![obs.apply(&states[0])];
    let mut status = LimitStatus::LowerBound;
    for _ in 0..fuel {
        if values.last().unwrap().is_maximal() {
            status = LimitStatus::Exact;
            break;
        }
        let cur = states.last().unwrap().clone();
        let succs = sys.successors(&cur).map_err(step_err)?;
        let Some(first) = succs.first() else {
            status = LimitStatus::Exact;
            break;
        };
        let next = match policy {
            Policy::Leftmost => first.clone(),
            Policy::Rightmost => succs.last().unwrap().clone(),
            Policy::Random(_) => {
                let ix = rng.as_mut().unwrap().gen_range(0..succs.len());
                succs[ix].clone()
            }
        };
        if next == cur && succs.iter().all(|u| *u == cur) {
            status = LimitStatus::Exact;
            break;
        }
        let v = obs.apply(&next);
        let prev = values.last().unwrap();
        if !prev.leq(&v) {
            return Err(CliError::Run(format!(
                "observation `{}` decreased from {} to {}",
                obs.name(),
                prev.render(),
                v.render()
            )));
        }
        states.push(next);
        values.push(v);
    }
    let depth = states.len() - 1;
    let approx = LimitApprox { value: values.last().unwrap().clone(), status, depth };
    Ok((states, values, approx))
}

fn nf_observation(rule: RuleKind) -> Observation<Term> {
    Observation::new("nf", move |t: &Term| {
        ObsValue::FlatTerm(redexes(t, rule, ContextClass::Full).is_empty().then(|| t.clone()))
    })
}

fn reduce_text(steps: &[StepJson], limit: &LimitApprox) -> String {
    let mut out = String::new();
    for s in steps {
        out.push_str(&format!("step {}:", s.step));
        if let Some(c) = s.counter {
            out.push_str(&format!(" counter={c}"));
        }
        if let Some(b) = &s.buffer {
            out.push_str(&format!(" buffer=\"{b}\""));
        }
        out.push_str(&format!(" {}   obs={}\n", s.term, s.obs));
    }
    out.push_str(&format!(
        "limit: {} ({}) at depth {}\n",
        limit.value.render(),
        status_name(limit.status),
        limit.depth
    ));
    out
}

pub fn cmd_reduce(req: ReduceRequest) -> Result<(String, i32), CliError> {
    let calculus = Calculus::parse(&req.calculus)?;
    let json = crate::config::parse_format(&req.format)?;
    let resolved = resolve_relation(calculus, &req.relation)?;
    let policy = Policy::parse(req.policy.as_deref(), req.seed)?;
    let obs_choice = resolve_obs(calculus, req.obs.as_deref())?;
    let term = parse_term(&req.source, &calculus.signature())
        .map_err(|e| CliError::Parse(e.to_string()))?;

    let mut config = ConfigEcho::new("reduce", json);
    config.calculus = Some(calculus.name().to_string());
    config.relation = Some(req.relation.clone());
    config.policy = Some(policy.name().to_string());
    config.fuel = Some(req.fuel);
    config.seed = req.seed;
    config.obs = Some(obs_choice.name().to_string());

    match resolved {
        Resolved::Pure { spec, relation } => {
            let sys = PureSystem::new(spec, relation, Mode::All);
            let obs = match obs_choice {
                ObsChoice::Nf => nf_observation(spec.rule),
                ObsChoice::Pnf => pnf_observation(),
                _ => unreachable!("resolve_obs only admits pure observations"),
            };
            let (states, values, limit) = drive(&sys, &obs, term.clone(), req.fuel, policy)?;
            let steps: Vec<StepJson> = states
                .iter()
                .zip(&values)
                .enumerate()
                .map(|(i, (t, v))| StepJson {
                    step: i,
                    counter: None,
                    buffer: None,
                    term: t.to_string(),
                    obs: v.render(),
                })
                .collect();
            let body = ReduceJson { config, input: term.to_string(), steps, limit };
            let out = if json { to_json(&body)? } else { reduce_text(&body.steps, &body.limit) };
            Ok((out, 0))
        }
        Resolved::Prob { flavor, relation } => {
            let m0 = MultiDist::singleton(term.clone());
            let trace = run_prob(
                &m0,
                flavor,
                relation,
                policy.scheduler(),
                req.fuel,
                default_entry_budget(),
            )
            .map_err(step_err)?;
            let last = trace.states.last().unwrap();
            let value = match obs_choice {
                ObsChoice::Pn => ObsValue::Rat(norm_mass(last, flavor)),
                ObsChoice::NDist => ObsValue::Dist(norm_dist(last, flavor)),
                _ => unreachable!("resolve_obs only admits probabilistic observations"),
            };
            let status = if trace.status == "terminated" || value.is_maximal() {
                LimitStatus::Exact
            } else {
                LimitStatus::LowerBound
            };
            let limit = LimitApprox { value, status, depth: trace.states.len() - 1 };
            if json {
                let body = ReduceJson {
                    config,
                    input: term.to_string(),
                    steps: trace.steps,
                    limit,
                };
                Ok((to_json(&body)?, 0))
            } else {
                let mut out = String::new();
                for s in &trace.steps {
                    out.push_str(&format!(
                        "step {}: pn={} entries={} fired=[{}]\n",
                        s.i,
                        s.obs_pn,
                        s.dist.len(),
                        s.fired.join(", ")
                    ));
                }
                out.push_str(&format!(
                    "limit: {} ({}) at depth {}\n",
                    limit.value.render(),
                    status_name(limit.status),
                    limit.depth
                ));
                Ok((out, 0))
            }
        }
        Resolved::Payoff { relation } => {
            let sys = PayoffSystem::new(relation, Mode::All);
            let obs = payoff_counter();
            let start = PayoffState::start(term.clone());
            let (states, values, limit) = drive(&sys, &obs, start, req.fuel, policy)?;
            let steps: Vec<StepJson> = states
                .iter()
                .zip(&values)
                .enumerate()
                .map(|(i, (s, v))| StepJson {
                    step: i,
                    counter: Some(s.count),
                    buffer: None,
                    term: s.term.to_string(),
                    obs: v.render(),
                })
                .collect();
            let body = ReduceJson { config, input: term.to_string(), steps, limit };
            let out = if json { to_json(&body)? } else { reduce_text(&body.steps, &body.limit) };
            Ok((out, 0))
        }
        Resolved::Output { relation } => {
            let sys = OutputSystem::new(relation, Mode::All);
            let obs = output_buffer();
            let start = OutputState::start(term.clone());
            let (states, values, limit) = drive(&sys, &obs, start, req.fuel, policy)?;
            let steps: Vec<StepJson> = states
                .iter()
                .zip(&values)
                .enumerate()
                .map(|(i, (s, v))| StepJson {
                    step: i,
                    counter: None,
                    buffer: Some(s.buffer.clone()),
                    term: s.term.to_string(),
                    obs: v.render(),
                })
                .collect();
            let body = ReduceJson { config, input: term.to_string(), steps, limit };
            let out = if json { to_json(&body)? } else { reduce_text(&body.steps, &body.limit) };
            Ok((out, 0))
        }
    }
}

// ---------------------------------------------------------------------------
// check

#[derive(Serialize)]
struct CheckJson {
    config: ConfigEcho,
    report: CheckReport,
}

pub struct CheckRequest {
    pub name: String,
    pub calculus: String,
    pub relation: Option<String>,
    pub obs: Option<String>,
    pub gen: Option<String>,
    pub corpus: Option<Vec<String>>,
    pub gen_echo: Option<String>,
    pub allow_inconclusive: bool,
    pub format: String,
}

/// The payoff steps outside the weak strategy: full-relation successors that
/// no weak step reaches. Used by the neutrality check.
struct PayoffInternalSystem {
    full: PayoffSystem,
    weak: PayoffSystem,
}

impl PayoffInternalSystem {
    fn new() -> PayoffInternalSystem {
        PayoffInternalSystem {
            full: PayoffSystem::new(asymlam::effects::PayoffRelation::Full, Mode::All),
            weak: PayoffSystem::new(asymlam::effects::PayoffRelation::Weak, Mode::All),
        }
    }
}

impl Qars for PayoffInternalSystem {
    type State = PayoffState;

    fn name(&self) -> String {
        "payoff-internal".to_string()
    }

    fn successors(&self, s: &PayoffState) -> Result<Vec<PayoffState>, StepError> {
        let weak: BTreeSet<PayoffState> = self.weak.successors(s)?.into_iter().collect();
        Ok(self.full.successors(s)?.into_iter().filter(|u| !weak.contains(u)).collect())
    }

    fn render(&self, s: &PayoffState) -> String {
        s.to_string()
    }
}

fn prob_observation(choice: ObsChoice, flavor: Flavor) -> Observation<MultiDist> {
    match choice {
        ObsChoice::Pn => {
            Observation::new("pn", move |m: &MultiDist| ObsValue::Rat(norm_mass(m, flavor)))
        }
        ObsChoice::NDist => {
            Observation::new("N", move |m: &MultiDist| ObsValue::Dist(norm_dist(m, flavor)))
        }
        _ => unreachable!("resolve_obs only admits probabilistic observations"),
    }
}

fn build_corpus(
    calculus: Calculus,
    gen: Option<&str>,
    corpus_lines: Option<&[String]>,
) -> Result<Vec<Term>, CliError> {
    match (gen, corpus_lines) {
        (Some(spec), None) => {
            let spec = GenSpec::parse(spec)?;
            let mut cfg = GenConfig::new(spec.size, spec.count, spec.seed, calculus.signature());
            cfg.closed = calculus.closed_corpus();
            Ok(generate_terms(&cfg))
        }
        (None, Some(lines)) => {
            let sig = calculus.signature();
            lines
                .iter()
                .map(|line| parse_term(line, &sig).map_err(|e| CliError::Parse(e.to_string())))
                .collect()
        }
        (Some(_), Some(_)) => {
            Err(CliError::Config("pass either --gen or --file, not both".to_string()))
        }
        (None, None) => {
            Err(CliError::Config("a corpus is required: pass --gen or --file".to_string()))
        }
    }
}

fn check_text(report: &CheckReport) -> String {
    let mut out = format!(
        "check {}: {} (corpus {}, violations {}, inconclusive {})\n",
        report.check,
        report.status,
        report.corpus_size,
        report.violations.len(),
        report.inconclusive.len()
    );
    for v in report.violations.iter().take(5) {
        out.push_str(&format!("violation at {}: {}\n", v.state, v.detail));
    }
    for v in report.inconclusive.iter().take(5) {
        out.push_str(&format!("inconclusive at {}: {}\n", v.state, v.detail));
    }
    out
}

pub fn cmd_check(req: CheckRequest) -> Result<(String, i32), CliError> {
    let calculus = Calculus::parse(&req.calculus)?;
    let json = crate::config::parse_format(&req.format)?;
    let corpus = build_corpus(calculus, req.gen.as_deref(), req.corpus.as_deref())?;

    let needs_relation = matches!(req.name.as_str(), "rd-diamond" | "obs-diamond" | "monotonicity");
    match req.name.as_str() {
        "rd-diamond" | "obs-diamond" | "monotonicity" | "neutrality" => {}
        other => {
            return Err(CliError::Config(format!(
                "unknown check `{other}` (expected rd-diamond, obs-diamond, neutrality or monotonicity)"
            )))
        }
    }
    if needs_relation && req.relation.is_none() {
        return Err(CliError::Config(format!("check `{}` requires --relation", req.name)));
    }
    if !needs_relation && req.relation.is_some() {
        return Err(CliError::Config(
            "check `neutrality` always runs the internal relation; drop --relation".to_string(),
        ));
    }
    if req.name == "rd-diamond" && req.obs.is_some() {
        return Err(CliError::Config("check `rd-diamond` takes no --obs".to_string()));
    }

    let obs_choice = resolve_obs(calculus, req.obs.as_deref())?;
    let report: CheckReport = match calculus {
        Calculus::PureCbn | Calculus::PureCbv => {
            let spec = match calculus {
                Calculus::PureCbn => asymlam::strategy::UnbiasedSpec::cbn(),
                _ => asymlam::strategy::UnbiasedSpec::cbv(),
            };
            let obs = match obs_choice {
                ObsChoice::Nf => nf_observation(spec.rule),
                ObsChoice::Pnf => pnf_observation(),
                _ => unreachable!(),
            };
            let relation = match req.relation.as_deref() {
                Some(r) => match resolve_relation(calculus, r)? {
                    Resolved::Pure { relation, .. } => relation,
                    _ => unreachable!(),
                },
                None => PureRelation::Internal,
            };
            let sys = PureSystem::new(spec, relation, Mode::All);
            match req.name.as_str() {
                "rd-diamond" => check_rd_diamond(&sys, &corpus),
                "obs-diamond" => check_obs_diamond(&sys, &obs, &corpus),
                "monotonicity" => check_monotonicity(&sys, &obs, &corpus),
                _ => check_neutrality(&sys, &obs, &corpus),
            }
            .map_err(step_err)?
        }
        Calculus::ProbCbn | Calculus::ProbCbv => {
            let flavor =
                if calculus == Calculus::ProbCbn { Flavor::Cbn } else { Flavor::Cbv };
            let obs = prob_observation(obs_choice, flavor);
            let relation = match req.relation.as_deref() {
                Some(r) => match resolve_relation(calculus, r)? {
                    Resolved::Prob { relation, .. } => relation,
                    _ => unreachable!(),
                },
                None => asymlam::prob::ProbRelation::Internal,
            };
            let sys = ProbSystem::enumerating(flavor, relation);
            let states: Vec<MultiDist> =
                corpus.into_iter().map(MultiDist::singleton).collect();
            match req.name.as_str() {
                "rd-diamond" => check_rd_diamond(&sys, &states),
                "obs-diamond" => check_obs_diamond(&sys, &obs, &states),
                "monotonicity" => check_monotonicity(&sys, &obs, &states),
                _ => check_neutrality(&sys, &obs, &states),
            }
            .map_err(step_err)?
        }
        Calculus::Payoff => {
            let obs = payoff_counter();
            let states: Vec<PayoffState> =
                corpus.into_iter().map(PayoffState::start).collect();
            if req.name == "neutrality" {
                let sys = PayoffInternalSystem::new();
                check_neutrality(&sys, &obs, &states).map_err(step_err)?
            } else {
                let relation = match resolve_relation(calculus, req.relation.as_deref().unwrap())? {
                    Resolved::Payoff { relation } => relation,
                    _ => unreachable!(),
                };
                let sys = PayoffSystem::new(relation, Mode::All);
                match req.name.as_str() {
                    "rd-diamond" => check_rd_diamond(&sys, &states),
                    "obs-diamond" => check_obs_diamond(&sys, &obs, &states),
                    _ => check_monotonicity(&sys, &obs, &states),
                }
                .map_err(step_err)?
            }
        }
        Calculus::Output => {
            if req.name == "neutrality" {
                return Err(CliError::Config(
                    "calculus `output` has no internal relation to check neutrality on"
                        .to_string(),
                ));
            }
            let obs = output_buffer();
            let states: Vec<OutputState> =
                corpus.into_iter().map(OutputState::start).collect();
            let relation = match resolve_relation(calculus, req.relation.as_deref().unwrap())? {
                Resolved::Output { relation } => relation,
                _ => unreachable!(),
            };
            let sys = OutputSystem::new(relation, Mode::All);
            match req.name.as_str() {
                "rd-diamond" => check_rd_diamond(&sys, &states),
                "obs-diamond" => check_obs_diamond(&sys, &obs, &states),
                _ => check_monotonicity(&sys, &obs, &states),
            }
            .map_err(step_err)?
        }
    };

    let exit = if !report.violations.is_empty() {
        1
    } else if !report.inconclusive.is_empty() && !req.allow_inconclusive {
        1
    } else {
        0
    };

    let mut config = ConfigEcho::new("check", json);
    config.check = Some(req.name.clone());
    config.calculus = Some(calculus.name().to_string());
    config.relation = req.relation.clone();
    config.obs = if req.name == "rd-diamond" { None } else { Some(obs_choice.name().to_string()) };
    config.gen = req.gen_echo;

    let out = if json {
        to_json(&CheckJson { config, report })?
    } else {
        check_text(&report)
    };
    Ok((out, exit))
}

// ---------------------------------------------------------------------------
// bohm

#[derive(Serialize)]
struct BohmJson {
    config: ConfigEcho,
    input: String,
    result: BtApprox,
}

pub struct BohmRequest {
    pub depth: usize,
    pub format: String,
    pub source: String,
}

fn contains_op(t: &Term) -> bool {
    match t {
        Term::Op(..) => true,
        Term::Lam(_, body) => contains_op(body),
        Term::App(f, a) => contains_op(f) || contains_op(a),
        Term::Bound(_) | Term::Free(_) => false,
    }
}

/// Signature accepting every operator the tool knows, so operator misuse is
/// reported as a configuration problem rather than a parse failure.
fn permissive_signature() -> Signature {
    let mut ops = vec![OpSym::oplus(), OpSym::tick()];
    ops.extend(crate::config::DEFAULT_ALPHABET.chars().map(OpSym::print));
    Signature::new(ops)
}

pub fn cmd_bohm(req: BohmRequest) -> Result<(String, i32), CliError> {
    let json = crate::config::parse_format(&req.format)?;
    let term = parse_term(&req.source, &permissive_signature())
        .map_err(|e| CliError::Parse(e.to_string()))?;
    if contains_op(&term) {
        return Err(CliError::Config(
            "tree approximants are defined for operator-free terms only".to_string(),
        ));
    }
    let result = bt_chain(&term, req.depth).map_err(step_err)?;

    let mut config = ConfigEcho::new("bohm", json);
    config.depth = Some(req.depth);

    if json {
        Ok((to_json(&BohmJson { config, input: term.to_string(), result })?, 0))
    } else {
        let mut out = String::new();
        for (i, r) in result.rendered.iter().enumerate() {
            out.push_str(&format!("depth {i}: {r}\n"));
        }
        if result.stabilized {
            out.push_str("(chain stabilized before the depth bound)\n");
        }
        Ok((out, 0))
    }
}
