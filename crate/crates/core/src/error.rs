use thiserror::Error;

/// Errors raised while turning source text into terms.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("parse error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown operator `{name}` at {line}:{col}")]
    UnknownOperator { name: String, line: usize, col: usize },
}

/// Errors raised by structural term operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("position does not address a subterm")]
    InvalidPosition,
    #[error("operator `{name}` expects {expected} argument(s), got {got}")]
    OpArity { name: String, expected: usize, got: usize },
}

/// Errors raised by the reduction and checking engines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("stale redex at {pos}: {detail}")]
    StaleRedex { pos: String, detail: String },
    #[error("full lifting cannot freeze the reducible entry `{term}`")]
    FrozenReducible { term: String },
    #[error("entry budget exceeded: {entries} entries, budget {budget}")]
    EntryBudget { entries: usize, budget: usize },
    #[error("state-space budget exceeded after {visited} states")]
    SearchBudget { visited: usize },
    #[error("observation `{obs}` is not monotone at step {step}: {before} -> {after}")]
    NotMonotone { obs: String, step: usize, before: String, after: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}
