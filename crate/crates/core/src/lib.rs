//! Reduction engines for lambda-calculi whose interesting behaviour shows up
//! only in the limit: probabilistic choice, tick counters, output streams,
//! and Böhm-tree approximants.
//!
//! The crate is organised in layers:
//!
//! * [`term`] — terms with a canonical (locally nameless) binder encoding, a
//!   parser and a pretty-printer;
//! * [`reduction`] — root rules (`beta`, `betav`, `(+)`, `tick`, `print`) and
//!   one generic contextual-closure engine over full / weak / head / left /
//!   right contexts;
//! * [`strategy`] — the unbiased one-step strategy, its parallel multistep
//!   variant, deterministic runs, and meta-checkers (random descent,
//!   factorization search);
//! * [`qars`] — observations into ω-cpos, monotone chains, brute-force limit
//!   sets, and generic law checkers (neutrality, obs-diamond, asymptotic
//!   completeness);
//! * [`prob`] — multi-distributions, liftings of the probabilistic calculus,
//!   and the fully lifted evaluation strategy;
//! * [`effects`] — the payoff (tick-counting) and output (print) calculi;
//! * [`bohm`] — partial normal forms and Böhm-tree approximation;
//! * [`generate`] — seeded term generators and exhaustive enumeration used by
//!   the checkers and the test suites.

pub mod error;
pub mod rat;
pub mod term;
pub mod reduction;
pub mod strategy;
pub mod qars;
pub mod prob;
pub mod effects;
pub mod bohm;
pub mod generate;

pub use error::{ParseError, StepError, TermError};
pub use rat::Rat;
pub use term::{parse_term, OpSym, Position, Signature, Term};
