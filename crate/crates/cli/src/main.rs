//! `asymlam` — command-line front end for the rewriting laboratory.
//!
//! Exit codes: 0 success (and, for `check`, a clean report); 1 check
//! violations or engine failure; 2 term parse errors and unreadable input;
//! 3 invalid configuration; 4 entry budget exceeded.

mod config;
mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::CliError;
use run::{cmd_bohm, cmd_check, cmd_reduce, BohmRequest, CheckRequest, ReduceRequest};

#[derive(Parser)]
#[command(
    name = "asymlam",
    version,
    about = "Run, observe and law-check reductions of lambda-terms with choice, tick and print operators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configured reduction and report the observation chain.
    Reduce(ReduceArgs),
    /// Check a rewriting law over a corpus of terms.
    Check(CheckArgs),
    /// Print the tree-approximant chain of a pure term.
    Bohm(BohmArgs),
}

#[derive(Args)]
struct ReduceArgs {
    /// One of: pure-cbn, pure-cbv, prob-cbn, prob-cbv, payoff, output.
    #[arg(long)]
    calculus: String,
    /// One of: full, surface, left, right, u, pd, ll, llfull, pw
    /// (availability depends on the calculus).
    #[arg(long)]
    relation: String,
    /// How to pick among several enabled steps: leftmost, rightmost, random.
    #[arg(long)]
    policy: Option<String>,
    /// Maximum number of steps.
    #[arg(long, default_value_t = 100)]
    fuel: usize,
    /// Seed for the random policy (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Observation to chart: nf, pnf, pn, N, counter or buffer.
    #[arg(long)]
    obs: Option<String>,
    /// Output format: json or text.
    #[arg(long, default_value = "json")]
    format: String,
    /// Read the input term from a file instead of the argument.
    #[arg(long)]
    file: Option<PathBuf>,
    /// The input term.
    term: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    /// One of: rd-diamond, obs-diamond, neutrality, monotonicity.
    name: String,
    /// One of: pure-cbn, pure-cbv, prob-cbn, prob-cbv, payoff, output.
    #[arg(long)]
    calculus: String,
    /// Relation under check (neutrality always uses the internal relation).
    #[arg(long)]
    relation: Option<String>,
    /// Observation for obs-diamond, neutrality and monotonicity.
    #[arg(long)]
    obs: Option<String>,
    /// Generator spec for the corpus, e.g. size=8,count=500,seed=7.
    #[arg(long)]
    gen: Option<String>,
    /// File with one term per line (blank lines and #-comments skipped).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Report inconclusive cases without failing the exit code.
    #[arg(long)]
    allow_inconclusive: bool,
    /// Output format: json or text.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct BohmArgs {
    /// Number of development rounds.
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Output format: json or text.
    #[arg(long, default_value = "json")]
    format: String,
    /// Read the input term from a file instead of the argument.
    #[arg(long)]
    file: Option<PathBuf>,
    /// The input term.
    term: Option<String>,
}

/// Resolves the term source: exactly one of the positional argument or
/// `--file` must be present.
fn input_source(term: Option<String>, file: Option<PathBuf>) -> Result<String, CliError> {
    match (term, file) {
        (Some(t), None) => Ok(t),
        (None, Some(path)) => std::fs::read_to_string(&path)
            .map(|s| s.trim().to_string())
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display()))),
        (Some(_), Some(_)) => {
            Err(CliError::Config("pass the term either inline or via --file, not both".to_string()))
        }
        (None, None) => Err(CliError::Config("no input term: pass one inline or via --file".to_string())),
    }
}

fn corpus_lines(path: &PathBuf) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn dispatch(cli: Cli) -> Result<(String, i32), CliError> {
    match cli.cmd {
        Cmd::Reduce(a) => {
            let source = input_source(a.term, a.file)?;
            cmd_reduce(ReduceRequest {
                calculus: a.calculus,
                relation: a.relation,
                policy: a.policy,
                fuel: a.fuel,
                seed: a.seed,
                obs: a.obs,
                format: a.format,
                source,
            })
        }
        Cmd::Check(a) => {
            let corpus = match &a.file {
                Some(path) => Some(corpus_lines(path)?),
                None => None,
            };
            cmd_check(CheckRequest {
                name: a.name,
                calculus: a.calculus,
                relation: a.relation,
                obs: a.obs,
                gen_echo: a.gen.clone(),
                gen: a.gen,
                corpus,
                allow_inconclusive: a.allow_inconclusive,
                format: a.format,
            })
        }
        Cmd::Bohm(a) => {
            let source = input_source(a.term, a.file)?;
            cmd_bohm(BohmRequest { depth: a.depth, format: a.format, source })
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok((out, code)) => {
            print!("{out}");
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.code());
        }
    }
}
