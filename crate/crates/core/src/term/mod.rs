//! Terms of the lambda-calculus extended with first-order operators.
//!
//! Binders use a locally nameless encoding: bound occurrences are de Bruijn
//! indices, free occurrences are names. Alpha-equivalent terms are therefore
//! structurally equal, and substitution of a locally closed term for a free
//! name can never capture. Each `Lam` keeps the surface binder name purely as
//! a printing hint; equality, hashing and ordering all ignore it.

mod parse;
mod print;

pub use parse::parse_term;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::TermError;

/// An operator symbol with a fixed arity.
///
/// The operator set is configuration, not syntax: the same `Term` type hosts
/// the pure calculus (no operators), binary fair choice `(+)`, unary `tick`,
/// and one unary `print[c]` per character of an output alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSym {
    pub name: String,
    pub arity: usize,
}

impl OpSym {
    pub fn new(name: &str, arity: usize) -> OpSym {
        assert!(arity >= 1, "operators are applied to at least one argument");
        OpSym { name: name.to_string(), arity }
    }

    pub fn oplus() -> OpSym {
        OpSym::new("(+)", 2)
    }

    pub fn tick() -> OpSym {
        OpSym::new("tick", 1)
    }

    pub fn print(c: char) -> OpSym {
        OpSym::new(&format!("print[{c}]"), 1)
    }

    pub fn is_oplus(&self) -> bool {
        self.name == "(+)"
    }

    pub fn is_tick(&self) -> bool {
        self.name == "tick"
    }

    /// The character of a `print[c]` symbol, if this is one.
    pub fn print_char(&self) -> Option<char> {
        let rest = self.name.strip_prefix("print[")?;
        let mut chars = rest.chars();
        let c = chars.next()?;
        (chars.as_str() == "]").then_some(c)
    }
}

impl fmt::Display for OpSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// The operator set a parser instance accepts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<OpSym>,
}

impl Signature {
    pub fn new(ops: Vec<OpSym>) -> Signature {
        Signature { ops }
    }

    /// Pure lambda-terms: no operators at all.
    pub fn pure() -> Signature {
        Signature::new(vec![])
    }

    /// Fair binary choice only.
    pub fn prob() -> Signature {
        Signature::new(vec![OpSym::oplus()])
    }

    /// Tick counter only.
    pub fn payoff() -> Signature {
        Signature::new(vec![OpSym::tick()])
    }

    /// One print operator per character of `alphabet`.
    pub fn output(alphabet: &str) -> Signature {
        Signature::new(alphabet.chars().map(OpSym::print).collect())
    }

    pub fn find(&self, name: &str) -> Option<&OpSym> {
        self.ops.iter().find(|o| o.name == name)
    }

    pub fn has_oplus(&self) -> bool {
        self.ops.iter().any(|o| o.is_oplus())
    }

    pub fn has_tick(&self) -> bool {
        self.ops.iter().any(|o| o.is_tick())
    }

    pub fn print_alphabet(&self) -> String {
        self.ops.iter().filter_map(|o| o.print_char()).collect()
    }

    pub fn ops(&self) -> &[OpSym] {
        &self.ops
    }
}

/// One step down the syntax tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    AppFun,
    AppArg,
    LamBody,
    OpArg(usize),
}

/// A path from the root to a subterm. The empty path is the root.
///
/// The derived lexicographic order on paths is the leftmost-outermost order:
/// prefixes come first, and among siblings the function part precedes the
/// argument part (operator arguments in index order).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<Dir>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, d: Dir) -> Position {
        let mut p = self.0.clone();
        p.push(d);
        Position(p)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("root");
        }
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|d| match d {
                Dir::AppFun => "fun",
                Dir::AppArg => "arg",
                Dir::LamBody => "body",
                Dir::OpArg(0) => "op0",
                Dir::OpArg(1) => "op1",
                Dir::OpArg(_) => "opN",
            })
            .collect();
        f.write_str(&parts.join("."))
    }
}

/// A term in locally nameless form.
#[derive(Debug, Clone)]
pub enum Term {
    /// A bound variable, counting enclosing `Lam`s from the inside out.
    Bound(usize),
    /// A free variable.
    Free(String),
    /// An abstraction; the name is only a printing hint.
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
    Op(OpSym, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Free(name.to_string())
    }

    pub fn lam(hint: &str, body: Term) -> Term {
        Term::Lam(hint.to_string(), Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    pub fn op(sym: OpSym, args: Vec<Term>) -> Result<Term, TermError> {
        if sym.arity != args.len() {
            return Err(TermError::OpArity {
                name: sym.name.clone(),
                expected: sym.arity,
                got: args.len(),
            });
        }
        Ok(Term::Op(sym, args))
    }

    pub fn oplus(left: Term, right: Term) -> Term {
        Term::Op(OpSym::oplus(), vec![left, right])
    }

    pub fn tick(inner: Term) -> Term {
        Term::Op(OpSym::tick(), vec![inner])
    }

    pub fn print(c: char, inner: Term) -> Term {
        Term::Op(OpSym::print(c), vec![inner])
    }

    /// Values are variables and abstractions.
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Bound(_) | Term::Free(_) | Term::Lam(_, _))
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Bound(_) | Term::Free(_) => 1,
            Term::Lam(_, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Op(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Bound(_) => {}
            Term::Free(x) => {
                out.insert(x.clone());
            }
            Term::Lam(_, b) => b.collect_free(out),
            Term::App(f, a) => {
                f.collect_free(out);
                a.collect_free(out);
            }
            Term::Op(_, args) => {
                for a in args {
                    a.collect_free(out);
                }
            }
        }
    }

    /// True when the term contains no free variables (bound indices may
    /// appear, but only pointing at binders inside the term).
    pub fn is_closed(&self) -> bool {
        self.free_names().is_empty() && self.locally_closed_at(0)
    }

    /// True when every bound index points at an enclosing binder, assuming
    /// `depth` binders already surround the term.
    pub fn locally_closed_at(&self, depth: usize) -> bool {
        match self {
            Term::Bound(i) => *i < depth,
            Term::Free(_) => true,
            Term::Lam(_, b) => b.locally_closed_at(depth + 1),
            Term::App(f, a) => f.locally_closed_at(depth) && a.locally_closed_at(depth),
            Term::Op(_, args) => args.iter().all(|a| a.locally_closed_at(depth)),
        }
    }

    /// The immediate children, paired with the direction that reaches them.
    pub fn children(&self) -> Vec<(Dir, &Term)> {
        match self {
            Term::Bound(_) | Term::Free(_) => vec![],
            Term::Lam(_, b) => vec![(Dir::LamBody, b)],
            Term::App(f, a) => vec![(Dir::AppFun, f), (Dir::AppArg, a)],
            Term::Op(_, args) => args
                .iter()
                .enumerate()
                .map(|(i, a)| (Dir::OpArg(i), a))
                .collect(),
        }
    }

    pub fn subterm_at(&self, pos: &Position) -> Result<&Term, TermError> {
        let mut cur = self;
        for d in &pos.0 {
            cur = match (cur, d) {
                (Term::Lam(_, b), Dir::LamBody) => b,
                (Term::App(f, _), Dir::AppFun) => f,
                (Term::App(_, a), Dir::AppArg) => a,
                (Term::Op(_, args), Dir::OpArg(i)) => {
                    args.get(*i).ok_or(TermError::InvalidPosition)?
                }
                _ => return Err(TermError::InvalidPosition),
            };
        }
        Ok(cur)
    }

    /// Rebuilds the term with the subterm at `pos` replaced by `new`.
    pub fn replace_at(&self, pos: &Position, new: Term) -> Result<Term, TermError> {
        self.replace_rec(&pos.0, new)
    }

    fn replace_rec(&self, path: &[Dir], new: Term) -> Result<Term, TermError> {
        let Some((d, rest)) = path.split_first() else {
            return Ok(new);
        };
        match (self, d) {
            (Term::Lam(h, b), Dir::LamBody) => {
                Ok(Term::Lam(h.clone(), Box::new(b.replace_rec(rest, new)?)))
            }
            (Term::App(f, a), Dir::AppFun) => Ok(Term::App(
                Box::new(f.replace_rec(rest, new)?),
                a.clone(),
            )),
            (Term::App(f, a), Dir::AppArg) => Ok(Term::App(
                f.clone(),
                Box::new(a.replace_rec(rest, new)?),
            )),
            (Term::Op(sym, args), Dir::OpArg(i)) => {
                if *i >= args.len() {
                    return Err(TermError::InvalidPosition);
                }
                let mut args = args.clone();
                args[*i] = args[*i].replace_rec(rest, new)?;
                Ok(Term::Op(sym.clone(), args))
            }
            _ => Err(TermError::InvalidPosition),
        }
    }

    /// Capture-avoiding substitution of `val` for the free name `name`.
    ///
    /// Capture cannot occur in the locally nameless encoding: binders bind
    /// indices, never names, so a free name inside `val` stays free. `val`
    /// must be locally closed (it is inserted under binders unshifted).
    pub fn subst_free(&self, name: &str, val: &Term) -> Term {
        debug_assert!(val.locally_closed_at(0), "substituted value must be locally closed");
        match self {
            Term::Bound(i) => Term::Bound(*i),
            Term::Free(x) => {
                if x == name {
                    val.clone()
                } else {
                    Term::Free(x.clone())
                }
            }
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.subst_free(name, val))),
            Term::App(f, a) => Term::App(
                Box::new(f.subst_free(name, val)),
                Box::new(a.subst_free(name, val)),
            ),
            Term::Op(sym, args) => Term::Op(
                sym.clone(),
                args.iter().map(|a| a.subst_free(name, val)).collect(),
            ),
        }
    }

    /// Instantiates the outermost binder of a lambda *body* with `arg`:
    /// `(\ . body) arg` contracts to `body.open(arg)`.
    pub fn open(&self, arg: &Term) -> Term {
        self.open_at(0, arg)
    }

    /// Shifts every index pointing past `cutoff` binders up by `by`, so a
    /// term can be moved underneath `by` additional binders.
    fn shifted(&self, by: usize, cutoff: usize) -> Term {
        if by == 0 {
            return self.clone();
        }
        match self {
            Term::Bound(i) => {
                if *i >= cutoff {
                    Term::Bound(i + by)
                } else {
                    Term::Bound(*i)
                }
            }
            Term::Free(x) => Term::Free(x.clone()),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.shifted(by, cutoff + 1))),
            Term::App(f, a) => {
                Term::App(Box::new(f.shifted(by, cutoff)), Box::new(a.shifted(by, cutoff)))
            }
            Term::Op(sym, args) => {
                Term::Op(sym.clone(), args.iter().map(|a| a.shifted(by, cutoff)).collect())
            }
        }
    }

    fn open_at(&self, depth: usize, arg: &Term) -> Term {
        match self {
            Term::Bound(i) => match i.cmp(&depth) {
                Ordering::Less => Term::Bound(*i),
                // The argument crosses `depth` binders on its way in; its
                // own dangling indices must keep pointing outside.
                Ordering::Equal => arg.shifted(depth, 0),
                Ordering::Greater => Term::Bound(i - 1),
            },
            Term::Free(x) => Term::Free(x.clone()),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.open_at(depth + 1, arg))),
            Term::App(f, a) => Term::App(
                Box::new(f.open_at(depth, arg)),
                Box::new(a.open_at(depth, arg)),
            ),
            Term::Op(sym, args) => Term::Op(
                sym.clone(),
                args.iter().map(|a| a.open_at(depth, arg)).collect(),
            ),
        }
    }

    /// Alpha-equivalence. With canonical binders this is plain structural
    /// equality; kept as a named operation because call sites care about the
    /// distinction.
    pub fn alpha_eq(&self, other: &Term) -> bool {
        self == other
    }
}

// Equality, hashing and ordering ignore binder hints so that
// alpha-equivalent terms collapse. Hand-written to keep the three impls
// consistent with each other.

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Bound(a), Term::Bound(b)) => a == b,
            (Term::Free(a), Term::Free(b)) => a == b,
            (Term::Lam(_, a), Term::Lam(_, b)) => a == b,
            (Term::App(f, a), Term::App(g, b)) => f == g && a == b,
            (Term::Op(s, xs), Term::Op(t, ys)) => s == t && xs == ys,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Term::Bound(i) => {
                0u8.hash(state);
                i.hash(state);
            }
            Term::Free(x) => {
                1u8.hash(state);
                x.hash(state);
            }
            Term::Lam(_, b) => {
                2u8.hash(state);
                b.hash(state);
            }
            Term::App(f, a) => {
                3u8.hash(state);
                f.hash(state);
                a.hash(state);
            }
            Term::Op(sym, args) => {
                4u8.hash(state);
                sym.hash(state);
                args.hash(state);
            }
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Term) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Term) -> Ordering {
        fn tag(t: &Term) -> u8 {
            match t {
                Term::Bound(_) => 0,
                Term::Free(_) => 1,
                Term::Lam(_, _) => 2,
                Term::App(_, _) => 3,
                Term::Op(_, _) => 4,
            }
        }
        match (self, other) {
            (Term::Bound(a), Term::Bound(b)) => a.cmp(b),
            (Term::Free(a), Term::Free(b)) => a.cmp(b),
            (Term::Lam(_, a), Term::Lam(_, b)) => a.cmp(b),
            (Term::App(f, a), Term::App(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (Term::Op(s, xs), Term::Op(t, ys)) => s.cmp(t).then_with(|| xs.cmp(ys)),
            (a, b) => tag(a).cmp(&tag(b)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Term {
        parse_term(src, &Signature::prob()).unwrap()
    }

    #[test]
    fn alpha_equality_is_structural() {
        assert_eq!(p(r"\x.x"), p(r"\y.y"));
        assert_eq!(p(r"\x.\y.x y"), p(r"\a.\b.a b"));
        assert_ne!(p(r"\x.\y.x"), p(r"\x.\y.y"));
        assert_ne!(p(r"\x.x"), p(r"\x.x x"));
    }

    #[test]
    fn substitution_replaces_free_occurrences_only() {
        let id = p(r"\x.x");
        let t = p("x x").subst_free("x", &id);
        assert_eq!(t, p(r"(\x.x)(\x.x)"));

        // x is bound inside, nothing happens
        let t = p(r"\x.x").subst_free("x", &Term::var("z"));
        assert_eq!(t, p(r"\x.x"));

        // no capture: the free y stays free even under the binder hinted y
        let t = p(r"\y.x").subst_free("x", &Term::var("y"));
        assert_eq!(t, Term::lam("y", Term::var("y")));
        assert_eq!(t.free_names().into_iter().collect::<Vec<_>>(), vec!["y"]);
    }

    #[test]
    fn open_instantiates_the_outermost_binder() {
        // (\x. x (\y. x y)) z
        let body = match p(r"\x. x (\y. x y)") {
            Term::Lam(_, b) => *b,
            _ => unreachable!(),
        };
        assert_eq!(body.open(&Term::var("z")), p(r"z (\y. z y)"));
    }

    #[test]
    fn values_are_variables_and_abstractions() {
        assert!(p(r"\x.x x").is_value());
        assert!(Term::var("x").is_value());
        assert!(!p(r"(\x.x)(\x.x)").is_value());
        assert!(!p(r"x (+) y").is_value());
        assert!(!Term::tick(Term::var("x")).is_value());
    }

    #[test]
    fn positions_address_subterms() {
        let t = p(r"(\x.x x) y");
        let fun = Position(vec![Dir::AppFun]);
        let body = Position(vec![Dir::AppFun, Dir::LamBody]);
        assert_eq!(t.subterm_at(&fun).unwrap(), &p(r"\x.x x"));
        assert_eq!(t.subterm_at(&body).unwrap(), &Term::app(Term::Bound(0), Term::Bound(0)));
        assert!(t.subterm_at(&Position(vec![Dir::LamBody])).is_err());

        let replaced = t.replace_at(&Position(vec![Dir::AppArg]), Term::var("z")).unwrap();
        assert_eq!(replaced, p(r"(\x.x x) z"));
    }

    #[test]
    fn positions_sort_leftmost_outermost() {
        let root = Position::root();
        let fun = root.child(Dir::AppFun);
        let arg = root.child(Dir::AppArg);
        let deep = fun.child(Dir::LamBody);
        let mut v = vec![arg.clone(), deep.clone(), root.clone(), fun.clone()];
        v.sort();
        assert_eq!(v, vec![root, fun, deep, arg]);
    }

    #[test]
    fn op_arity_is_checked() {
        let err = Term::op(OpSym::oplus(), vec![Term::var("x")]).unwrap_err();
        assert_eq!(
            err,
            TermError::OpArity { name: "(+)".into(), expected: 2, got: 1 }
        );
    }
}
