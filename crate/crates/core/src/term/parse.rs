//! Recursive-descent parser.
//!
//! Grammar (application is left-associative and binds tighter than `(+)`,
//! lambda bodies extend as far right as possible, `(+)` associates left):
//!
//! ```text
//! term   ::= lambda | choice
//! lambda ::= ("\" | "λ") ident+ "." term
//! choice ::= app ( "(+)" (lambda | app) )*
//! app    ::= atom atom*
//! atom   ::= ident | "tick" "(" term ")" | "print" "[" char "]" "(" term ")" | "(" term ")"
//! ```
//!
//! `⊕` is accepted for `(+)` and `λ` for `\`. `tick` and `print` are reserved
//! words; using one that the signature does not provide is an unknown-operator
//! error.

use crate::error::ParseError;
use crate::term::{Signature, Term};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    Oplus,
    Tick,
    Print(char),
    Ident(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer { chars: src.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax { line: self.line, col: self.col, msg: msg.to_string() }
    }

    fn lex(mut self) -> Result<Vec<Spanned>, ParseError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else { break };
            let tok = match c {
                '\\' | 'λ' => {
                    self.bump();
                    Tok::Lambda
                }
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                '⊕' => {
                    self.bump();
                    Tok::Oplus
                }
                '(' => {
                    self.bump();
                    if self.chars.peek() == Some(&'+') {
                        self.bump();
                        if self.bump() != Some(')') {
                            return Err(self.err("expected `)` to close `(+`"));
                        }
                        Tok::Oplus
                    } else {
                        Tok::LParen
                    }
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while matches!(self.chars.peek(),
                        Some(c) if c.is_alphanumeric() || *c == '_' || *c == '\'')
                    {
                        name.push(self.bump().unwrap());
                    }
                    match name.as_str() {
                        "tick" => Tok::Tick,
                        "print" => {
                            if self.bump() != Some('[') {
                                return Err(self.err("expected `[` after `print`"));
                            }
                            let Some(ch) = self.bump() else {
                                return Err(self.err("expected a character after `print[`"));
                            };
                            if self.bump() != Some(']') {
                                return Err(self.err("expected `]` after `print[<char>`"));
                            }
                            Tok::Print(ch)
                        }
                        _ => Tok::Ident(name),
                    }
                }
                _ => return Err(self.err(&format!("unexpected character `{c}`"))),
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    sig: &'a Signature,
    /// Enclosing binder names, innermost last.
    env: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn span(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn err(&self, msg: &str) -> ParseError {
        let (line, col) = self.span();
        ParseError::Syntax { line, col, msg: msg.to_string() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {what}")))
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            return self.lambda();
        }
        self.choice()
    }

    fn lambda(&mut self) -> Result<Term, ParseError> {
        self.expect(Tok::Lambda, "`\\`")?;
        let mut names = Vec::new();
        while let Some(Tok::Ident(_)) = self.peek() {
            let Some(Tok::Ident(n)) = self.bump() else { unreachable!() };
            names.push(n);
        }
        if names.is_empty() {
            return Err(self.err("expected at least one binder after `\\`"));
        }
        self.expect(Tok::Dot, "`.` after binders")?;
        let before = self.env.len();
        self.env.extend(names.iter().cloned());
        let body = self.term()?;
        self.env.truncate(before);
        Ok(names
            .into_iter()
            .rev()
            .fold(body, |acc, n| Term::Lam(n, Box::new(acc))))
    }

    fn choice(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.application()?;
        while self.peek() == Some(&Tok::Oplus) {
            let (line, col) = self.span();
            self.pos += 1;
            if !self.sig.has_oplus() {
                return Err(ParseError::UnknownOperator { name: "(+)".into(), line, col });
            }
            if self.peek() == Some(&Tok::Lambda) {
                // a lambda on the right swallows the rest of the input
                let rhs = self.lambda()?;
                return Ok(Term::oplus(acc, rhs));
            }
            let rhs = self.application()?;
            acc = Term::oplus(acc, rhs);
        }
        Ok(acc)
    }

    fn application(&mut self) -> Result<Term, ParseError> {
        let mut acc = self
            .atom()?
            .ok_or_else(|| self.err("expected a term"))?;
        while let Some(next) = self.atom()? {
            acc = Term::app(acc, next);
        }
        Ok(acc)
    }

    /// Parses one atom, or returns `Ok(None)` when the next token cannot
    /// start one (used to detect the end of an application spine).
    fn atom(&mut self) -> Result<Option<Term>, ParseError> {
        let (line, col) = self.span();
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let Some(Tok::Ident(name)) = self.bump() else { unreachable!() };
                if let Some(ix) = self.env.iter().rev().position(|b| *b == name) {
                    Ok(Some(Term::Bound(ix)))
                } else {
                    Ok(Some(Term::Free(name)))
                }
            }
            Some(Tok::Tick) => {
                self.pos += 1;
                if !self.sig.has_tick() {
                    return Err(ParseError::UnknownOperator { name: "tick".into(), line, col });
                }
                self.expect(Tok::LParen, "`(` after `tick`")?;
                let inner = self.term()?;
                self.expect(Tok::RParen, "`)` closing `tick(`")?;
                Ok(Some(Term::tick(inner)))
            }
            Some(Tok::Print(c)) => {
                let c = *c;
                self.pos += 1;
                if !self.sig.print_alphabet().contains(c) {
                    return Err(ParseError::UnknownOperator {
                        name: format!("print[{c}]"),
                        line,
                        col,
                    });
                }
                self.expect(Tok::LParen, "`(` after `print[..]`")?;
                let inner = self.term()?;
                self.expect(Tok::RParen, "`)` closing `print[..](`")?;
                Ok(Some(Term::print(c, inner)))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Some(inner))
            }
            _ => Ok(None),
        }
    }
}

/// Parses a term over the given operator signature.
pub fn parse_term(src: &str, sig: &Signature) -> Result<Term, ParseError> {
    let toks = Lexer::new(src).lex()?;
    let mut p = Parser { toks, pos: 0, sig, env: Vec::new() };
    let t = p.term()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after term"));
    }
    debug_assert!(t.locally_closed_at(0));
    Ok(t)
}
