//! De Bruijn terms, size measures and the canonical text format.
//!
//! The text format is the successor notation `0`, `s(T)`, `l(T)`, `a(T,T)`.
//! Indices are stored as integers; the `s(...)` chains only exist in text.
//!
//! Two size measures are used. The *unit size* weighs every constructor by
//! its arity (`0` weighs 0, `s` and `l` weigh 1, `a` weighs 2) and is what
//! every internal counter tracks. The *natural size* is unit size plus one
//! and is what the public counting sequences are indexed by.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A lambda term in de Bruijn notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// `Index(k)` points at the `k+1`-th enclosing binder.
    Index(u32),
    Abs(Box<Term>),
    App(Box<Term>, Box<Term>),
}

/// The families of terms the enumerator and counter know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermClass {
    Plain,
    Closed,
    PlainTypable,
    ClosedTypable,
    PlainNF,
    PlainTypableNF,
    ClosedTypableNF,
}

impl TermClass {
    pub const ALL: [TermClass; 7] = [
        TermClass::Plain,
        TermClass::Closed,
        TermClass::PlainTypable,
        TermClass::ClosedTypable,
        TermClass::PlainNF,
        TermClass::PlainTypableNF,
        TermClass::ClosedTypableNF,
    ];

    pub fn is_closed(self) -> bool {
        matches!(
            self,
            TermClass::Closed | TermClass::ClosedTypable | TermClass::ClosedTypableNF
        )
    }

    pub fn is_typable(self) -> bool {
        matches!(
            self,
            TermClass::PlainTypable
                | TermClass::ClosedTypable
                | TermClass::PlainTypableNF
                | TermClass::ClosedTypableNF
        )
    }

    pub fn is_normal_form(self) -> bool {
        matches!(
            self,
            TermClass::PlainNF | TermClass::PlainTypableNF | TermClass::ClosedTypableNF
        )
    }

    /// Kebab-case name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            TermClass::Plain => "plain",
            TermClass::Closed => "closed",
            TermClass::PlainTypable => "plain-typable",
            TermClass::ClosedTypable => "closed-typable",
            TermClass::PlainNF => "plain-nf",
            TermClass::PlainTypableNF => "plain-typable-nf",
            TermClass::ClosedTypableNF => "closed-typable-nf",
        }
    }
}

impl fmt::Display for TermClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TermClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TermClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown term class `{s}`"))
    }
}

impl Term {
    pub fn index(k: u32) -> Term {
        Term::Index(k)
    }

    pub fn abs(body: Term) -> Term {
        Term::Abs(Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Arity-weighted size: successor steps, plus one per abstraction, plus
    /// two per application.
    pub fn unit_size(&self) -> u64 {
        match self {
            Term::Index(k) => u64::from(*k),
            Term::Abs(body) => 1 + body.unit_size(),
            Term::App(fun, arg) => 2 + fun.unit_size() + arg.unit_size(),
        }
    }

    pub fn natural_size(&self) -> u64 {
        self.unit_size() + 1
    }

    /// True iff every index is bound by an enclosing abstraction.
    pub fn is_closed(&self) -> bool {
        fn go(t: &Term, depth: u32) -> bool {
            match t {
                Term::Index(k) => *k < depth,
                Term::Abs(body) => go(body, depth + 1),
                Term::App(fun, arg) => go(fun, depth) && go(arg, depth),
            }
        }
        go(self, 0)
    }

    /// True iff the term contains no redex, i.e. no application whose
    /// function part is an abstraction.
    pub fn is_normal_form(&self) -> bool {
        match self {
            Term::Index(_) => true,
            Term::Abs(body) => body.is_normal_form(),
            Term::App(fun, arg) => {
                !matches!(**fun, Term::Abs(_)) && fun.is_normal_form() && arg.is_normal_form()
            }
        }
    }

    /// Number of constructor nodes (indices count once regardless of value).
    pub fn node_count(&self) -> usize {
        match self {
            Term::Index(_) => 1,
            Term::Abs(body) => 1 + body.node_count(),
            Term::App(fun, arg) => 1 + fun.node_count() + arg.node_count(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Index(k) => {
                for _ in 0..*k {
                    f.write_str("s(")?;
                }
                f.write_str("0")?;
                for _ in 0..*k {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Term::Abs(body) => write!(f, "l({body})"),
            Term::App(fun, arg) => write!(f, "a({fun},{arg})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {message}")]
pub struct ParseError {
    /// 1-based character position of the offending input (one past the end
    /// when input ran out).
    pub position: usize,
    pub message: String,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(got) if got == c => {
                self.pos += 1;
                Ok(())
            }
            Some(got) => self.error(format!("expected `{}`, found `{}`", c as char, got as char)),
            None => self.error(format!("expected `{}`, found end of input", c as char)),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(b'0') | Some(b's') => self.index().map(Term::Index),
            Some(b'l') => {
                self.pos += 1;
                self.expect(b'(')?;
                let body = self.term()?;
                self.expect(b')')?;
                Ok(Term::abs(body))
            }
            Some(b'a') => {
                self.pos += 1;
                self.expect(b'(')?;
                let fun = self.term()?;
                self.expect(b',')?;
                let arg = self.term()?;
                self.expect(b')')?;
                Ok(Term::app(fun, arg))
            }
            Some(c) => self.error(format!("unexpected `{}`", c as char)),
            None => self.error("unexpected end of input"),
        }
    }

    // `s(` chains may only wrap an index.
    fn index(&mut self) -> Result<u32, ParseError> {
        let mut depth = 0u32;
        loop {
            match self.peek() {
                Some(b'0') => {
                    self.pos += 1;
                    break;
                }
                Some(b's') => {
                    self.pos += 1;
                    self.expect(b'(')?;
                    depth = match depth.checked_add(1) {
                        Some(d) => d,
                        None => return self.error("index too large"),
                    };
                }
                Some(c) => {
                    return self.error(format!(
                        "expected `0` or `s(` inside index, found `{}`",
                        c as char
                    ))
                }
                None => return self.error("unexpected end of input"),
            }
        }
        for _ in 0..depth {
            self.expect(b')')?;
        }
        Ok(depth)
    }
}

impl FromStr for Term {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let t = p.term()?;
        if p.peek().is_some() {
            return p.error("trailing input");
        }
        Ok(t)
    }
}

pub fn parse_term(s: &str) -> Result<Term, ParseError> {
    s.parse()
}
