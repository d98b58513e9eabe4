//! Classical propositional formulas: interning, parsing, evaluation.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SymbolId(pub usize);

/// Dense interning of symbol names. Indices are assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> SymbolId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = SymbolId(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SymbolId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    /// Interns a name of the form `{prefix}{n}` that is not yet taken, smallest `n >= 1` first.
    pub fn fresh(&mut self, prefix: &str) -> SymbolId {
        let mut n = 1usize;
        loop {
            let candidate = format!("{prefix}{n}");
            if self.lookup(&candidate).is_none() {
                return self.intern(&candidate);
            }
            n += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Symbol(SymbolId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn sym(id: SymbolId) -> Self {
        Formula::Symbol(id)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// Left-nested conjunction; `None` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::or)
    }

    pub fn as_symbol(&self) -> Option<SymbolId> {
        match self {
            Formula::Symbol(s) => Some(*s),
            _ => None,
        }
    }

    pub fn symbols(&self) -> Vec<SymbolId> {
        let mut out = Vec::new();
        self.collect_symbols(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_symbols(&self, out: &mut Vec<SymbolId>) {
        match self {
            Formula::Symbol(s) => out.push(*s),
            Formula::Not(a) => a.collect_symbols(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Symbol(_) => 0,
            Formula::Not(a) => 1 + a.depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                1 + a.depth().max(b.depth())
            }
        }
    }

    /// Renames symbols through `map`; used when moving formulas between tables.
    pub fn map_symbols(&self, map: &impl Fn(SymbolId) -> SymbolId) -> Formula {
        match self {
            Formula::Symbol(s) => Formula::Symbol(map(*s)),
            Formula::Not(a) => Formula::not(a.map_symbols(map)),
            Formula::And(a, b) => Formula::and(a.map_symbols(map), b.map_symbols(map)),
            Formula::Or(a, b) => Formula::or(a.map_symbols(map), b.map_symbols(map)),
            Formula::Implies(a, b) => Formula::implies(a.map_symbols(map), b.map_symbols(map)),
            Formula::Iff(a, b) => Formula::iff(a.map_symbols(map), b.map_symbols(map)),
        }
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> FormulaDisplay<'a> {
        FormulaDisplay { formula: self, symbols }
    }
}

/// Total assignment of truth values, indexed by [`SymbolId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Valuation(pub Vec<bool>);

impl Valuation {
    pub fn all_false(n: usize) -> Self {
        Valuation(vec![false; n])
    }

    /// The `index`-th valuation in binary enumeration order (symbol 0 is the lowest bit).
    pub fn from_bits(index: u64, n: usize) -> Self {
        Valuation((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn get(&self, s: SymbolId) -> Option<bool> {
        self.0.get(s.0).copied()
    }

    pub fn set(&mut self, s: SymbolId, value: bool) {
        if s.0 >= self.0.len() {
            self.0.resize(s.0 + 1, false);
        }
        self.0[s.0] = value;
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("symbol #{0} has no value in the valuation")]
pub struct UnmappedSymbol(pub usize);

pub fn eval_classical(f: &Formula, v: &Valuation) -> Result<bool, UnmappedSymbol> {
    Ok(match f {
        Formula::Symbol(s) => v.get(*s).ok_or(UnmappedSymbol(s.0))?,
        Formula::Not(a) => !eval_classical(a, v)?,
        Formula::And(a, b) => eval_classical(a, v)? & eval_classical(b, v)?,
        Formula::Or(a, b) => eval_classical(a, v)? | eval_classical(b, v)?,
        Formula::Implies(a, b) => !eval_classical(a, v)? | eval_classical(b, v)?,
        Formula::Iff(a, b) => eval_classical(a, v)? == eval_classical(b, v)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown operator `{operator}` at column {position}")]
    UnknownOperator { position: usize, operator: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. } | ParseError::UnknownOperator { position, .. } => {
                *position
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Not,
    And,
    Or,
    Implies,
    Iff,
    LParen,
    RParen,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` into tokens with 1-based column positions.
fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<->") {
            (Token::Iff, 3)
        } else if rest.starts_with("->") {
            (Token::Implies, 2)
        } else {
            match c {
                '!' => (Token::Not, 1),
                '&' => (Token::And, 1),
                '|' => (Token::Or, 1),
                '(' => (Token::LParen, 1),
                ')' => (Token::RParen, 1),
                _ => {
                    let op: String = chars[i..]
                        .iter()
                        .take_while(|ch| !ch.is_whitespace() && !is_ident_char(**ch) && **ch != '(' && **ch != ')')
                        .collect();
                    return Err(ParseError::UnknownOperator {
                        position: pos,
                        operator: if op.is_empty() { c.to_string() } else { op },
                    });
                }
            }
        };
        out.push((tok, pos));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
    symbols: &'a mut SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { position: self.column(), message: message.into() })
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implication()?;
        while self.peek() == Some(&Token::Iff) {
            self.pos += 1;
            let rhs = self.implication()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Token::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.iff()?;
                if self.peek() != Some(&Token::RParen) {
                    return self.syntax("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(Formula::Symbol(self.symbols.intern(&name)))
            }
            Some(_) => self.syntax("expected a symbol, `!` or `(`"),
            None => self.syntax("unexpected end of formula"),
        }
    }
}

/// Parses a classical formula; identifiers are interned into `symbols`.
pub fn parse_formula(text: &str, symbols: &mut SymbolTable) -> Result<Formula, ParseError> {
    let tokens = tokenize(text)?;
    let end = text.chars().count() + 1;
    let mut parser = Parser { tokens, pos: 0, end, symbols };
    let f = parser.iff()?;
    if parser.pos != parser.tokens.len() {
        return parser.syntax("unexpected trailing input");
    }
    Ok(f)
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Symbol(_) | Formula::Not(_) => 5,
        Formula::And(..) => 4,
        Formula::Or(..) => 3,
        Formula::Implies(..) => 2,
        Formula::Iff(..) => 1,
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    symbols: &'a SymbolTable,
}

impl FormulaDisplay<'_> {
    fn write(&self, f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |g: &Formula, min: u8, out: &mut fmt::Formatter<'_>| -> fmt::Result {
            if precedence(g) < min {
                write!(out, "(")?;
                self.write(g, out)?;
                write!(out, ")")
            } else {
                self.write(g, out)
            }
        };
        match f {
            Formula::Symbol(s) => write!(out, "{}", self.symbols.name(*s)),
            Formula::Not(a) => {
                write!(out, "!")?;
                child(a, 5, out)
            }
            Formula::And(a, b) => {
                child(a, 4, out)?;
                write!(out, " & ")?;
                child(b, 5, out)
            }
            Formula::Or(a, b) => {
                child(a, 3, out)?;
                write!(out, " | ")?;
                child(b, 4, out)
            }
            Formula::Implies(a, b) => {
                child(a, 3, out)?;
                write!(out, " -> ")?;
                child(b, 2, out)
            }
            Formula::Iff(a, b) => {
                child(a, 1, out)?;
                write!(out, " <-> ")?;
                child(b, 2, out)
            }
        }
    }
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, f)
    }
}
