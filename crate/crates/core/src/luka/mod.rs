//! Łukasiewicz infinitely-valued logic: formulas, exact evaluation and
//! value-1 satisfiability.

mod milp;

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::formula::{ParseError, SymbolId, SymbolTable, UnmappedSymbol};
use crate::rational::Rational;

pub use milp::{luka_sat, LukaError, LukaMilp, LukaSat};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LFormula {
    Symbol(SymbolId),
    Neg(Box<LFormula>),
    /// Strong disjunction `min(1, a + b)`.
    Oplus(Box<LFormula>, Box<LFormula>),
    /// Strong conjunction `max(0, a + b - 1)`.
    Odot(Box<LFormula>, Box<LFormula>),
    Implies(Box<LFormula>, Box<LFormula>),
    /// Lattice conjunction.
    Min(Box<LFormula>, Box<LFormula>),
    /// Lattice disjunction.
    Max(Box<LFormula>, Box<LFormula>),
    Iff(Box<LFormula>, Box<LFormula>),
}

macro_rules! binary_ctor {
    ($name:ident, $variant:ident) => {
        pub fn $name(a: LFormula, b: LFormula) -> Self {
            LFormula::$variant(Box::new(a), Box::new(b))
        }
    };
}

impl LFormula {
    pub fn sym(id: SymbolId) -> Self {
        LFormula::Symbol(id)
    }

    pub fn neg(a: LFormula) -> Self {
        LFormula::Neg(Box::new(a))
    }

    binary_ctor!(oplus, Oplus);
    binary_ctor!(odot, Odot);
    binary_ctor!(implies, Implies);
    binary_ctor!(min, Min);
    binary_ctor!(max, Max);
    binary_ctor!(iff, Iff);

    pub fn as_symbol(&self) -> Option<SymbolId> {
        match self {
            LFormula::Symbol(s) => Some(*s),
            _ => None,
        }
    }

    pub fn children(&self) -> Option<(&LFormula, &LFormula)> {
        match self {
            LFormula::Oplus(a, b)
            | LFormula::Odot(a, b)
            | LFormula::Implies(a, b)
            | LFormula::Min(a, b)
            | LFormula::Max(a, b)
            | LFormula::Iff(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn symbols(&self) -> Vec<SymbolId> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                LFormula::Symbol(s) => out.push(*s),
                LFormula::Neg(a) => stack.push(a),
                _ => {
                    let (a, b) = f.children().expect("binary connective");
                    stack.push(a);
                    stack.push(b);
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Number of connective levels; a symbol has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            LFormula::Symbol(_) => 0,
            LFormula::Neg(a) => 1 + a.depth(),
            _ => {
                let (a, b) = self.children().expect("binary connective");
                1 + a.depth().max(b.depth())
            }
        }
    }

    pub fn display<'a>(&'a self, symbols: &'a SymbolTable) -> LFormulaDisplay<'a> {
        LFormulaDisplay { formula: self, symbols }
    }
}

/// Total map from symbols to `[0, 1]`, indexed by [`SymbolId`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LValuation(pub Vec<Rational>);

impl LValuation {
    pub fn get(&self, s: SymbolId) -> Option<&Rational> {
        self.0.get(s.0)
    }

    pub fn is_in_unit_cube(&self) -> bool {
        self.0.iter().all(|v| !v.is_negative() && *v <= Rational::one())
    }
}

pub fn eval_luka(f: &LFormula, v: &LValuation) -> Result<Rational, UnmappedSymbol> {
    let one = Rational::one();
    Ok(match f {
        LFormula::Symbol(s) => v.get(*s).cloned().ok_or(UnmappedSymbol(s.0))?,
        LFormula::Neg(a) => &one - eval_luka(a, v)?,
        _ => {
            let (a, b) = f.children().expect("binary connective");
            let (x, y) = (eval_luka(a, v)?, eval_luka(b, v)?);
            match f {
                LFormula::Oplus(..) => (x + y).min(one),
                LFormula::Odot(..) => (x + y - one).max(Rational::zero()),
                LFormula::Implies(..) => (one - x + y).min(Rational::one()),
                LFormula::Min(..) => x.min(y),
                LFormula::Max(..) => x.max(y),
                LFormula::Iff(..) => one - (x - y).abs(),
                _ => unreachable!(),
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Iff,
    Implies,
    Max,
    Min,
    Oplus,
    Odot,
}

impl Op {
    fn build(self, a: LFormula, b: LFormula) -> LFormula {
        match self {
            Op::Iff => LFormula::iff(a, b),
            Op::Implies => LFormula::implies(a, b),
            Op::Max => LFormula::max(a, b),
            Op::Min => LFormula::min(a, b),
            Op::Oplus => LFormula::oplus(a, b),
            Op::Odot => LFormula::odot(a, b),
        }
    }
}

/// Binary levels from loosest to tightest.
const LEVELS: [Op; 6] = [Op::Iff, Op::Implies, Op::Max, Op::Min, Op::Oplus, Op::Odot];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Neg,
    Bin(Op),
    LParen,
    RParen,
}

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
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Token::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest == "(+)" {
            (Token::Bin(Op::Oplus), 3)
        } else if rest == "(*)" {
            (Token::Bin(Op::Odot), 3)
        } else if rest.starts_with("<->") {
            (Token::Bin(Op::Iff), 3)
        } else if rest.starts_with("->") {
            (Token::Bin(Op::Implies), 2)
        } else {
            match c {
                '~' => (Token::Neg, 1),
                '&' => (Token::Bin(Op::Min), 1),
                '|' => (Token::Bin(Op::Max), 1),
                '(' => (Token::LParen, 1),
                ')' => (Token::RParen, 1),
                _ => {
                    let op: String = chars[i..]
                        .iter()
                        .take_while(|ch| !ch.is_whitespace() && !ch.is_ascii_alphanumeric() && **ch != '(' && **ch != ')')
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

    fn syntax<T>(&self, message: &str) -> Result<T, ParseError> {
        let position = self.tokens.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end);
        Err(ParseError::Syntax { position, message: message.into() })
    }

    fn level(&mut self, depth: usize) -> Result<LFormula, ParseError> {
        if depth == LEVELS.len() {
            return self.unary();
        }
        let op = LEVELS[depth];
        let mut lhs = self.level(depth + 1)?;
        while self.peek() == Some(&Token::Bin(op)) {
            self.pos += 1;
            if op == Op::Implies {
                let rhs = self.level(depth)?;
                return Ok(op.build(lhs, rhs));
            }
            let rhs = self.level(depth + 1)?;
            lhs = op.build(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LFormula, ParseError> {
        match self.peek().cloned() {
            Some(Token::Neg) => {
                self.pos += 1;
                Ok(LFormula::neg(self.unary()?))
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.level(0)?;
                if self.peek() != Some(&Token::RParen) {
                    return self.syntax("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                Ok(LFormula::Symbol(self.symbols.intern(&name)))
            }
            Some(_) => self.syntax("expected a symbol, `~` or `(`"),
            None => self.syntax("unexpected end of formula"),
        }
    }
}

/// Parses a Łukasiewicz formula; identifiers are interned into `symbols`.
pub fn parse_lformula(text: &str, symbols: &mut SymbolTable) -> Result<LFormula, ParseError> {
    let tokens = tokenize(text)?;
    let end = text.chars().count() + 1;
    let mut parser = Parser { tokens, pos: 0, end, symbols };
    let f = parser.level(0)?;
    if parser.pos != parser.tokens.len() {
        return parser.syntax("unexpected trailing input");
    }
    Ok(f)
}

fn precedence(f: &LFormula) -> u8 {
    match f {
        LFormula::Symbol(_) | LFormula::Neg(_) => 7,
        LFormula::Odot(..) => 6,
        LFormula::Oplus(..) => 5,
        LFormula::Min(..) => 4,
        LFormula::Max(..) => 3,
        LFormula::Implies(..) => 2,
        LFormula::Iff(..) => 1,
    }
}

pub struct LFormulaDisplay<'a> {
    formula: &'a LFormula,
    symbols: &'a SymbolTable,
}

impl LFormulaDisplay<'_> {
    fn write(&self, f: &LFormula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |g: &LFormula, min: u8, out: &mut fmt::Formatter<'_>| -> fmt::Result {
            if precedence(g) < min {
                write!(out, "(")?;
                self.write(g, out)?;
                write!(out, ")")
            } else {
                self.write(g, out)
            }
        };
        match f {
            LFormula::Symbol(s) => write!(out, "{}", self.symbols.name(*s)),
            LFormula::Neg(a) => {
                write!(out, "~")?;
                child(a, 7, out)
            }
            _ => {
                let (a, b) = f.children().expect("binary connective");
                let p = precedence(f);
                let op = match f {
                    LFormula::Odot(..) => "(*)",
                    LFormula::Oplus(..) => "(+)",
                    LFormula::Min(..) => "&",
                    LFormula::Max(..) => "|",
                    LFormula::Implies(..) => "->",
                    _ => "<->",
                };
                // `->` nests to the right, everything else to the left
                let (lmin, rmin) = if matches!(f, LFormula::Implies(..)) { (p + 1, p) } else { (p, p + 1) };
                child(a, lmin, out)?;
                write!(out, " {op} ")?;
                child(b, rmin, out)
            }
        }
    }
}

impl fmt::Display for LFormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.formula, f)
    }
}
