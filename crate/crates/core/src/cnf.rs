//! Clausal form and the definitional (Tseitin) translation.
//!
//! Variables `0..n` of a CNF built from formulas over `n` symbols are the
//! symbols themselves; auxiliary definition variables follow. Each auxiliary
//! is constrained to be *equivalent* to its subformula, so every model of the
//! source formula extends uniquely to the CNF.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::formula::{Formula, SymbolId};

/// A literal over a 0-based variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Self {
        Lit((var as u32) << 1 | u32::from(!positive))
    }

    pub fn pos(var: usize) -> Self {
        Lit::new(var, true)
    }

    pub fn neg(var: usize) -> Self {
        Lit::new(var, false)
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Signed 1-based DIMACS form.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> Self {
        CnfFormula { num_vars, clauses: Vec::new() }
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        for l in &clause {
            if l.var() >= self.num_vars {
                self.num_vars = l.var() + 1;
            }
        }
        self.clauses.push(clause);
    }

    pub fn new_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    /// Conjoins `other`, whose variables are taken to live in the same index space.
    pub fn extend(&mut self, other: &CnfFormula) {
        self.num_vars = self.num_vars.max(other.num_vars);
        self.clauses.extend(other.clauses.iter().cloned());
    }

    /// True when `model` (indexed by variable) satisfies every clause.
    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter()
                .any(|l| model.get(l.var()).copied().unwrap_or(false) == l.is_positive())
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{} ", l.to_dimacs());
            }
            s.push_str("0\n");
        }
        s
    }
}

/// Incremental Tseitin translator. Structurally equal subformulas share one
/// definition variable.
#[derive(Debug, Clone)]
pub struct TseitinBuilder {
    cnf: CnfFormula,
    defs: HashMap<Formula, Lit>,
}

impl TseitinBuilder {
    /// `num_symbols` variables are reserved for the formula symbols.
    pub fn new(num_symbols: usize) -> Self {
        TseitinBuilder { cnf: CnfFormula::new(num_symbols), defs: HashMap::new() }
    }

    pub fn from_cnf(cnf: CnfFormula) -> Self {
        TseitinBuilder { cnf, defs: HashMap::new() }
    }

    pub fn cnf(&self) -> &CnfFormula {
        &self.cnf
    }

    pub fn cnf_mut(&mut self) -> &mut CnfFormula {
        &mut self.cnf
    }

    pub fn finish(self) -> CnfFormula {
        self.cnf
    }

    /// Returns a literal equivalent to `f` under the emitted clauses.
    pub fn literal(&mut self, f: &Formula) -> Lit {
        match f {
            Formula::Symbol(SymbolId(i)) => {
                if *i >= self.cnf.num_vars {
                    self.cnf.num_vars = i + 1;
                }
                Lit::pos(*i)
            }
            Formula::Not(a) => !self.literal(a),
            _ => {
                if let Some(&l) = self.defs.get(f) {
                    return l;
                }
                let l = self.define(f);
                self.defs.insert(f.clone(), l);
                l
            }
        }
    }

    fn define(&mut self, f: &Formula) -> Lit {
        let (a, b) = match f {
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                (self.literal(a), self.literal(b))
            }
            _ => unreachable!("atoms and negations have no definition"),
        };
        let x = Lit::pos(self.cnf.new_var());
        let c = &mut self.cnf;
        match f {
            Formula::And(..) => and_gate(c, x, a, b),
            Formula::Or(..) => or_gate(c, x, a, b),
            Formula::Implies(..) => or_gate(c, x, !a, b),
            Formula::Iff(..) => xnor_gate(c, x, a, b),
            _ => unreachable!(),
        }
        x
    }

    pub fn assert_formula(&mut self, f: &Formula) {
        let l = self.literal(f);
        self.cnf.add_clause(vec![l]);
    }

    /// Plain clauses are emitted as-is; anything else goes through a definition.
    pub fn assert_clause_or_formula(&mut self, f: &Formula) {
        match clause_literals(f) {
            Some(lits) => self.add_clause(lits),
            None => self.assert_formula(f),
        }
    }

    pub fn new_var(&mut self) -> usize {
        self.cnf.new_var()
    }

    pub fn add_clause(&mut self, clause: Vec<Lit>) {
        self.cnf.add_clause(clause);
    }
}

pub(crate) fn and_gate(c: &mut CnfFormula, x: Lit, a: Lit, b: Lit) {
    c.add_clause(vec![!x, a]);
    c.add_clause(vec![!x, b]);
    c.add_clause(vec![x, !a, !b]);
}

pub(crate) fn or_gate(c: &mut CnfFormula, x: Lit, a: Lit, b: Lit) {
    c.add_clause(vec![x, !a]);
    c.add_clause(vec![x, !b]);
    c.add_clause(vec![!x, a, b]);
}

pub(crate) fn xnor_gate(c: &mut CnfFormula, x: Lit, a: Lit, b: Lit) {
    c.add_clause(vec![!x, !a, b]);
    c.add_clause(vec![!x, a, !b]);
    c.add_clause(vec![x, a, b]);
    c.add_clause(vec![x, !a, !b]);
}

pub(crate) fn xor_gate(c: &mut CnfFormula, x: Lit, a: Lit, b: Lit) {
    xnor_gate(c, !x, a, b);
}

/// Equisatisfiable CNF of `f`. Symbols keep their indices; `num_symbols`
/// fixes how many leading variables are reserved.
pub fn to_cnf(f: &Formula, num_symbols: usize) -> CnfFormula {
    formulas_to_cnf(std::iter::once(f), num_symbols)
}

/// CNF of a conjunction of formulas.
pub fn formulas_to_cnf<'a>(fs: impl IntoIterator<Item = &'a Formula>, num_symbols: usize) -> CnfFormula {
    let mut b = TseitinBuilder::new(num_symbols);
    for f in fs {
        b.assert_clause_or_formula(f);
    }
    b.finish()
}

/// Literals of `f` when it is a disjunction of (negated) symbols.
fn clause_literals(f: &Formula) -> Option<Vec<Lit>> {
    match f {
        Formula::Symbol(s) => Some(vec![Lit::pos(s.0)]),
        Formula::Not(a) => match a.as_ref() {
            Formula::Symbol(s) => Some(vec![Lit::neg(s.0)]),
            _ => None,
        },
        Formula::Or(a, b) => {
            let mut l = clause_literals(a)?;
            l.extend(clause_literals(b)?);
            Some(l)
        }
        _ => None,
    }
}
