//! Counting quantifiers over unary predicates with light binary constraints.
//!
//! A formula is a conjunction of counting sentences `∃≤n x ψ(x)` /
//! `∃≥n x ψ(x)`, universal sentences `∀x ψ(x)` and EL constraints
//! (inclusions between basic concepts, functionality of roles, and ground
//! facts). Satisfiability reduces to an integer system over elementary
//! terms, solved by branch-and-bound with column generation.

mod closure;
mod model;
mod solve;

use std::fmt;

use thiserror::Error;

use crate::formula::{Formula, SymbolId, SymbolTable};
use crate::lp::{LpError, Relation};
use crate::sat::SatError;

pub use closure::{joint_sat, ni_closure, Inconsistency, JointSat, NiClosure};
pub use model::{build_model, check_model, FiniteModel, ModelViolation};
pub use solve::{
    cquel_generate_column, cquel_solve, size_bound, solve_relaxed_via_colgen, verify_count_witness, CountWitness,
    CquelConfig, CquelOutcome, CquelStats, CquelVerdict, RelaxedSolution,
};

/// A unary predicate or an existential over a role, in either direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Basic {
    Pred(SymbolId),
    /// `∃y r(x, y)`
    Exists(SymbolId),
    /// `∃y r(y, x)`
    ExistsInv(SymbolId),
}

impl Basic {
    pub fn role(self) -> Option<SymbolId> {
        match self {
            Basic::Pred(_) => None,
            Basic::Exists(r) | Basic::ExistsInv(r) => Some(r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptLiteral {
    pub basic: Basic,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ElConstraint {
    /// `∀x (lhs(x) → ⋀ rhs(x))`
    Inclusion { lhs: Basic, rhs: Vec<ConceptLiteral> },
    /// At most one successor, or one predecessor when `inverse`.
    Funct { role: SymbolId, inverse: bool },
    Fact { pred: SymbolId, constant: SymbolId },
    RoleFact { role: SymbolId, from: SymbolId, to: SymbolId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountingSentence {
    /// `Le` or `Ge`.
    pub relation: Relation,
    pub bound: u64,
    pub body: Formula,
}

/// Names live in three tables: unary predicates, roles and constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CquelInstance {
    pub predicates: SymbolTable,
    pub roles: SymbolTable,
    pub constants: SymbolTable,
    pub counting: Vec<CountingSentence>,
    pub universal: Vec<Formula>,
    pub el: Vec<ElConstraint>,
}

/// `∃⋈n x p(x)` over an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRow {
    pub pred: SymbolId,
    pub relation: Relation,
    pub bound: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormCquel {
    /// The instance's predicates followed by fresh counting predicates.
    pub predicates: SymbolTable,
    pub roles: SymbolTable,
    pub constants: SymbolTable,
    pub q: Vec<CountRow>,
    pub universal: Vec<Formula>,
    pub el: Vec<ElConstraint>,
}

impl NormalFormCquel {
    /// The same conjunction seen as a general instance, for model checking.
    pub fn as_instance(&self) -> CquelInstance {
        CquelInstance {
            predicates: self.predicates.clone(),
            roles: self.roles.clone(),
            constants: self.constants.clone(),
            counting: self
                .q
                .iter()
                .map(|r| CountingSentence { relation: r.relation, bound: r.bound, body: Formula::sym(r.pred) })
                .collect(),
            universal: self.universal.clone(),
            el: self.el.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CquelError {
    #[error("counting sentence {0} must use <= or >=")]
    InvalidRelation(usize),
    #[error("branch-and-bound node budget exhausted after {0} nodes")]
    NodeBudget(u64),
    #[error("column-generation budget of {0} iterations exhausted")]
    IterationBudget(u64),
    #[error("count {0} does not fit in 64 bits")]
    CountOverflow(String),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("model construction failed: {0}")]
    Model(String),
    #[error("internal check failed: {0}")]
    Unsound(String),
}

/// Replaces every non-atomic counting body `ψ` by a fresh `q` with `∀x (q ↔ ψ)`.
pub fn normalize_cquel(inst: &CquelInstance) -> Result<NormalFormCquel, CquelError> {
    let mut predicates = inst.predicates.clone();
    let mut universal = inst.universal.clone();
    let mut q = Vec::new();
    for (i, s) in inst.counting.iter().enumerate() {
        if s.relation == Relation::Eq {
            return Err(CquelError::InvalidRelation(i));
        }
        let pred = match s.body.as_symbol() {
            Some(p) => p,
            None => {
                let p = predicates.fresh("q");
                universal.push(Formula::iff(Formula::sym(p), s.body.clone()));
                p
            }
        };
        q.push(CountRow { pred, relation: s.relation, bound: s.bound });
    }
    Ok(NormalFormCquel {
        predicates,
        roles: inst.roles.clone(),
        constants: inst.constants.clone(),
        q,
        universal,
        el: inst.el.clone(),
    })
}

/// Renders a basic concept in the instance syntax.
pub struct BasicDisplay<'a> {
    pub basic: Basic,
    pub predicates: &'a SymbolTable,
    pub roles: &'a SymbolTable,
}

impl fmt::Display for BasicDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.basic {
            Basic::Pred(p) => write!(f, "{}", self.predicates.name(p)),
            Basic::Exists(r) => write!(f, "some {}", self.roles.name(r)),
            Basic::ExistsInv(r) => write!(f, "some inv {}", self.roles.name(r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    pub(crate) fn example_two(with_f: bool) -> CquelInstance {
        let mut predicates = SymbolTable::new();
        let mut f = |s: &str| parse_formula(s, &mut predicates).unwrap();
        let mut counting = vec![
            CountingSentence { relation: Relation::Le, bound: 15, body: f("g & (m | h)") },
            CountingSentence { relation: Relation::Ge, bound: 10, body: f("g & !h") },
            CountingSentence { relation: Relation::Le, bound: 7, body: f("p & !m") },
        ];
        if with_f {
            counting.push(CountingSentence { relation: Relation::Ge, bound: 8, body: f("g & !m & !h") });
        }
        let universal = vec![f("g -> p")];
        CquelInstance { predicates, counting, universal, ..Default::default() }
    }

    #[test]
    fn example_two_normal_form() {
        let nf = normalize_cquel(&example_two(true)).unwrap();
        let names: Vec<&str> = nf.q.iter().map(|r| nf.predicates.name(r.pred)).collect();
        assert_eq!(names, ["q1", "q2", "q3", "q4"]);
        assert_eq!(nf.q.iter().map(|r| r.bound).collect::<Vec<_>>(), [15, 10, 7, 8]);
        assert_eq!(nf.universal.len(), 5);
        let shown = nf.universal[1].display(&nf.predicates).to_string();
        assert_eq!(shown, "q1 <-> g & (m | h)");
    }

    #[test]
    fn atomic_bodies_stay() {
        let mut predicates = SymbolTable::new();
        let p = predicates.intern("p");
        let inst = CquelInstance {
            predicates,
            counting: vec![CountingSentence { relation: Relation::Ge, bound: 1, body: Formula::sym(p) }],
            ..Default::default()
        };
        let nf = normalize_cquel(&inst).unwrap();
        assert_eq!(nf.q, vec![CountRow { pred: p, relation: Relation::Ge, bound: 1 }]);
        assert!(nf.universal.is_empty());
    }

    #[test]
    fn universal_as_zero_count() {
        let mut predicates = SymbolTable::new();
        let body = parse_formula("!p", &mut predicates).unwrap();
        let inst = CquelInstance {
            predicates,
            counting: vec![CountingSentence { relation: Relation::Le, bound: 0, body }],
            ..Default::default()
        };
        let nf = normalize_cquel(&inst).unwrap();
        assert_eq!(nf.universal[0].display(&nf.predicates).to_string(), "q1 <-> !p");
        assert_eq!(nf.q[0].bound, 0);
    }
}
