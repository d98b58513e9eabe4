//! Value-1 satisfiability as a mixed 0-1 linear program.
//!
//! Every distinct subformula gets a continuous variable in `[0, 1]` and each
//! truncated connective gets one binary selector choosing which piece of its
//! piecewise-linear truth function is active. Symbols occupy the first
//! columns, so a solution's prefix is the valuation.

use std::collections::HashMap;

use num_traits::{One, Zero};
use thiserror::Error;

use super::{eval_luka, LFormula, LValuation};
use crate::bnb::{bnb_feasible, bnb_improving, BnbOutcome, BnbPolicy};
use crate::formula::SymbolId;
use crate::lp::{LpError, LpProblem, LpSolution, Relation};
use crate::rational::Rational;
use crate::sat::LinearCut;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LukaSat {
    Sat(LValuation),
    Unsat,
}

impl LukaSat {
    pub fn valuation(&self) -> Option<&LValuation> {
        match self {
            LukaSat::Sat(v) => Some(v),
            LukaSat::Unsat => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LukaError {
    #[error("branch-and-bound node budget exhausted after {0} nodes")]
    NodeBudget(u64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("encoding produced a valuation that fails re-evaluation: {0}")]
    Unsound(String),
}

type Row = (Vec<(usize, Rational)>, Relation, Rational);

#[derive(Debug, Clone)]
pub struct LukaMilp {
    num_symbols: usize,
    num_vars: usize,
    integral: Vec<usize>,
    rows: Vec<Row>,
    nodes: HashMap<LFormula, usize>,
    gamma: Vec<LFormula>,
    pins: Vec<(SymbolId, Rational)>,
    cuts: Vec<(Vec<(SymbolId, Rational)>, Relation, Rational)>,
    /// Total branch-and-bound nodes over all solves of this encoding.
    pub nodes_explored: u64,
}

fn one() -> Rational {
    Rational::one()
}

fn neg_one() -> Rational {
    -Rational::one()
}

impl LukaMilp {
    /// Encodes `v(γ) = 1` for every `γ ∈ gamma`; columns `0..num_symbols` are the symbols.
    pub fn new(gamma: &[LFormula], num_symbols: usize) -> Self {
        let num_symbols = gamma
            .iter()
            .flat_map(|g| g.symbols())
            .map(|s| s.0 + 1)
            .max()
            .unwrap_or(0)
            .max(num_symbols);
        let mut m = LukaMilp {
            num_symbols,
            num_vars: 0,
            integral: Vec::new(),
            rows: Vec::new(),
            nodes: HashMap::new(),
            gamma: gamma.to_vec(),
            pins: Vec::new(),
            cuts: Vec::new(),
            nodes_explored: 0,
        };
        for _ in 0..num_symbols {
            m.unit_var();
        }
        for g in gamma {
            let v = m.encode(g);
            m.rows.push((vec![(v, one())], Relation::Eq, one()));
        }
        m
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    fn unit_var(&mut self) -> usize {
        let v = self.num_vars;
        self.num_vars += 1;
        self.rows.push((vec![(v, one())], Relation::Le, one()));
        v
    }

    fn selector(&mut self) -> usize {
        let d = self.unit_var();
        self.integral.push(d);
        d
    }

    fn encode(&mut self, f: &LFormula) -> usize {
        if let LFormula::Symbol(s) = f {
            return s.0;
        }
        if let Some(&v) = self.nodes.get(f) {
            return v;
        }
        let v = match f {
            LFormula::Neg(a) => {
                let a = self.encode(a);
                let v = self.num_vars;
                self.num_vars += 1;
                self.rows.push((vec![(v, one()), (a, one())], Relation::Eq, one()));
                v
            }
            _ => {
                let (a, b) = f.children().expect("binary connective");
                let (a, b) = (self.encode(a), self.encode(b));
                let v = self.unit_var();
                let d = self.selector();
                self.connective(f, v, a, b, d);
                v
            }
        };
        self.nodes.insert(f.clone(), v);
        v
    }

    fn connective(&mut self, f: &LFormula, v: usize, a: usize, b: usize, d: usize) {
        let r = &mut self.rows;
        let row = |terms: &[(usize, Rational)], rel, rhs: i64| (terms.to_vec(), rel, Rational::from_integer(rhs.into()));
        match f {
            // v = min(1, a + b)
            LFormula::Oplus(..) => {
                r.push(row(&[(v, one()), (a, neg_one()), (b, neg_one())], Relation::Le, 0));
                r.push(row(&[(v, one()), (d, neg_one())], Relation::Ge, 0));
                r.push(row(&[(v, one()), (a, neg_one()), (b, neg_one()), (d, one())], Relation::Ge, 0));
            }
            // v = max(0, a + b - 1)
            LFormula::Odot(..) => {
                r.push(row(&[(v, one()), (a, neg_one()), (b, neg_one())], Relation::Ge, -1));
                r.push(row(&[(v, one()), (d, neg_one())], Relation::Le, 0));
                r.push(row(&[(v, one()), (a, neg_one()), (b, neg_one()), (d, one())], Relation::Le, 0));
            }
            // v = min(1, 1 - a + b)
            LFormula::Implies(..) => {
                r.push(row(&[(v, one()), (a, one()), (b, neg_one())], Relation::Le, 1));
                r.push(row(&[(v, one()), (d, neg_one())], Relation::Ge, 0));
                r.push(row(&[(v, one()), (a, one()), (b, neg_one()), (d, one())], Relation::Ge, 1));
            }
            // d = 0 selects a, d = 1 selects b
            LFormula::Min(..) => {
                r.push(row(&[(v, one()), (a, neg_one())], Relation::Le, 0));
                r.push(row(&[(v, one()), (b, neg_one())], Relation::Le, 0));
                r.push(row(&[(v, one()), (a, neg_one()), (d, one())], Relation::Ge, 0));
                r.push(row(&[(v, one()), (b, neg_one()), (d, neg_one())], Relation::Ge, -1));
            }
            LFormula::Max(..) => {
                r.push(row(&[(v, one()), (a, neg_one())], Relation::Ge, 0));
                r.push(row(&[(v, one()), (b, neg_one())], Relation::Ge, 0));
                r.push(row(&[(v, one()), (a, neg_one()), (d, neg_one())], Relation::Le, 0));
                r.push(row(&[(v, one()), (b, neg_one()), (d, one())], Relation::Le, 1));
            }
            // v = 1 - t with t = |a - b|; d = 0 means a ≥ b
            LFormula::Iff(..) => {
                r.push(row(&[(v, one()), (a, one()), (b, neg_one())], Relation::Le, 1));
                r.push(row(&[(v, one()), (a, neg_one()), (b, one())], Relation::Le, 1));
                let two = Rational::from_integer(2.into());
                r.push((vec![(v, one()), (a, one()), (b, neg_one()), (d, two.clone())], Relation::Ge, one()));
                r.push((vec![(v, one()), (a, neg_one()), (b, one()), (d, -two)], Relation::Ge, neg_one()));
            }
            _ => unreachable!("not a binary connective"),
        }
    }

    /// Adds `v(s) = value`.
    pub fn pin(&mut self, s: SymbolId, value: Rational) {
        self.rows.push((vec![(s.0, one())], Relation::Eq, value.clone()));
        self.pins.push((s, value));
    }

    /// Adds `Σ w·v(s) ⋈ rhs`.
    pub fn add_linear(&mut self, terms: &[(SymbolId, Rational)], relation: Relation, rhs: Rational) {
        let row = terms.iter().map(|(s, w)| (s.0, w.clone())).collect();
        self.rows.push((row, relation, rhs.clone()));
        self.cuts.push((terms.to_vec(), relation, rhs));
    }

    pub fn add_cut(&mut self, cut: &LinearCut, vars: &[SymbolId]) {
        let terms: Vec<(SymbolId, Rational)> = vars.iter().copied().zip(cut.weights.iter().cloned()).collect();
        self.add_linear(&terms, Relation::Ge, cut.bound.clone());
    }

    fn problem(&self, objective: &[(SymbolId, Rational)]) -> LpProblem {
        let mut p = LpProblem::new(
            self.rows.iter().map(|r| r.1).collect(),
            self.rows.iter().map(|r| r.2.clone()).collect(),
        );
        let mut columns = vec![vec![Rational::zero(); self.rows.len()]; self.num_vars];
        for (i, (terms, _, _)) in self.rows.iter().enumerate() {
            for (v, w) in terms {
                columns[*v][i] += w;
            }
        }
        let mut costs = vec![Rational::zero(); self.num_vars];
        for (s, c) in objective {
            costs[s.0] += c;
        }
        for (col, c) in columns.into_iter().zip(costs) {
            p.add_column(col, c);
        }
        p
    }

    fn decode(&self, sol: &LpSolution) -> Result<LValuation, LukaError> {
        let v = LValuation(sol.primal[..self.num_symbols].to_vec());
        for (i, g) in self.gamma.iter().enumerate() {
            let value = eval_luka(g, &v).map_err(|e| LukaError::Unsound(e.to_string()))?;
            if !value.is_one() {
                return Err(LukaError::Unsound(format!("Γ[{i}] evaluates to {value}")));
            }
        }
        for (s, q) in &self.pins {
            if v.0[s.0] != *q {
                return Err(LukaError::Unsound(format!("pin on symbol {} violated", s.0)));
            }
        }
        for (terms, rel, rhs) in &self.cuts {
            let lhs: Rational = terms.iter().map(|(s, w)| w * &v.0[s.0]).sum();
            if !rel.holds(&lhs, rhs) {
                return Err(LukaError::Unsound("linear side constraint violated".into()));
            }
        }
        Ok(v)
    }

    fn outcome(&mut self, result: crate::bnb::BnbResult<LpSolution>) -> Result<LukaSat, LukaError> {
        self.nodes_explored += result.nodes;
        match result.outcome {
            BnbOutcome::Found(sol) => Ok(LukaSat::Sat(self.decode(&sol)?)),
            BnbOutcome::Infeasible => Ok(LukaSat::Unsat),
            BnbOutcome::BudgetExhausted => Err(LukaError::NodeBudget(result.nodes)),
        }
    }

    pub fn solve(&mut self, policy: &BnbPolicy) -> Result<LukaSat, LukaError> {
        let p = self.problem(&[]);
        let result = bnb_feasible(&p, &self.integral, policy)?;
        self.outcome(result)
    }

    /// A model with `Σ c·v(s) < threshold`.
    pub fn solve_improving(
        &mut self,
        objective: &[(SymbolId, Rational)],
        threshold: Rational,
        policy: &BnbPolicy,
    ) -> Result<LukaSat, LukaError> {
        let p = self.problem(objective);
        let result = bnb_improving(&p, &self.integral, policy, threshold.clone())?;
        let answer = self.outcome(result)?;
        if let LukaSat::Sat(v) = &answer {
            let value: Rational = objective.iter().map(|(s, c)| c * &v.0[s.0]).sum();
            if value >= threshold {
                return Err(LukaError::Unsound("objective threshold not met".into()));
            }
        }
        Ok(answer)
    }
}

/// A valuation giving every formula of `gamma` value 1 and, when a cut is
/// given, satisfying `Σ w_i·v(vars_i) ≥ bound`.
pub fn luka_sat(
    gamma: &[LFormula],
    num_symbols: usize,
    cut: Option<(&LinearCut, &[SymbolId])>,
    policy: &BnbPolicy,
) -> Result<LukaSat, LukaError> {
    let mut milp = LukaMilp::new(gamma, num_symbols);
    if let Some((cut, vars)) = cut {
        milp.add_cut(cut, vars);
    }
    milp.solve(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnb::TieBreak;
    use crate::formula::SymbolTable;
    use crate::luka::parse_lformula;
    use crate::rational::{int, ratio};

    fn policy() -> BnbPolicy {
        BnbPolicy { tie_break: TieBreak::Lifo, ..Default::default() }
    }

    fn parse_all(texts: &[&str]) -> (Vec<LFormula>, SymbolTable) {
        let mut t = SymbolTable::new();
        let fs = texts.iter().map(|s| parse_lformula(s, &mut t).unwrap()).collect();
        (fs, t)
    }

    #[test]
    fn truncation_boundary() {
        let (g, t) = parse_all(&["x (+) x"]);
        let v = luka_sat(&g, t.len(), None, &policy()).unwrap();
        let v = v.valuation().unwrap();
        assert!(v.0[0] >= ratio(1, 2));
    }

    #[test]
    fn self_implication_cannot_fail() {
        let (g, t) = parse_all(&["~(x -> x)"]);
        assert_eq!(luka_sat(&g, t.len(), None, &policy()).unwrap(), LukaSat::Unsat);
    }

    #[test]
    fn gene_hypothesis_with_mass_cut() {
        let (g, t) = parse_all(&["x1 (+) x2", "x1 (+) x3", "x2 (+) x3"]);
        let cut = LinearCut::new(vec![int(1), int(1), int(1)], ratio(9, 5));
        let vars = [SymbolId(0), SymbolId(1), SymbolId(2)];
        let r = luka_sat(&g, t.len(), Some((&cut, &vars)), &policy()).unwrap();
        let v = r.valuation().expect("satisfiable");
        let total: Rational = v.0.iter().sum();
        assert!(total >= ratio(9, 5));
        // pinned to the symmetric point
        let mut m = LukaMilp::new(&g, t.len());
        for s in vars {
            m.pin(s, ratio(3, 5));
        }
        assert!(m.solve(&policy()).unwrap().valuation().is_some());
        let mut m = LukaMilp::new(&g, t.len());
        for s in vars {
            m.pin(s, ratio(2, 5));
        }
        assert_eq!(m.solve(&policy()).unwrap(), LukaSat::Unsat);
    }

    #[test]
    fn every_connective_is_exact_at_pinned_points() {
        let (fs, t) = parse_all(&["x (+) y", "x (*) y", "x -> y", "x & y", "x | y", "x <-> y", "~x"]);
        let z = SymbolId(t.len());
        let grid = [int(0), ratio(1, 3), ratio(1, 2), ratio(4, 5), int(1)];
        for f in &fs {
            for a in &grid {
                for b in &grid {
                    let v = LValuation(vec![a.clone(), b.clone()]);
                    let expected = eval_luka(f, &v).unwrap();
                    // z <-> f with x, y pinned forces z to the truth value
                    let g = vec![LFormula::iff(LFormula::Symbol(z), f.clone())];
                    let mut m = LukaMilp::new(&g, t.len() + 1);
                    m.pin(SymbolId(0), a.clone());
                    m.pin(SymbolId(1), b.clone());
                    let r = m.solve(&policy()).unwrap();
                    assert_eq!(r.valuation().unwrap().0[z.0], expected);
                }
            }
        }
    }

    #[test]
    fn improving_search_respects_strict_threshold() {
        let (g, t) = parse_all(&["x (+) y", "~(x (*) y)"]);
        // maximize x + y: minimum of -(x + y) over models is -1
        let obj = [(SymbolId(0), int(-1)), (SymbolId(1), int(-1))];
        let mut m = LukaMilp::new(&g, t.len());
        assert!(m.solve_improving(&obj, ratio(-1, 2), &policy()).unwrap().valuation().is_some());
        let mut m = LukaMilp::new(&g, t.len());
        assert_eq!(m.solve_improving(&obj, int(-1), &policy()).unwrap(), LukaSat::Unsat);
    }
}
