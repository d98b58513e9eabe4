//! Łukasiewicz probabilistic satisfiability by column generation.
//!
//! The master LP mirrors the classical one with two changes: columns are
//! `[0, 1]`-valued, and the total-mass row comes last. Column search asks the
//! MILP encoding of value-1 satisfiability for a valuation beating the
//! current duals.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::bnb::{BnbPolicy, TieBreak};
use crate::formula::{SymbolId, SymbolTable};
use crate::lp::{merge_column, solve_lp_with, ColumnId, LpConfig, LpError, LpProblem, LpSolution, Relation};
use crate::luka::{eval_luka, LFormula, LValuation, LukaError, LukaMilp, LukaSat};
use crate::psat::WitnessRejection;
use crate::rational::{is_probability, primitive_integer_vector, Rational};
use crate::sat::LinearCut;

/// `C(formula) = prob`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LipAssignment {
    pub formula: LFormula,
    pub prob: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LipInstance {
    pub symbols: SymbolTable,
    /// Formulas that must take value 1.
    pub gamma: Vec<LFormula>,
    pub assignments: Vec<LipAssignment>,
}

impl LipInstance {
    /// `Γ` as `C(γ) = 1` followed by the assignments; stakes index this list.
    pub fn constraints(&self) -> Vec<LipAssignment> {
        self.gamma
            .iter()
            .map(|g| LipAssignment { formula: g.clone(), prob: Rational::one() })
            .chain(self.assignments.iter().cloned())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormLip {
    pub symbols: SymbolTable,
    pub gamma: Vec<LFormula>,
    pub psi: Vec<(SymbolId, Rational)>,
    /// Index into [`LipInstance::constraints`] per `Ψ` entry.
    pub origin: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedLValuation {
    pub valuation: LValuation,
    pub weight: Rational,
}

/// Convex combination of `[0, 1]` valuations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvexWitness {
    pub entries: Vec<WeightedLValuation>,
}

impl ConvexWitness {
    pub fn new(entries: impl IntoIterator<Item = (LValuation, Rational)>) -> Self {
        ConvexWitness {
            entries: entries.into_iter().map(|(valuation, weight)| WeightedLValuation { valuation, weight }).collect(),
        }
    }

    pub fn nonzero(&self) -> usize {
        self.entries.iter().filter(|e| !e.weight.is_zero()).count()
    }

    /// Expected truth value `Σ λⱼ·vⱼ(α)`.
    pub fn expectation(&self, f: &LFormula) -> Result<Rational, crate::formula::UnmappedSymbol> {
        let mut total = Rational::zero();
        for e in &self.entries {
            total += &e.weight * eval_luka(f, &e.valuation)?;
        }
        Ok(total)
    }
}

/// For every valuation giving `Γ` value 1, `Σ wᵢ·v(aᵢ) + constant ≤ 0`,
/// while `Σ wᵢ·qᵢ + constant > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LipRefutation {
    pub constant: Rational,
    pub weights: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LipVerdict {
    Sat(ConvexWitness),
    Unsat(LipRefutation),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LipStats {
    pub iterations: u64,
    pub columns_generated: u64,
    pub milp_calls: u64,
    pub bnb_nodes: u64,
    pub lp_pivots: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LipOutcome {
    pub verdict: LipVerdict,
    pub stats: LipStats,
}

#[derive(Debug, Clone)]
pub struct LipConfig {
    pub max_iterations: Option<u64>,
    pub bnb: BnbPolicy,
    pub lp: LpConfig,
}

impl Default for LipConfig {
    fn default() -> Self {
        LipConfig {
            max_iterations: None,
            bnb: BnbPolicy { tie_break: TieBreak::Lifo, ..Default::default() },
            lp: LpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LipError {
    #[error("value {value} of assignment {index} is outside [0, 1]")]
    InvalidProbability { index: usize, value: Rational },
    #[error("column-generation budget of {0} iterations exhausted")]
    IterationBudget(u64),
    #[error(transparent)]
    Luka(#[from] LukaError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal check failed: {0}")]
    Unsound(String),
}

pub fn normalize_lip(inst: &LipInstance) -> Result<NormalFormLip, LipError> {
    let mut symbols = inst.symbols.clone();
    let mut gamma = Vec::new();
    let mut psi: Vec<(SymbolId, Rational)> = Vec::new();
    let mut origin = Vec::new();
    for (index, a) in inst.constraints().into_iter().enumerate() {
        if !is_probability(&a.prob) {
            return Err(LipError::InvalidProbability { index, value: a.prob });
        }
        if a.prob.is_one() {
            gamma.push(a.formula);
            continue;
        }
        if a.prob.is_zero() {
            gamma.push(LFormula::neg(a.formula));
            continue;
        }
        let y = match a.formula.as_symbol().filter(|s| psi.iter().all(|(y, _)| y != s)) {
            Some(s) => s,
            None => {
                let y = symbols.fresh("a");
                gamma.push(LFormula::iff(LFormula::sym(y), a.formula));
                y
            }
        };
        psi.push((y, a.prob));
        origin.push(index);
    }
    Ok(NormalFormLip { symbols, gamma, psi, origin })
}

/// Any valuation giving `Γ` value 1 whose `Ψ` projection `y` has
/// `Σ zᵢ·yᵢ + z_{k+1} ≥ 0`. `z` is aligned with `Ψ` plus the trailing mass row.
pub fn lip_generate_column(nf: &NormalFormLip, z: &[Rational], policy: &BnbPolicy) -> Result<Option<LValuation>, LipError> {
    let k = nf.psi.len();
    let vars: Vec<SymbolId> = nf.psi.iter().map(|(y, _)| *y).collect();
    let cut = LinearCut::new(z[..k].to_vec(), -&z[k]);
    let mut milp = LukaMilp::new(&nf.gamma, nf.symbols.len());
    milp.add_cut(&cut, &vars);
    Ok(milp.solve(policy)?.valuation().cloned())
}

struct Session<'a> {
    nf: &'a NormalFormLip,
    config: &'a LipConfig,
    /// Ψ indices in ascending order of value; row `r` is `order[r]`, row `k` is the mass.
    order: Vec<usize>,
    models: Vec<Option<LValuation>>,
    stats: LipStats,
}

impl Session<'_> {
    fn milp(&self) -> LukaMilp {
        LukaMilp::new(&self.nf.gamma, self.nf.symbols.len())
    }

    fn run(&mut self, milp: &mut LukaMilp, improving: Option<(&[(SymbolId, Rational)], Rational)>) -> Result<LukaSat, LukaError> {
        self.stats.milp_calls += 1;
        let before = milp.nodes_explored;
        let r = match improving {
            None => milp.solve(&self.config.bnb),
            Some((objective, threshold)) => milp.solve_improving(objective, threshold, &self.config.bnb),
        };
        self.stats.bnb_nodes += milp.nodes_explored - before;
        r
    }

    fn column(&self, v: &LValuation) -> Vec<Rational> {
        let mut col: Vec<Rational> = self.order.iter().map(|&i| v.0[self.nf.psi[i].0 .0].clone()).collect();
        col.push(Rational::one());
        col
    }

    fn initial_problem(&mut self) -> Result<LpProblem, LukaError> {
        let k = self.order.len();
        let mut rhs: Vec<Rational> = self.order.iter().map(|&i| self.nf.psi[i].1.clone()).collect();
        rhs.push(Rational::one());
        let mut p = LpProblem::new(vec![Relation::Eq; k + 1], rhs);
        for j in 0..=k {
            // D_{k+1}: column j has ones in rows j..=k
            let column: Vec<Rational> =
                (0..=k).map(|r| if r >= j { Rational::one() } else { Rational::zero() }).collect();
            let mut milp = self.milp();
            for (r, &i) in self.order.iter().enumerate() {
                milp.pin(self.nf.psi[i].0, column[r].clone());
            }
            let model = self.run(&mut milp, None)?.valuation().cloned();
            let cost = if model.is_some() { Rational::zero() } else { Rational::one() };
            p.add_column(column, cost);
            self.models.push(model);
        }
        Ok(p)
    }

    fn witness(&self, sol: &LpSolution) -> Result<ConvexWitness, LipError> {
        let mut entries: Vec<(LValuation, Rational)> = Vec::new();
        for (j, x) in sol.primal.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let v = self.models[j]
                .clone()
                .ok_or_else(|| LipError::Unsound("positive weight on a Γ-unsatisfiable column".into()))?;
            match entries.iter_mut().find(|(u, _)| *u == v) {
                Some((_, w)) => *w += x,
                None => entries.push((v, x.clone())),
            }
        }
        Ok(ConvexWitness::new(entries))
    }
}

pub fn lipsat_solve(nf: &NormalFormLip, config: &LipConfig) -> Result<LipOutcome, LipError> {
    let k = nf.psi.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| nf.psi[a].1.cmp(&nf.psi[b].1));
    let mut s = Session { nf, config, order, models: Vec::new(), stats: LipStats::default() };
    let mut p = s.initial_problem()?;
    let basis: Vec<ColumnId> = (0..=k).map(ColumnId::Structural).collect();
    let mut sol = solve_lp_with(&p, Some(&basis), &config.lp)?;
    loop {
        s.stats.lp_pivots = sol.iterations;
        log::debug!("lipsat iteration {}: cost {}", s.stats.iterations, sol.objective);
        if sol.objective.is_zero() {
            let w = s.witness(&sol)?;
            check_normal_witness(nf, &w)?;
            if w.nonzero() > k + 1 {
                return Err(LipError::Unsound(format!("witness has {} valuations", w.nonzero())));
            }
            return Ok(LipOutcome { verdict: LipVerdict::Sat(w), stats: s.stats });
        }
        if config.max_iterations.is_some_and(|max| s.stats.iterations >= max) {
            return Err(LipError::IterationBudget(s.stats.iterations));
        }
        s.stats.iterations += 1;
        // maximize Σ zᵢ·yᵢ: accept only Σ (−zᵢ)·yᵢ < z_mass
        let objective: Vec<(SymbolId, Rational)> =
            s.order.iter().enumerate().map(|(r, &i)| (nf.psi[i].0, -&sol.duals[r])).collect();
        let mut milp = s.milp();
        let found = s.run(&mut milp, Some((&objective, sol.duals[k].clone())))?;
        let Some(v) = found.valuation().cloned() else {
            let mut weights = vec![Rational::zero(); k];
            for (r, &i) in s.order.iter().enumerate() {
                weights[i] = sol.duals[r].clone();
            }
            let refutation = LipRefutation { constant: sol.duals[k].clone(), weights };
            return Ok(LipOutcome { verdict: LipVerdict::Unsat(refutation), stats: s.stats });
        };
        let column = s.column(&v);
        s.models.push(Some(v));
        s.stats.columns_generated += 1;
        let next = merge_column(&mut p, &sol, column, Rational::zero())?;
        if next.objective > sol.objective {
            return Err(LipError::Unsound("master objective increased".into()));
        }
        sol = next;
    }
}

fn check_normal_witness(nf: &NormalFormLip, w: &ConvexWitness) -> Result<(), LipError> {
    let unsound = |m: String| LipError::Unsound(m);
    let total: Rational = w.entries.iter().map(|e| &e.weight).sum();
    if !total.is_one() || w.entries.iter().any(|e| e.weight.is_negative()) {
        return Err(unsound(format!("weights sum to {total}")));
    }
    for e in &w.entries {
        for g in &nf.gamma {
            if !eval_luka(g, &e.valuation).map_err(|x| unsound(x.to_string()))?.is_one() {
                return Err(unsound("witness valuation gives Γ a value below 1".into()));
            }
        }
    }
    for (y, q) in &nf.psi {
        let got: Rational = w.entries.iter().map(|e| &e.weight * &e.valuation.0[y.0]).sum();
        if got != *q {
            return Err(unsound(format!("expectation of symbol {} is {got}, not {q}", y.0)));
        }
    }
    Ok(())
}

/// Exact re-check against the original assignment. Valuations may carry
/// extra trailing symbols.
pub fn verify_witness_lip(inst: &LipInstance, w: &ConvexWitness) -> Result<(), WitnessRejection> {
    if let Some(i) = w.entries.iter().position(|e| e.weight.is_negative()) {
        return Err(WitnessRejection::NegativeWeight(i));
    }
    let total: Rational = w.entries.iter().map(|e| &e.weight).sum();
    if !total.is_one() {
        return Err(WitnessRejection::SumNotOne(total));
    }
    let n = inst.symbols.len();
    if let Some(entry) = w.entries.iter().position(|e| e.valuation.0.len() < n || !e.valuation.is_in_unit_cube()) {
        return Err(WitnessRejection::ShortValuation { entry });
    }
    for (entry, e) in w.entries.iter().enumerate() {
        for (formula, g) in inst.gamma.iter().enumerate() {
            if !eval_luka(g, &e.valuation).is_ok_and(|x| x.is_one()) {
                return Err(WitnessRejection::GammaViolation { entry, formula });
            }
        }
    }
    for (index, a) in inst.assignments.iter().enumerate() {
        let value = w.expectation(&a.formula).map_err(|_| WitnessRejection::ShortValuation { entry: 0 })?;
        if value != a.prob {
            return Err(WitnessRejection::ConstraintViolation { index: inst.gamma.len() + index, value });
        }
    }
    Ok(())
}

/// Stakes on [`LipInstance::constraints`] with `Σ σᵢ·(qᵢ − v(αᵢ)) < 0` for all `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LDutchBook {
    pub stakes: Vec<(usize, Rational)>,
}

impl LDutchBook {
    pub fn balance(&self, constraints: &[LipAssignment], v: &LValuation) -> Result<Rational, crate::formula::UnmappedSymbol> {
        let mut total = Rational::zero();
        for (i, s) in &self.stakes {
            let a = &constraints[*i];
            total += s * (&a.prob - eval_luka(&a.formula, v)?);
        }
        Ok(total)
    }
}

/// Decides whether every valuation loses under `book`, by asking for a
/// valuation with non-negative balance over definitional copies `bᵢ ↔ αᵢ`.
pub fn verify_l_dutch_book(inst: &LipInstance, book: &LDutchBook, policy: &BnbPolicy) -> Result<bool, LukaError> {
    let constraints = inst.constraints();
    let mut symbols = inst.symbols.clone();
    let mut defs = Vec::new();
    let mut vars = Vec::new();
    let mut weights = Vec::new();
    let mut bound = Rational::zero();
    for (i, s) in &book.stakes {
        let b = symbols.fresh("b");
        defs.push(LFormula::iff(LFormula::sym(b), constraints[*i].formula.clone()));
        vars.push(b);
        // σ·(q − b) ≥ … rearranged as −σ·b ≥ −σ·q
        weights.push(-s);
        bound -= s * &constraints[*i].prob;
    }
    let mut milp = LukaMilp::new(&defs, symbols.len());
    milp.add_cut(&LinearCut::new(weights, bound), &vars);
    Ok(milp.solve(policy)? == LukaSat::Unsat)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LCoherence {
    Coherent(ConvexWitness),
    Incoherent {
        book: LDutchBook,
        /// `false` when no stake on `Γ` large enough was found.
        verified: bool,
    },
}

/// Doublings of the `Γ` stake tried before giving up on a verified book.
const STAKE_DOUBLINGS: u32 = 24;

/// Integer stakes from a refutation. The `Γ` stake starts at the total of
/// the `Ψ` stakes plus one and doubles until the book verifies, since a
/// valuation may give `Γ` a value just under 1.
pub fn l_dutch_book_from_refutation(
    inst: &LipInstance,
    nf: &NormalFormLip,
    r: &LipRefutation,
    policy: &BnbPolicy,
) -> Result<(LDutchBook, bool), LukaError> {
    let psi_stakes: Vec<BigInt> = primitive_integer_vector(&r.weights).iter().map(|w| -w).collect();
    let mut big = psi_stakes.iter().map(|s| s.abs()).sum::<BigInt>() + BigInt::one();
    let constraints = inst.constraints();
    let build = |big: &BigInt| LDutchBook {
        stakes: constraints
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let stake = match nf.origin.iter().position(|&o| o == i) {
                    Some(j) => psi_stakes[j].clone(),
                    None if a.prob.is_one() => -big.clone(),
                    None => big.clone(),
                };
                (i, Rational::from_integer(stake))
            })
            .collect(),
    };
    for _ in 0..STAKE_DOUBLINGS {
        let book = build(&big);
        if verify_l_dutch_book(inst, &book, policy)? {
            return Ok((book, true));
        }
        big *= 2;
    }
    Ok((build(&big), false))
}

pub fn check_l_coherence(inst: &LipInstance, config: &LipConfig) -> Result<LCoherence, LipError> {
    let nf = normalize_lip(inst)?;
    match lipsat_solve(&nf, config)?.verdict {
        LipVerdict::Sat(w) => Ok(LCoherence::Coherent(w)),
        LipVerdict::Unsat(r) => {
            let (book, verified) = l_dutch_book_from_refutation(inst, &nf, &r, &config.bnb)?;
            Ok(LCoherence::Incoherent { book, verified })
        }
    }
}
