//! Probabilistic satisfiability by column generation.
//!
//! An instance is brought to normal form `⟨Γ, Ψ⟩` where `Γ` is a set of
//! classical formulas that must hold with probability one and `Ψ` pins the
//! probability of fresh atoms. The restricted master LP has one row for the
//! total mass and one per `Ψ` atom; columns are valuations of the `Ψ` atoms.
//! Columns that cannot be extended to a model of `Γ` cost 1, so the instance
//! is satisfiable iff the minimum cost is 0. Improving columns are found by
//! SAT calls under a linear cut built from the current duals.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::cnf::{formulas_to_cnf, CnfFormula, Lit};
use crate::formula::{eval_classical, Formula, SymbolId, SymbolTable, Valuation};
use crate::lp::{merge_column, solve_lp_with, ColumnId, LpConfig, LpError, LpProblem, LpSolution, Relation};
use crate::rational::{is_probability, primitive_integer_vector, Rational};
use crate::sat::{generate_valuation_under_cut, CutModel, LinearCut, SatBackend, SatConfig, SatEngine, SatError, SatResult};

/// `P(formula) ⋈ prob`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsatAssignment {
    pub formula: Formula,
    pub relation: Relation,
    pub prob: Rational,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PsatInstance {
    pub symbols: SymbolTable,
    /// Formulas holding with probability one.
    pub gamma: Vec<Formula>,
    pub assignments: Vec<PsatAssignment>,
}

impl PsatInstance {
    /// `Γ` as `P(γ) = 1` rows followed by the assignments. Dutch-book stakes
    /// are indexed into this list.
    pub fn constraints(&self) -> Vec<PsatAssignment> {
        self.gamma
            .iter()
            .map(|g| PsatAssignment { formula: g.clone(), relation: Relation::Eq, prob: Rational::one() })
            .chain(self.assignments.iter().cloned())
            .collect()
    }
}

/// `⟨Γ, Ψ⟩` with every `Ψ` value strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormPsat {
    /// The instance's symbols followed by any fresh ones.
    pub symbols: SymbolTable,
    pub gamma: Vec<Formula>,
    pub psi: Vec<(SymbolId, Rational)>,
    /// For each `Ψ` entry, the index into [`PsatInstance::constraints`] it came from.
    pub origin: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedValuation {
    pub valuation: Valuation,
    pub weight: Rational,
}

/// A finite distribution over total valuations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbabilityWitness {
    pub entries: Vec<WeightedValuation>,
}

impl ProbabilityWitness {
    pub fn new(entries: impl IntoIterator<Item = (Valuation, Rational)>) -> Self {
        ProbabilityWitness {
            entries: entries.into_iter().map(|(valuation, weight)| WeightedValuation { valuation, weight }).collect(),
        }
    }

    pub fn nonzero(&self) -> usize {
        self.entries.iter().filter(|e| !e.weight.is_zero()).count()
    }

    /// `P(α)` under this distribution.
    pub fn probability(&self, f: &Formula) -> Result<Rational, crate::formula::UnmappedSymbol> {
        let mut total = Rational::zero();
        for e in &self.entries {
            if eval_classical(f, &e.valuation)? {
                total += &e.weight;
            }
        }
        Ok(total)
    }
}

/// Proof of unsatisfiability read off the final duals: for every valuation
/// `v` that extends to a model of `Γ`, `constant + Σ wᵢ·v(yᵢ) ≤ 0`, while
/// `constant + Σ wᵢ·pᵢ > 0`. Weights are aligned with `Ψ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsatRefutation {
    pub constant: Rational,
    pub weights: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PsatVerdict {
    Sat(ProbabilityWitness),
    Unsat(PsatRefutation),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PsatStats {
    pub iterations: u64,
    pub columns_generated: u64,
    pub sat_calls: u64,
    pub lp_pivots: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsatOutcome {
    pub verdict: PsatVerdict,
    pub stats: PsatStats,
}

#[derive(Debug, Clone, Default)]
pub struct PsatConfig {
    /// Maximum column-generation rounds; `None` is unlimited.
    pub max_iterations: Option<u64>,
    pub sat: SatConfig,
    pub lp: LpConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PsatError {
    #[error("probability {value} of assignment {index} is outside [0, 1]")]
    InvalidProbability { index: usize, value: Rational },
    #[error("coherence is defined for books, which need `=` on every assignment")]
    NotABook,
    #[error("column-generation budget of {0} iterations exhausted")]
    IterationBudget(u64),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal check failed: {0}")]
    Unsound(String),
}

pub fn normalize_psat(inst: &PsatInstance) -> Result<NormalFormPsat, PsatError> {
    let mut symbols = inst.symbols.clone();
    let mut gamma = Vec::new();
    let mut psi: Vec<(SymbolId, Rational)> = Vec::new();
    let mut origin = Vec::new();
    for (index, a) in inst.constraints().into_iter().enumerate() {
        if !is_probability(&a.prob) {
            return Err(PsatError::InvalidProbability { index, value: a.prob });
        }
        let certain = a.prob.is_one();
        let impossible = a.prob.is_zero();
        match a.relation {
            Relation::Ge if impossible => continue,
            Relation::Le if certain => continue,
            Relation::Ge | Relation::Eq if certain => {
                gamma.push(a.formula);
                continue;
            }
            Relation::Le | Relation::Eq if impossible => {
                gamma.push(Formula::not(a.formula));
                continue;
            }
            _ => {}
        }
        let atom = a.formula.as_symbol().filter(|s| psi.iter().all(|(y, _)| y != s));
        let y = match (a.relation, atom) {
            (Relation::Eq, Some(s)) => s,
            _ => {
                let y = symbols.fresh("y");
                let ys = Formula::sym(y);
                gamma.push(match a.relation {
                    Relation::Ge => Formula::implies(ys, a.formula),
                    Relation::Le => Formula::implies(a.formula, ys),
                    Relation::Eq => Formula::iff(ys, a.formula),
                });
                y
            }
        };
        psi.push((y, a.prob));
        origin.push(index);
    }
    Ok(NormalFormPsat { symbols, gamma, psi, origin })
}

/// Finds a model of `Γ` whose `Ψ` projection `y` has `z₀ + Σ zᵢ·yᵢ ≥ 0`,
/// where `z = (z₀, z₁, …, z_k)` is a dual vector of the master LP.
pub fn generate_column_psat(
    engine: &mut impl SatBackend,
    nf: &NormalFormPsat,
    z: &[Rational],
) -> Result<Option<Valuation>, PsatError> {
    let cnf = formulas_to_cnf(&nf.gamma, nf.symbols.len());
    let vars: Vec<usize> = nf.psi.iter().map(|(y, _)| y.0).collect();
    let found = column_under_dual(engine, &cnf, &vars, z, false)?;
    Ok(found.map(|m| Valuation(m.model[..nf.symbols.len()].to_vec())))
}

/// `z₀ + Σ zᵢ·yᵢ ≥ 0`, or `> 0` when `strict`.
fn column_under_dual(
    engine: &mut impl SatBackend,
    cnf: &CnfFormula,
    vars: &[usize],
    z: &[Rational],
    strict: bool,
) -> Result<Option<CutModel>, SatError> {
    let cut = LinearCut::new(z[1..].to_vec(), -&z[0]);
    let cut = if strict {
        // over integers, a > b iff a ≥ b + 1
        let (w, b) = cut.to_integer();
        LinearCut::new(w.into_iter().map(Rational::from_integer).collect(), Rational::from_integer(b + 1))
    } else {
        cut
    };
    generate_valuation_under_cut(engine, cnf, &cut, vars)
}

struct Session<'a, E> {
    nf: &'a NormalFormPsat,
    engine: &'a mut E,
    cnf: CnfFormula,
    /// Ψ indices in decreasing order of probability; row `r + 1` is `order[r]`.
    order: Vec<usize>,
    /// Full model per LP column, `None` for Γ-inconsistent columns.
    models: Vec<Option<Valuation>>,
    stats: PsatStats,
}

impl<E: SatBackend> Session<'_, E> {
    fn row_vars(&self) -> Vec<usize> {
        self.order.iter().map(|&i| self.nf.psi[i].0 .0).collect()
    }

    /// Extends a column's 0-1 pattern to a model of `Γ`.
    fn extend(&mut self, pattern: &[bool]) -> Result<Option<Valuation>, SatError> {
        let assumptions: Vec<Lit> =
            self.row_vars().iter().zip(pattern).map(|(&v, &b)| Lit::new(v, b)).collect();
        self.stats.sat_calls += 1;
        Ok(match self.engine.solve(&self.cnf, &assumptions)? {
            SatResult::Sat(m) => Some(Valuation(m[..self.nf.symbols.len()].to_vec())),
            SatResult::Unsat => None,
        })
    }

    fn initial_problem(&mut self) -> Result<LpProblem, SatError> {
        let k = self.order.len();
        let mut rhs = vec![Rational::one()];
        rhs.extend(self.order.iter().map(|&i| self.nf.psi[i].1.clone()));
        let mut p = LpProblem::new(vec![Relation::Eq; k + 1], rhs);
        for j in 0..=k {
            // T_up: column j has ones in rows 0..=j
            let pattern: Vec<bool> = (1..=k).map(|r| r <= j).collect();
            let model = self.extend(&pattern)?;
            let cost = if model.is_some() { Rational::zero() } else { Rational::one() };
            let mut column = vec![Rational::one()];
            column.extend(pattern.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }));
            p.add_column(column, cost);
            self.models.push(model);
        }
        Ok(p)
    }

    fn witness(&self, sol: &LpSolution) -> Result<ProbabilityWitness, PsatError> {
        let mut entries: Vec<(Valuation, Rational)> = Vec::new();
        for (j, x) in sol.primal.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let v = self.models[j]
                .clone()
                .ok_or_else(|| PsatError::Unsound("positive weight on a Γ-inconsistent column".into()))?;
            match entries.iter_mut().find(|(u, _)| *u == v) {
                Some((_, w)) => *w += x,
                None => entries.push((v, x.clone())),
            }
        }
        Ok(ProbabilityWitness::new(entries))
    }

    fn refutation(&self, sol: &LpSolution) -> PsatRefutation {
        let mut weights = vec![Rational::zero(); self.order.len()];
        for (r, &i) in self.order.iter().enumerate() {
            weights[i] = sol.duals[r + 1].clone();
        }
        PsatRefutation { constant: sol.duals[0].clone(), weights }
    }
}

pub fn psat_solve(nf: &NormalFormPsat, config: &PsatConfig) -> Result<PsatOutcome, PsatError> {
    let mut engine = SatEngine::new(config.sat.clone());
    psat_solve_with(&mut engine, nf, config)
}

pub fn psat_solve_with(
    engine: &mut impl SatBackend,
    nf: &NormalFormPsat,
    config: &PsatConfig,
) -> Result<PsatOutcome, PsatError> {
    let mut order: Vec<usize> = (0..nf.psi.len()).collect();
    // stable, so ties keep input order
    order.sort_by(|&a, &b| nf.psi[b].1.cmp(&nf.psi[a].1));
    let mut s = Session {
        nf,
        engine,
        cnf: formulas_to_cnf(&nf.gamma, nf.symbols.len()),
        order,
        models: Vec::new(),
        stats: PsatStats::default(),
    };
    let mut p = s.initial_problem()?;
    let basis: Vec<ColumnId> = (0..p.num_columns()).map(ColumnId::Structural).collect();
    let mut sol = solve_lp_with(&p, Some(&basis), &config.lp)?;
    let vars = s.row_vars();
    loop {
        s.stats.lp_pivots = sol.iterations;
        log::debug!("psat iteration {}: cost {}", s.stats.iterations, sol.objective);
        if sol.objective.is_zero() {
            let w = s.witness(&sol)?;
            check_normal_witness(nf, &w)?;
            if w.nonzero() > nf.psi.len() + 1 {
                return Err(PsatError::Unsound(format!("witness has {} valuations", w.nonzero())));
            }
            return Ok(PsatOutcome { verdict: PsatVerdict::Sat(w), stats: s.stats });
        }
        if config.max_iterations.is_some_and(|max| s.stats.iterations >= max) {
            return Err(PsatError::IterationBudget(s.stats.iterations));
        }
        s.stats.iterations += 1;
        s.stats.sat_calls += 1;
        let Some(found) = column_under_dual(s.engine, &s.cnf, &vars, &sol.duals, true)? else {
            let refutation = s.refutation(&sol);
            return Ok(PsatOutcome { verdict: PsatVerdict::Unsat(refutation), stats: s.stats });
        };
        let mut column = vec![Rational::one()];
        column.extend(found.projection.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }));
        s.models.push(Some(Valuation(found.model[..nf.symbols.len()].to_vec())));
        s.stats.columns_generated += 1;
        let next = merge_column(&mut p, &sol, column, Rational::zero())?;
        if next.objective > sol.objective {
            return Err(PsatError::Unsound("master objective increased".into()));
        }
        sol = next;
    }
}

/// Normal-form check: every valuation models `Γ` and `Ψ` holds with equality.
fn check_normal_witness(nf: &NormalFormPsat, w: &ProbabilityWitness) -> Result<(), PsatError> {
    let unsound = |m: String| PsatError::Unsound(m);
    let total: Rational = w.entries.iter().map(|e| &e.weight).sum();
    if !total.is_one() || w.entries.iter().any(|e| e.weight.is_negative()) {
        return Err(unsound(format!("weights sum to {total}")));
    }
    for e in &w.entries {
        for g in &nf.gamma {
            if !eval_classical(g, &e.valuation).map_err(|x| unsound(x.to_string()))? {
                return Err(unsound("witness valuation violates Γ".into()));
            }
        }
    }
    for (y, q) in &nf.psi {
        if w.probability(&Formula::sym(*y)).map_err(|x| unsound(x.to_string()))? != *q {
            return Err(unsound(format!("P(symbol {}) ≠ {q}", y.0)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessRejection {
    #[error("weight of entry {0} is negative")]
    NegativeWeight(usize),
    #[error("weights sum to {0}, not 1")]
    SumNotOne(Rational),
    #[error("valuation {entry} does not assign every instance symbol")]
    ShortValuation { entry: usize },
    #[error("valuation {entry} violates Γ formula {formula}")]
    GammaViolation { entry: usize, formula: usize },
    #[error("assignment {index} fails: probability is {value}")]
    ConstraintViolation { index: usize, value: Rational },
}

/// Exact re-check of a distribution against the original instance. Valuations
/// may carry extra trailing symbols, such as the fresh atoms of a normal form.
pub fn verify_witness_psat(inst: &PsatInstance, w: &ProbabilityWitness) -> Result<(), WitnessRejection> {
    if let Some(i) = w.entries.iter().position(|e| e.weight.is_negative()) {
        return Err(WitnessRejection::NegativeWeight(i));
    }
    let total: Rational = w.entries.iter().map(|e| &e.weight).sum();
    if !total.is_one() {
        return Err(WitnessRejection::SumNotOne(total));
    }
    let n = inst.symbols.len();
    if let Some(entry) = w.entries.iter().position(|e| e.valuation.len() < n) {
        return Err(WitnessRejection::ShortValuation { entry });
    }
    for (entry, e) in w.entries.iter().enumerate() {
        for (formula, g) in inst.gamma.iter().enumerate() {
            if !eval_classical(g, &e.valuation).unwrap_or(false) {
                return Err(WitnessRejection::GammaViolation { entry, formula });
            }
        }
    }
    for (index, a) in inst.assignments.iter().enumerate() {
        let value = w.probability(&a.formula).map_err(|_| WitnessRejection::ShortValuation { entry: 0 })?;
        if !a.relation.holds(&value, &a.prob) {
            return Err(WitnessRejection::ConstraintViolation { index: inst.gamma.len() + index, value });
        }
    }
    Ok(())
}

/// Stakes `σᵢ` on [`PsatInstance::constraints`]: the bookmaker's balance
/// `Σ σᵢ·(pᵢ − v(αᵢ))` is negative in every world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DutchBook {
    pub stakes: Vec<(usize, Rational)>,
}

impl DutchBook {
    pub fn balance(&self, constraints: &[PsatAssignment], v: &Valuation) -> Result<Rational, crate::formula::UnmappedSymbol> {
        let mut total = Rational::zero();
        for (i, s) in &self.stakes {
            let a = &constraints[*i];
            let truth = if eval_classical(&a.formula, v)? { Rational::one() } else { Rational::zero() };
            total += s * (&a.prob - truth);
        }
        Ok(total)
    }
}

/// Symbol count up to which Dutch books are checked over every world.
pub const BOOK_ENUMERATION_LIMIT: usize = 20;

/// `Some(true)` when the book loses in all `2ⁿ` worlds, `None` above the enumeration limit.
pub fn verify_dutch_book(inst: &PsatInstance, book: &DutchBook) -> Option<bool> {
    let n = inst.symbols.len();
    if n > BOOK_ENUMERATION_LIMIT {
        return None;
    }
    let constraints = inst.constraints();
    Some((0u64..1 << n).all(|bits| {
        book.balance(&constraints, &Valuation::from_bits(bits, n))
            .is_ok_and(|b| b.is_negative())
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coherence {
    Coherent(ProbabilityWitness),
    Incoherent {
        book: DutchBook,
        /// `None` when the instance is too large to enumerate.
        verified: Option<bool>,
    },
}

/// Builds integer stakes from a refutation. Probability-one and
/// probability-zero constraints get a stake large enough to outweigh every
/// `Ψ` stake together, so any world violating `Γ` is a loss by itself.
pub fn dutch_book_from_refutation(inst: &PsatInstance, nf: &NormalFormPsat, r: &PsatRefutation) -> DutchBook {
    let scaled = primitive_integer_vector(&r.weights);
    let psi_stakes: Vec<BigInt> = scaled.iter().map(|w| -w).collect();
    let big = psi_stakes.iter().map(|s| s.abs()).sum::<BigInt>() + BigInt::one();
    let constraints = inst.constraints();
    let mut stakes = Vec::with_capacity(constraints.len());
    for (i, a) in constraints.iter().enumerate() {
        let stake = match nf.origin.iter().position(|&o| o == i) {
            Some(j) => psi_stakes[j].clone(),
            None if a.prob.is_one() => -big.clone(),
            None => big.clone(),
        };
        stakes.push((i, Rational::from_integer(stake)));
    }
    DutchBook { stakes }
}

pub fn check_coherence(inst: &PsatInstance, config: &PsatConfig) -> Result<Coherence, PsatError> {
    if inst.assignments.iter().any(|a| a.relation != Relation::Eq) {
        return Err(PsatError::NotABook);
    }
    let nf = normalize_psat(inst)?;
    match psat_solve(&nf, config)?.verdict {
        PsatVerdict::Sat(w) => Ok(Coherence::Coherent(w)),
        PsatVerdict::Unsat(r) => {
            let book = dutch_book_from_refutation(inst, &nf, &r);
            let verified = verify_dutch_book(inst, &book);
            if verified == Some(false) {
                return Err(PsatError::Unsound("extracted stakes are not a Dutch book".into()));
            }
            Ok(Coherence::Incoherent { book, verified })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::lp::{solve_lp, LpStatus};
    use crate::rational::{int, ratio};

    fn instance(gamma: &[&str], assignments: &[(&str, Relation, Rational)]) -> PsatInstance {
        let mut symbols = SymbolTable::new();
        let gamma = gamma.iter().map(|g| parse_formula(g, &mut symbols).unwrap()).collect();
        let assignments = assignments
            .iter()
            .map(|(f, relation, prob)| PsatAssignment {
                formula: parse_formula(f, &mut symbols).unwrap(),
                relation: *relation,
                prob: prob.clone(),
            })
            .collect();
        PsatInstance { symbols, gamma, assignments }
    }

    fn ant() -> PsatInstance {
        instance(
            &[],
            &[
                ("x1 | x2", Relation::Ge, ratio(3, 4)),
                ("x1 | !x2", Relation::Le, ratio(1, 3)),
                ("x1", Relation::Le, ratio(3, 20)),
            ],
        )
    }

    fn genes() -> PsatInstance {
        let q = ratio(3, 5);
        instance(
            &["x1 | x2", "x1 | x3", "x2 | x3"],
            &[("x1", Relation::Eq, q.clone()), ("x2", Relation::Eq, q.clone()), ("x3", Relation::Eq, q)],
        )
    }

    /// Independent dense check: one LP column per valuation of the instance symbols.
    fn dense_feasible(inst: &PsatInstance) -> bool {
        let n = inst.symbols.len();
        let mut relations = vec![Relation::Eq];
        let mut rhs = vec![int(1)];
        for a in &inst.assignments {
            relations.push(a.relation);
            rhs.push(a.prob.clone());
        }
        let mut p = LpProblem::new(relations, rhs);
        for bits in 0u64..1 << n {
            let v = Valuation::from_bits(bits, n);
            if !inst.gamma.iter().all(|g| eval_classical(g, &v).unwrap()) {
                continue;
            }
            let mut col = vec![int(1)];
            col.extend(inst.assignments.iter().map(|a| int(eval_classical(&a.formula, &v).unwrap() as i64)));
            p.add_column(col, int(0));
        }
        p.num_columns() > 0 && solve_lp(&p, None).unwrap().status == LpStatus::Optimal
    }

    #[test]
    fn ant_normal_form() {
        let inst = ant();
        let nf = normalize_psat(&inst).unwrap();
        let shown: Vec<String> = nf.gamma.iter().map(|g| g.display(&nf.symbols).to_string()).collect();
        assert_eq!(shown, ["y1 -> x1 | x2", "x1 | !x2 -> y2", "x1 -> y3"]);
        let psi: Vec<(&str, Rational)> = nf.psi.iter().map(|(y, p)| (nf.symbols.name(*y), p.clone())).collect();
        assert_eq!(psi, [("y1", ratio(3, 4)), ("y2", ratio(1, 3)), ("y3", ratio(3, 20))]);
    }

    #[test]
    fn genes_are_already_normal() {
        let inst = genes();
        let nf = normalize_psat(&inst).unwrap();
        assert_eq!(nf.gamma, inst.gamma);
        assert_eq!(nf.symbols.len(), 3);
        assert_eq!(nf.psi.iter().map(|(y, _)| y.0).collect::<Vec<_>>(), [0, 1, 2]);
    }

    #[test]
    fn extreme_probabilities_move_to_gamma() {
        let inst = instance(&[], &[("x1", Relation::Eq, int(1)), ("x2 & x1", Relation::Eq, int(0))]);
        let nf = normalize_psat(&inst).unwrap();
        assert!(nf.psi.is_empty());
        assert_eq!(nf.gamma.len(), 2);
        let bad = instance(&[], &[("x", Relation::Eq, ratio(3, 2))]);
        assert!(matches!(normalize_psat(&bad), Err(PsatError::InvalidProbability { index: 0, .. })));
    }

    #[test]
    fn ant_is_satisfiable() {
        let inst = ant();
        let nf = normalize_psat(&inst).unwrap();
        let out = psat_solve(&nf, &PsatConfig::default()).unwrap();
        let PsatVerdict::Sat(w) = out.verdict else { panic!("expected sat") };
        verify_witness_psat(&inst, &w).unwrap();
        assert!(w.nonzero() <= 4);
    }

    #[test]
    fn published_distribution_for_ants() {
        let inst = ant();
        let v = |x1, x2| Valuation(vec![x1, x2]);
        let w = ProbabilityWitness::new([
            (v(false, false), ratio(1, 5)),
            (v(true, false), ratio(1, 20)),
            (v(false, true), ratio(7, 10)),
            (v(true, true), ratio(1, 20)),
        ]);
        assert_eq!(verify_witness_psat(&inst, &w), Ok(()));
        let mut broken = w.clone();
        broken.entries[0].weight = ratio(1, 4);
        assert!(matches!(verify_witness_psat(&inst, &broken), Err(WitnessRejection::SumNotOne(_))));
    }

    #[test]
    fn gamma_violation_is_reported() {
        let inst = genes();
        let w = ProbabilityWitness::new([(Valuation(vec![false, false, true]), int(1))]);
        assert_eq!(verify_witness_psat(&inst, &w), Err(WitnessRejection::GammaViolation { entry: 0, formula: 0 }));
    }

    #[test]
    fn genes_are_incoherent() {
        let inst = genes();
        let nf = normalize_psat(&inst).unwrap();
        assert!(matches!(psat_solve(&nf, &PsatConfig::default()).unwrap().verdict, PsatVerdict::Unsat(_)));
        let Coherence::Incoherent { book, verified } = check_coherence(&inst, &PsatConfig::default()).unwrap() else {
            panic!("expected a Dutch book")
        };
        assert_eq!(verified, Some(true));
        // the stakes from the literature also work
        let classic = DutchBook { stakes: (0..6).map(|i| (i, int(if i < 3 { -1 } else { 1 }))).collect() };
        assert_eq!(verify_dutch_book(&inst, &classic), Some(true));
        assert_eq!(book.stakes.len(), 6);
    }

    #[test]
    fn tightened_ant_book_is_coherent() {
        let inst = instance(
            &[],
            &[
                ("x1 | x2", Relation::Eq, ratio(4, 5)),
                ("x1 | !x2", Relation::Eq, ratio(3, 10)),
                ("x1", Relation::Eq, ratio(1, 10)),
            ],
        );
        let Coherence::Coherent(w) = check_coherence(&inst, &PsatConfig::default()).unwrap() else {
            panic!("expected coherent")
        };
        verify_witness_psat(&inst, &w).unwrap();
    }

    #[test]
    fn contradictory_certainties() {
        let inst = instance(&[], &[("x", Relation::Eq, int(1)), ("!x", Relation::Eq, int(1))]);
        let Coherence::Incoherent { book, verified } = check_coherence(&inst, &PsatConfig::default()).unwrap() else {
            panic!("expected incoherent")
        };
        assert_eq!(verified, Some(true));
        // oracle: some integer stakes in [-2, 2]² make a book
        let constraints = inst.constraints();
        let exists = (-2..=2).any(|a| {
            (-2..=2).any(|b| {
                let candidate = DutchBook { stakes: vec![(0, int(a)), (1, int(b))] };
                (0..2).all(|x| candidate.balance(&constraints, &Valuation::from_bits(x, 1)).unwrap().is_negative())
            })
        });
        assert!(exists);
        assert_eq!(book.stakes.len(), 2);
    }

    #[test]
    fn symmetric_split() {
        let inst = instance(&[], &[("y", Relation::Eq, ratio(1, 2))]);
        let nf = normalize_psat(&inst).unwrap();
        let PsatVerdict::Sat(w) = psat_solve(&nf, &PsatConfig::default()).unwrap().verdict else { panic!() };
        let mut got: Vec<(bool, Rational)> = w.entries.iter().map(|e| (e.valuation.0[0], e.weight.clone())).collect();
        got.sort();
        assert_eq!(got, [(false, ratio(1, 2)), (true, ratio(1, 2))]);
    }

    #[test]
    fn column_generation_edge_cases() {
        let mut engine = SatEngine::default();
        let inst = instance(&["y1"], &[("y1", Relation::Eq, ratio(1, 2))]);
        let nf = NormalFormPsat {
            symbols: inst.symbols.clone(),
            gamma: inst.gamma.clone(),
            psi: vec![(SymbolId(0), ratio(1, 2))],
            origin: vec![1],
        };
        assert_eq!(generate_column_psat(&mut engine, &nf, &[int(0), int(-1)]).unwrap(), None);
        assert!(generate_column_psat(&mut engine, &nf, &[int(0), int(0)]).unwrap().is_some());
        let unsat = NormalFormPsat { gamma: vec![Formula::sym(SymbolId(0)), Formula::not(Formula::sym(SymbolId(0)))], ..nf };
        assert_eq!(generate_column_psat(&mut engine, &unsat, &[int(0), int(0)]).unwrap(), None);
    }

    #[test]
    fn budget_is_reported() {
        let nf = normalize_psat(&genes()).unwrap();
        let config = PsatConfig { max_iterations: Some(0), ..Default::default() };
        assert_eq!(psat_solve(&nf, &config), Err(PsatError::IterationBudget(0)));
    }

    #[test]
    fn random_instances_match_dense_lp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let names = ["a", "b", "c", "d"];
        for _ in 0..60 {
            let n = rng.gen_range(1..=4);
            let clause = |rng: &mut rand_chacha::ChaCha8Rng| {
                (0..rng.gen_range(1..=3))
                    .map(|_| format!("{}{}", if rng.gen() { "!" } else { "" }, names[rng.gen_range(0..n)]))
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            let gamma: Vec<String> = (0..rng.gen_range(0..=2)).map(|_| clause(&mut rng)).collect();
            let rels = [Relation::Eq, Relation::Le, Relation::Ge];
            let assignments: Vec<(String, Relation, Rational)> = (0..rng.gen_range(1..=3))
                .map(|_| (clause(&mut rng), rels[rng.gen_range(0..3)], ratio(rng.gen_range(0..=6), 6)))
                .collect();
            let g: Vec<&str> = gamma.iter().map(String::as_str).collect();
            let a: Vec<(&str, Relation, Rational)> = assignments.iter().map(|(f, r, p)| (f.as_str(), *r, p.clone())).collect();
            let mut inst = instance(&g, &a);
            for name in &names[..n] {
                inst.symbols.intern(name);
            }
            let nf = normalize_psat(&inst).unwrap();
            let out = psat_solve(&nf, &PsatConfig::default()).unwrap();
            match &out.verdict {
                PsatVerdict::Sat(w) => {
                    verify_witness_psat(&inst, w).unwrap();
                    assert!(w.nonzero() <= nf.psi.len() + 1);
                    assert!(dense_feasible(&inst), "{g:?} {assignments:?}");
                }
                PsatVerdict::Unsat(_) => assert!(!dense_feasible(&inst), "{g:?} {assignments:?}"),
            }
        }
    }

    #[test]
    fn kolmogorov_properties_of_witnesses() {
        let inst = ant();
        let nf = normalize_psat(&inst).unwrap();
        let PsatVerdict::Sat(w) = psat_solve(&nf, &PsatConfig::default()).unwrap().verdict else { panic!() };
        let mut t = nf.symbols.clone();
        let f = |s: &str, t: &mut SymbolTable| parse_formula(s, t).unwrap();
        for (a, b) in [("x1", "x2"), ("x1 & x2", "!x1"), ("x2 -> x1", "y1")] {
            let (a, b) = (f(a, &mut t), f(b, &mut t));
            let pa = w.probability(&a).unwrap();
            assert!(is_probability(&pa));
            let taut = Formula::or(a.clone(), Formula::not(a.clone()));
            assert!(w.probability(&taut).unwrap().is_one());
            let disjoint_b = Formula::and(b.clone(), Formula::not(a.clone()));
            let union = Formula::or(a.clone(), disjoint_b.clone());
            assert_eq!(w.probability(&union).unwrap(), pa + w.probability(&disjoint_b).unwrap());
        }
    }
}
