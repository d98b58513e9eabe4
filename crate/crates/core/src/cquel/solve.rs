//! Branch-and-bound over column-generation relaxations.
//!
//! A node's master LP has one row per counting predicate, with its native
//! relation, and a last row `Σx ≥ 1` since a model has at least one
//! element. Columns are 0-1 patterns over the rows; a pattern costs 0 when
//! some susceptible type projects onto it. Branching on a fractional count
//! `x_j` introduces a split predicate `s ↔ e_j`, where `e_j` is the
//! elementary term of column `j`, and bounds the number of `s` elements.

use std::collections::BTreeMap;

use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use super::closure::JointSat;
use super::{CountRow, CquelError, NormalFormCquel};
use crate::bnb::{branch_and_bound, BnbOutcome, BnbPolicy, Relaxation, TieBreak};
use crate::formula::{eval_classical, Formula, SymbolId, SymbolTable, Valuation};
use crate::lp::{merge_column, solve_lp_with, LpConfig, LpProblem, Relation};
use crate::rational::{ceil, floor, Rational};
use crate::sat::{LinearCut, SatBackend, SatConfig, SatEngine, SatError};

/// Largest number of distinct nonempty types a solution needs with `k`
/// counting sentences: `⌈5/2 (k log₂ k + 1)⌉`, taking `k log k = 0` for `k ≤ 1`.
pub fn size_bound(k: usize) -> usize {
    let k = k as f64;
    let klogk = if k <= 1.0 { 0.0 } else { k * k.log2() };
    (2.5 * (klogk + 1.0)).ceil() as usize
}

#[derive(Debug, Clone)]
pub struct CquelConfig {
    pub max_nodes: Option<u64>,
    /// Column-generation iterations per node.
    pub max_iterations: Option<u64>,
    pub tie_break: TieBreak,
    pub sat: SatConfig,
    pub lp: LpConfig,
}

impl Default for CquelConfig {
    fn default() -> Self {
        CquelConfig {
            max_nodes: Some(10_000),
            max_iterations: Some(10_000),
            tie_break: TieBreak::Fifo,
            sat: SatConfig::default(),
            lp: LpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CquelStats {
    pub bnb_nodes: u64,
    pub iterations: u64,
    pub columns_generated: u64,
    pub sat_calls: u64,
    pub lp_pivots: u64,
}

/// Element counts per type. Types are valuations over the normal form's
/// predicates followed by the role pseudo-predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountWitness {
    pub predicates: SymbolTable,
    pub entries: Vec<(Valuation, u64)>,
}

impl CountWitness {
    pub fn nonzero(&self) -> usize {
        self.entries.iter().filter(|(_, c)| *c > 0).count()
    }

    pub fn domain_size(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Number of elements whose type satisfies `f`.
    pub fn count(&self, f: &Formula) -> Result<u64, crate::formula::UnmappedSymbol> {
        let mut total = 0;
        for (v, c) in &self.entries {
            if eval_classical(f, v)? {
                total += c;
            }
        }
        Ok(total)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CquelVerdict {
    Sat(CountWitness),
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CquelOutcome {
    pub verdict: CquelVerdict,
    pub stats: CquelStats,
}

/// Positive part of an optimal zero-cost master solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedSolution {
    /// Counted predicates of the node, one per master row.
    pub rows: Vec<SymbolId>,
    /// A susceptible type per positive column.
    pub columns: Vec<Valuation>,
    pub x: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountRejection {
    #[error("the EL constraints are inconsistent")]
    Inconsistent,
    #[error("the domain is empty")]
    Empty,
    #[error("entry {entry} has {found} values, expected {expected}")]
    WrongLength { entry: usize, found: usize, expected: usize },
    #[error("entry {entry} is not a susceptible type")]
    NotSusceptible { entry: usize },
    #[error("row {row} counts {count} elements")]
    RowViolated { row: usize, count: u64 },
    #[error("{found} distinct types exceed the bound {limit}")]
    TooManyTypes { found: usize, limit: usize },
}

/// `Σ zᵢ·yᵢ + z_k ≥ 0`, or `> 0` when `strict`; the last dual belongs to
/// the domain row.
fn dual_cut(z: &[Rational], strict: bool) -> LinearCut {
    let k = z.len() - 1;
    let cut = LinearCut::new(z[..k].to_vec(), -&z[k]);
    if !strict {
        return cut;
    }
    let (w, b) = cut.to_integer();
    LinearCut::new(w.into_iter().map(Rational::from_integer).collect(), Rational::from_integer(b + 1))
}

/// A susceptible type whose projection `y` onto `rows` has
/// `Σ zᵢ·yᵢ + z_k ≥ 0`, with `z` the duals of a master LP.
pub fn cquel_generate_column(
    ctx: &mut JointSat,
    engine: &mut impl SatBackend,
    rows: &[SymbolId],
    z: &[Rational],
) -> Result<Option<Valuation>, SatError> {
    assert_eq!(z.len(), rows.len() + 1, "one dual per row plus the domain row");
    ctx.solve(engine, &[], &[], Some((&dual_cut(z, false), rows)))
}

#[derive(Debug, Clone)]
struct Split {
    pred: SymbolId,
    term: Vec<(SymbolId, bool)>,
    relation: Relation,
    bound: u64,
}

impl Split {
    fn definition(&self) -> Formula {
        let literals = self.term.iter().map(|&(s, b)| if b { Formula::sym(s) } else { Formula::not(Formula::sym(s)) });
        let me = Formula::sym(self.pred);
        // an empty term is true everywhere
        let term = Formula::conjunction(literals).unwrap_or_else(|| Formula::implies(me.clone(), me.clone()));
        Formula::iff(me, term)
    }
}

#[derive(Debug, Clone, Default)]
struct Node {
    splits: Vec<Split>,
    /// Types from the parent's solution, reused as starting columns.
    hints: Vec<Valuation>,
}

struct Search<'a, E> {
    nf: &'a NormalFormCquel,
    ctx: JointSat,
    engine: &'a mut E,
    config: &'a CquelConfig,
    stats: CquelStats,
    limit: usize,
}

fn pattern_column(pattern: &[bool]) -> Vec<Rational> {
    let mut column: Vec<Rational> =
        pattern.iter().map(|&b| if b { Rational::one() } else { Rational::zero() }).collect();
    column.push(Rational::one());
    column
}

impl<E: SatBackend> Search<'_, E> {
    fn rows(&self, node: &Node) -> Vec<CountRow> {
        let mut rows = self.nf.q.clone();
        rows.extend(node.splits.iter().map(|s| CountRow { pred: s.pred, relation: s.relation, bound: s.bound }));
        rows
    }

    /// Extends `v` with the node's split predicates; `None` if it then fails
    /// the constraints.
    fn adapt(&self, v: &Valuation, node: &Node, definitions: &[Formula]) -> Option<Valuation> {
        let mut v = v.clone();
        v.0.resize(self.ctx.predicates.len(), false);
        for s in &node.splits {
            let holds = s.term.iter().all(|&(p, b)| v.get(p) == Some(b));
            v.set(s.pred, holds);
        }
        let ok = self.ctx.is_susceptible(&v) && definitions.iter().all(|f| eval_classical(f, &v) == Ok(true));
        ok.then_some(v)
    }

    fn relax(&mut self, node: &Node) -> Result<Option<RelaxedSolution>, CquelError> {
        let rows = self.rows(node);
        let k = rows.len();
        let preds: Vec<SymbolId> = rows.iter().map(|r| r.pred).collect();
        let definitions: Vec<Formula> = node.splits.iter().map(Split::definition).collect();
        let mut relations: Vec<Relation> = rows.iter().map(|r| r.relation).collect();
        relations.push(Relation::Ge);
        let mut rhs: Vec<Rational> = rows.iter().map(|r| Rational::from_integer(r.bound.into())).collect();
        rhs.push(Rational::one());
        let mut p = LpProblem::new(relations, rhs);
        let mut models: Vec<Option<Valuation>> = Vec::new();
        // unit patterns and the empty pattern, priced by the SAT core
        for i in 0..=k {
            let pattern: Vec<bool> = (0..k).map(|r| r == i).collect();
            let assumptions: Vec<(SymbolId, bool)> = preds.iter().copied().zip(pattern.iter().copied()).collect();
            let model = self.ctx.solve(self.engine, &definitions, &assumptions, None)?;
            let cost = if model.is_some() { Rational::zero() } else { Rational::one() };
            p.add_column(pattern_column(&pattern), cost);
            models.push(model);
        }
        for hint in &node.hints {
            if let Some(v) = self.adapt(hint, node, &definitions) {
                let pattern: Vec<bool> = preds.iter().map(|&s| v.get(s) == Some(true)).collect();
                p.add_column(pattern_column(&pattern), Rational::zero());
                models.push(Some(v));
            }
        }
        let mut sol = solve_lp_with(&p, None, &self.config.lp)?;
        if !sol.is_optimal() {
            return Err(CquelError::Unsound(format!("master LP is {:?}", sol.status)));
        }
        let mut iterations = 0u64;
        loop {
            self.stats.lp_pivots += sol.iterations;
            if sol.objective.is_zero() {
                let mut columns = Vec::new();
                let mut x = Vec::new();
                for (j, value) in sol.primal.iter().enumerate() {
                    if value.is_zero() {
                        continue;
                    }
                    let model = models[j]
                        .clone()
                        .ok_or_else(|| CquelError::Unsound("positive count on an unsusceptible column".into()))?;
                    columns.push(model);
                    x.push(value.clone());
                }
                return Ok(Some(RelaxedSolution { rows: preds, columns, x }));
            }
            if self.config.max_iterations.is_some_and(|max| iterations >= max) {
                return Err(CquelError::IterationBudget(iterations));
            }
            iterations += 1;
            self.stats.iterations += 1;
            let cut = dual_cut(&sol.duals, true);
            let Some(v) = self.ctx.solve(self.engine, &definitions, &[], Some((&cut, &preds)))? else {
                return Ok(None);
            };
            let pattern: Vec<bool> = preds.iter().map(|&s| v.get(s) == Some(true)).collect();
            models.push(Some(v));
            self.stats.columns_generated += 1;
            let before = sol.iterations;
            let next = merge_column(&mut p, &sol, pattern_column(&pattern), Rational::zero())?;
            if next.objective > sol.objective {
                return Err(CquelError::Unsound("master objective increased".into()));
            }
            // merge_column carries the pivot count forward
            self.stats.lp_pivots -= before;
            sol = next;
        }
    }

    fn witness(&self, sol: &RelaxedSolution) -> Result<CountWitness, CquelError> {
        let mut merged: BTreeMap<Vec<bool>, u64> = BTreeMap::new();
        for (v, x) in sol.columns.iter().zip(&sol.x) {
            let count = x
                .to_integer()
                .to_u64()
                .ok_or_else(|| CquelError::CountOverflow(x.to_string()))?;
            *merged.entry(v.0[..self.ctx.base_len].to_vec()).or_default() += count;
        }
        let mut predicates = SymbolTable::new();
        for i in 0..self.ctx.base_len {
            predicates.intern(self.ctx.predicates.name(SymbolId(i)));
        }
        let mut entries: Vec<(Valuation, u64)> = Vec::new();
        // keep the solver's column order for readable output
        for v in &sol.columns {
            let key = &v.0[..self.ctx.base_len];
            if let Some(c) = merged.remove(key) {
                entries.push((Valuation(key.to_vec()), c));
            }
        }
        Ok(CountWitness { predicates, entries })
    }
}

impl<E: SatBackend> Relaxation for Search<'_, E> {
    type Node = Node;
    type Solution = RelaxedSolution;
    type Error = CquelError;

    fn solve(&mut self, node: &Node) -> Result<Option<RelaxedSolution>, CquelError> {
        self.relax(node)
    }

    fn integral_values(&self, solution: &RelaxedSolution) -> Vec<Rational> {
        solution.x.clone()
    }

    fn branch(&mut self, node: &Node, solution: &RelaxedSolution, var: usize, value: &Rational) -> Vec<Node> {
        let model = &solution.columns[var];
        let term: Vec<(SymbolId, bool)> =
            solution.rows.iter().map(|&p| (p, model.get(p) == Some(true))).collect();
        let pred = self.ctx.fresh_predicate("split");
        let child = |relation, bound: num_bigint::BigInt| {
            let bound = bound.to_u64().unwrap_or(u64::MAX);
            let mut splits = node.splits.clone();
            splits.push(Split { pred, term: term.clone(), relation, bound });
            Node { splits, hints: solution.columns.clone() }
        };
        vec![child(Relation::Le, floor(value)), child(Relation::Ge, ceil(value))]
    }

    fn admit(&self, node: &Node) -> bool {
        self.nf.q.len() + node.splits.len() + 1 <= self.limit
    }
}

/// Solves the root relaxation only; `None` when no susceptible types can
/// meet the rows even fractionally.
pub fn solve_relaxed_via_colgen(
    nf: &NormalFormCquel,
    config: &CquelConfig,
) -> Result<Option<RelaxedSolution>, CquelError> {
    let mut engine = SatEngine::new(config.sat.clone());
    let ctx = match JointSat::new(nf, &mut engine)? {
        Ok(ctx) => ctx,
        Err(_) => return Ok(None),
    };
    let mut search =
        Search { nf, ctx, engine: &mut engine, config, stats: CquelStats::default(), limit: size_bound(nf.q.len()) };
    search.relax(&Node::default())
}

pub fn cquel_solve(nf: &NormalFormCquel, config: &CquelConfig) -> Result<CquelOutcome, CquelError> {
    let mut engine = SatEngine::new(config.sat.clone());
    let ctx = match JointSat::new(nf, &mut engine)? {
        Ok(ctx) => ctx,
        Err(e) => {
            log::info!("EL constraints are inconsistent: {e}");
            return Ok(CquelOutcome { verdict: CquelVerdict::Unsat, stats: CquelStats::default() });
        }
    };
    let limit = size_bound(nf.q.len());
    let mut search = Search { nf, ctx, engine: &mut engine, config, stats: CquelStats::default(), limit };
    let policy = BnbPolicy { tie_break: config.tie_break, max_nodes: config.max_nodes, lp: config.lp.clone() };
    let result = branch_and_bound(&mut search, Node::default(), &policy)?;
    search.stats.bnb_nodes = result.nodes;
    search.stats.sat_calls = search.ctx.sat_calls;
    let verdict = match result.outcome {
        BnbOutcome::Found(sol) => {
            let w = search.witness(&sol)?;
            check_witness(nf, &search.ctx, &w).map_err(|e| CquelError::Unsound(e.to_string()))?;
            CquelVerdict::Sat(w)
        }
        BnbOutcome::Infeasible => CquelVerdict::Unsat,
        BnbOutcome::BudgetExhausted => return Err(CquelError::NodeBudget(result.nodes)),
    };
    Ok(CquelOutcome { verdict, stats: search.stats })
}

fn check_witness(nf: &NormalFormCquel, ctx: &JointSat, w: &CountWitness) -> Result<(), CountRejection> {
    if w.domain_size() == 0 {
        return Err(CountRejection::Empty);
    }
    for (entry, (v, _)) in w.entries.iter().enumerate() {
        if v.len() != ctx.base_len {
            return Err(CountRejection::WrongLength { entry, found: v.len(), expected: ctx.base_len });
        }
        let mut padded = v.clone();
        padded.0.resize(ctx.predicates.len(), false);
        if !ctx.is_susceptible(&padded) {
            return Err(CountRejection::NotSusceptible { entry });
        }
    }
    for (row, r) in nf.q.iter().enumerate() {
        let count: u64 = w.entries.iter().filter(|(v, _)| v.get(r.pred) == Some(true)).map(|(_, c)| c).sum();
        let ok = match r.relation {
            Relation::Le => count <= r.bound,
            Relation::Ge => count >= r.bound,
            Relation::Eq => count == r.bound,
        };
        if !ok {
            return Err(CountRejection::RowViolated { row, count });
        }
    }
    let limit = size_bound(nf.q.len());
    if w.nonzero() > limit {
        return Err(CountRejection::TooManyTypes { found: w.nonzero(), limit });
    }
    Ok(())
}

/// Checks that every type is susceptible, the counts meet every row, and
/// no more distinct types are used than [`size_bound`] allows.
pub fn verify_count_witness(nf: &NormalFormCquel, w: &CountWitness) -> Result<(), CountRejection> {
    let mut engine = SatEngine::default();
    match JointSat::new(nf, &mut engine) {
        Ok(Ok(ctx)) => check_witness(nf, &ctx, w),
        _ => Err(CountRejection::Inconsistent),
    }
}
