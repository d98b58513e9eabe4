//! Brute-force reference solvers for small instances.
//!
//! They share no search code with the column-generation solvers: PSAT and
//! LIPSAT build the full dense LP over every valuation (every grid point for
//! Łukasiewicz), and CQUEL enumerates element counts directly.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use qlr::cquel::CquelInstance;
use qlr::formula::{eval_classical, Valuation};
use qlr::lipsat::LipInstance;
use qlr::lp::{solve_lp, LpProblem, LpStatus, Relation};
use qlr::luka::{eval_luka, LValuation};
use qlr::psat::PsatInstance;
use qlr::rational::Rational;
use thiserror::Error;

use crate::format::Instance;

pub const PSAT_MAX_SYMBOLS: usize = 12;
pub const LIPSAT_MAX_SYMBOLS: usize = 3;
pub const LIPSAT_MAX_DENOMINATOR: i64 = 6;

/// Size limits for the counting oracle. The defaults keep every search
/// small; wider limits work but the count enumeration grows quickly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CquelLimits {
    pub max_rows: usize,
    pub max_bound: u64,
    pub max_predicates: usize,
}

impl Default for CquelLimits {
    fn default() -> Self {
        CquelLimits { max_rows: 3, max_bound: 6, max_predicates: 12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance exceeds oracle limits: {0}")]
    Limit(String),
    #[error("oracle failed: {0}")]
    Failed(String),
}

fn limit<T>(msg: String) -> Result<T, OracleError> {
    Err(OracleError::Limit(msg))
}

pub fn oracle_solve(inst: &Instance) -> Result<OracleVerdict, OracleError> {
    match inst {
        Instance::Psat(p) => oracle_psat(p),
        Instance::Cquel(c) => oracle_cquel(c),
        Instance::Lipsat(l) => oracle_lipsat(l),
    }
}

fn bit(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Feasibility of `Σ_j x_j·column_j ⋈ rhs`, `Σ x_j = 1`, `x ≥ 0`.
fn dense_feasible(relations: Vec<Relation>, rhs: Vec<Rational>, columns: Vec<Vec<Rational>>) -> Result<bool, OracleError> {
    if columns.is_empty() {
        return Ok(false);
    }
    let mut relations = relations;
    let mut rhs = rhs;
    relations.push(Relation::Eq);
    rhs.push(Rational::one());
    let mut p = LpProblem::new(relations, rhs);
    for mut c in columns {
        c.push(Rational::one());
        p.add_column(c, Rational::zero());
    }
    let sol = solve_lp(&p, None).map_err(|e| OracleError::Failed(e.to_string()))?;
    Ok(sol.status == LpStatus::Optimal)
}

/// Dense LP over all `2ⁿ` valuations that satisfy `Γ`.
pub fn oracle_psat(inst: &PsatInstance) -> Result<OracleVerdict, OracleError> {
    let n = inst.symbols.len();
    if n > PSAT_MAX_SYMBOLS {
        return limit(format!("{n} symbols, at most {PSAT_MAX_SYMBOLS}"));
    }
    let eval = |f, v: &Valuation| eval_classical(f, v).map_err(|e| OracleError::Failed(e.to_string()));
    let mut columns = Vec::new();
    for bits in 0..1u64 << n {
        let v = Valuation::from_bits(bits, n);
        let mut models = true;
        for g in &inst.gamma {
            models &= eval(g, &v)?;
        }
        if models {
            columns.push(inst.assignments.iter().map(|a| eval(&a.formula, &v).map(bit)).collect::<Result<_, _>>()?);
        }
    }
    let relations = inst.assignments.iter().map(|a| a.relation).collect();
    let rhs = inst.assignments.iter().map(|a| a.prob.clone()).collect();
    Ok(if dense_feasible(relations, rhs, columns)? { OracleVerdict::Sat } else { OracleVerdict::Unsat })
}

/// Unary-only counting instances. Each element is summarized by which
/// counting bodies it satisfies; only the patterns of types satisfying every
/// universal sentence occur. Counts per pattern are enumerated up to a cap
/// beyond which no model needs to go: the smallest `≤` bound the pattern
/// falls under, or else the largest `≥` bound (at least 1).
pub fn oracle_cquel(inst: &CquelInstance) -> Result<OracleVerdict, OracleError> {
    oracle_cquel_within(inst, &CquelLimits::default())
}

pub fn oracle_cquel_within(inst: &CquelInstance, limits: &CquelLimits) -> Result<OracleVerdict, OracleError> {
    if !inst.el.is_empty() {
        return limit("EL constraints present".into());
    }
    let k = inst.counting.len();
    if k > limits.max_rows {
        return limit(format!("{k} counting sentences, at most {}", limits.max_rows));
    }
    if let Some(s) = inst.counting.iter().find(|s| s.bound > limits.max_bound) {
        return limit(format!("bound {}, at most {}", s.bound, limits.max_bound));
    }
    if inst.counting.iter().any(|s| s.relation == Relation::Eq) {
        return Err(OracleError::Failed("counting sentences use <= or >=".into()));
    }
    let n = inst.predicates.len();
    if n > limits.max_predicates {
        return limit(format!("{n} predicates, at most {}", limits.max_predicates));
    }
    let eval = |f, v: &Valuation| eval_classical(f, v).map_err(|e| OracleError::Failed(e.to_string()));
    let mut patterns = BTreeSet::new();
    for bits in 0..1u64 << n {
        let v = Valuation::from_bits(bits, n);
        let mut ok = true;
        for u in &inst.universal {
            ok &= eval(u, &v)?;
        }
        if ok {
            let pattern: Vec<bool> = inst.counting.iter().map(|s| eval(&s.body, &v)).collect::<Result<_, _>>()?;
            patterns.insert(pattern);
        }
    }
    let patterns: Vec<Vec<bool>> = patterns.into_iter().collect();
    let at_least = inst.counting.iter().filter(|s| s.relation == Relation::Ge).map(|s| s.bound).max().unwrap_or(0).max(1);
    let caps: Vec<u64> = patterns
        .iter()
        .map(|pat| {
            inst.counting
                .iter()
                .zip(pat)
                .filter(|(s, &hit)| hit && s.relation == Relation::Le)
                .map(|(s, _)| s.bound)
                .min()
                .unwrap_or(at_least)
        })
        .collect();
    let mut counts = vec![0u64; k];
    let found = search(inst, &patterns, &caps, 0, &mut counts, 0);
    Ok(if found { OracleVerdict::Sat } else { OracleVerdict::Unsat })
}

fn search(inst: &CquelInstance, patterns: &[Vec<bool>], caps: &[u64], i: usize, counts: &mut [u64], size: u64) -> bool {
    let rows = || inst.counting.iter().zip(counts.iter());
    if rows().any(|(s, &c)| s.relation == Relation::Le && c > s.bound) {
        return false;
    }
    if i == patterns.len() {
        return size > 0 && rows().all(|(s, &c)| s.relation == Relation::Le || c >= s.bound);
    }
    for m in 0..=caps[i] {
        for (c, &hit) in counts.iter_mut().zip(&patterns[i]) {
            if hit {
                *c += m;
            }
        }
        let found = search(inst, patterns, caps, i + 1, counts, size + m);
        for (c, &hit) in counts.iter_mut().zip(&patterns[i]) {
            if hit {
                *c -= m;
            }
        }
        if found {
            return true;
        }
    }
    false
}

/// All fractions in `[0, 1]` with denominator at most `max_den`, ascending.
pub fn grid(max_den: i64) -> Vec<Rational> {
    let points: BTreeSet<Rational> =
        (1..=max_den).flat_map(|d| (0..=d).map(move |n| Rational::new(n.into(), d.into()))).collect();
    points.into_iter().collect()
}

/// Dense LP over the grid valuations that give every `Γ` formula value 1.
/// `Sat` is exact; `Unsat` only says no grid-supported witness exists.
pub fn oracle_lipsat(inst: &LipInstance) -> Result<OracleVerdict, OracleError> {
    let n = inst.symbols.len();
    if n > LIPSAT_MAX_SYMBOLS {
        return limit(format!("{n} symbols, at most {LIPSAT_MAX_SYMBOLS}"));
    }
    let points = grid(LIPSAT_MAX_DENOMINATOR);
    let eval = |f, v: &LValuation| eval_luka(f, v).map_err(|e| OracleError::Failed(e.to_string()));
    let mut columns = Vec::new();
    let mut index = vec![0usize; n];
    loop {
        let v = LValuation(index.iter().map(|&i| points[i].clone()).collect());
        let mut models = true;
        for g in &inst.gamma {
            models &= eval(g, &v)?.is_one();
        }
        if models {
            columns.push(inst.assignments.iter().map(|a| eval(&a.formula, &v)).collect::<Result<_, _>>()?);
        }
        // odometer over the grid
        let Some(pos) = index.iter().position(|&i| i + 1 < points.len()) else { break };
        index[pos] += 1;
        index[..pos].iter_mut().for_each(|i| *i = 0);
    }
    let relations = vec![Relation::Eq; inst.assignments.len()];
    let rhs = inst.assignments.iter().map(|a| a.prob.clone()).collect();
    Ok(if dense_feasible(relations, rhs, columns)? { OracleVerdict::Sat } else { OracleVerdict::Unsat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_instance;

    fn verdict(text: &str) -> OracleVerdict {
        oracle_solve(&parse_instance(text).unwrap()).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = grid(6);
        assert_eq!(g.len(), 13);
        assert!(g.contains(&Rational::new(3.into(), 5.into())));
    }

    #[test]
    fn small_psat() {
        assert_eq!(verdict("logic psat\nprob x = 1/2\nprob x & y >= 1/2\n"), OracleVerdict::Sat);
        assert_eq!(verdict("logic psat\nprob x = 1/2\nprob x & y >= 3/4\n"), OracleVerdict::Unsat);
        assert_eq!(verdict("logic psat\ngamma x & !x\n"), OracleVerdict::Unsat);
    }

    #[test]
    fn small_counting() {
        assert_eq!(verdict("logic cquel\ncount >= 2 p\ncount <= 1 p | q\n"), OracleVerdict::Unsat);
        assert_eq!(verdict("logic cquel\ncount >= 2 p\ncount <= 1 q\nforall p -> !q\n"), OracleVerdict::Sat);
        assert_eq!(verdict("logic cquel\ncount <= 0 p\nforall p\n"), OracleVerdict::Unsat);
        assert_eq!(verdict("logic cquel\ncount <= 0 p\n"), OracleVerdict::Sat);
    }

    #[test]
    fn grandparents_need_wider_limits() {
        let text = "logic cquel\ncount <= 15 g & (m | h)\ncount >= 10 g & !h\ncount <= 7 p & !m\nforall g -> p\n";
        let Instance::Cquel(c) = parse_instance(text).unwrap() else { panic!() };
        assert!(matches!(oracle_cquel(&c), Err(OracleError::Limit(_))));
        let wide = CquelLimits { max_rows: 4, max_bound: 15, ..Default::default() };
        assert_eq!(oracle_cquel_within(&c, &wide), Ok(OracleVerdict::Sat));
        let Instance::Cquel(f) = parse_instance(&format!("{text}count >= 8 g & !m & !h\n")).unwrap() else { panic!() };
        assert_eq!(oracle_cquel_within(&f, &wide), Ok(OracleVerdict::Unsat));
    }

    #[test]
    fn small_lukasiewicz() {
        assert_eq!(verdict("logic lipsat\nprob x = 3/5\nprob ~x = 2/5\n"), OracleVerdict::Sat);
        assert_eq!(verdict("logic lipsat\nprob x (*) x = 1\nprob x = 1/2\n"), OracleVerdict::Unsat);
        assert!(oracle_solve(&parse_instance("logic lipsat\nprob a (+) b (+) c (+) d = 1\n").unwrap()).is_err());
    }
}
