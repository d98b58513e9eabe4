//! Seeded random instances.
//!
//! The same logic, seed and parameters always give the same instance.
//! Symbols are numbered by first appearance in the printed file, so a
//! generated instance equals `parse(print(instance))`.

use num_traits::{One, Zero};
use qlr::cquel::{Basic, ConceptLiteral, CountingSentence, CquelInstance, ElConstraint};
use qlr::formula::{Formula, SymbolId, SymbolTable};
use qlr::lipsat::{LipAssignment, LipInstance};
use qlr::lp::Relation;
use qlr::luka::{eval_luka, LFormula, LValuation};
use qlr::psat::{PsatAssignment, PsatInstance};
use qlr::rational::Rational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::format::{parse_instance, print_instance, Instance, Logic};
use crate::oracle::grid;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    /// Propositional symbols, or unary predicates for CQUEL.
    pub symbols: usize,
    /// `prob` lines, or counting sentences for CQUEL.
    pub constraints: usize,
    /// `gamma` (or `forall`) lines per symbol.
    pub density: f64,
    /// Denominator limit of generated probabilities.
    pub max_denominator: i64,
    /// Counting bounds are drawn uniformly from `0..=max_bound`.
    pub max_bound: u64,
    /// Depth limit of generated formulas.
    pub depth: usize,
    /// CQUEL roles, each used by two inclusion assertions.
    pub roles: usize,
    /// LIPSAT only: derive the probabilities from a hidden grid-supported
    /// distribution, so the instance is satisfiable.
    pub planted: bool,
}

impl GenParams {
    pub fn defaults(logic: Logic) -> Self {
        let base = GenParams {
            symbols: 4,
            constraints: 3,
            density: 0.5,
            max_denominator: 10,
            max_bound: 4,
            depth: 2,
            roles: 0,
            planted: false,
        };
        match logic {
            Logic::Psat => base,
            Logic::Cquel => GenParams { symbols: 3, density: 0.34, ..base },
            Logic::Lipsat => GenParams { symbols: 2, constraints: 2, max_denominator: 6, planted: true, ..base },
        }
    }
}

pub fn generate_instance(logic: Logic, seed: u64, params: &GenParams) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match logic {
        Logic::Psat => Instance::Psat(psat(&mut rng, params)),
        Logic::Cquel => Instance::Cquel(cquel(&mut rng, params)),
        Logic::Lipsat => Instance::Lipsat(lipsat(&mut rng, params)),
    };
    // renumber symbols in print order
    parse_instance(&print_instance(&raw)).expect("generated instances parse")
}

fn table(prefix: &str, n: usize) -> SymbolTable {
    let mut t = SymbolTable::new();
    for i in 1..=n {
        t.intern(&format!("{prefix}{i}"));
    }
    t
}

fn lines(rng: &mut ChaCha8Rng, p: &GenParams) -> usize {
    let expected = p.density * p.symbols as f64;
    // randomized rounding keeps the mean at `expected`
    expected.floor() as usize + usize::from(rng.gen_bool(expected.fract()))
}

fn probability(rng: &mut ChaCha8Rng, max_den: i64) -> Rational {
    let d = rng.gen_range(1..=max_den.max(1));
    Rational::new(rng.gen_range(0..=d).into(), d.into())
}

fn symbol(rng: &mut ChaCha8Rng, n: usize) -> SymbolId {
    SymbolId(rng.gen_range(0..n))
}

fn literal(rng: &mut ChaCha8Rng, n: usize) -> Formula {
    let s = Formula::sym(symbol(rng, n));
    if rng.gen_bool(0.5) {
        Formula::not(s)
    } else {
        s
    }
}

fn classical(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.3) {
        return literal(rng, n);
    }
    let a = classical(rng, n, depth - 1);
    let b = classical(rng, n, depth - 1);
    match rng.gen_range(0..4) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        2 => Formula::implies(a, b),
        _ => Formula::not(Formula::and(a, b)),
    }
}

/// A disjunction of up to three literals over distinct symbols.
fn clause(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Formula {
    let mut vars: Vec<usize> = (0..n).collect();
    vars.shuffle(rng);
    let lits = vars.into_iter().take(width.min(n)).map(|v| {
        let s = Formula::sym(SymbolId(v));
        if rng.gen_bool(0.5) {
            Formula::not(s)
        } else {
            s
        }
    });
    Formula::disjunction(lits).expect("at least one symbol")
}

fn psat(rng: &mut ChaCha8Rng, p: &GenParams) -> PsatInstance {
    let n = p.symbols.max(1);
    let gamma = (0..lines(rng, p)).map(|_| clause(rng, n, 3)).collect();
    let assignments = (0..p.constraints)
        .map(|_| {
            let formula = classical(rng, n, p.depth);
            let relation = match rng.gen_range(0..4) {
                0 => Relation::Le,
                1 => Relation::Ge,
                _ => Relation::Eq,
            };
            PsatAssignment { formula, relation, prob: probability(rng, p.max_denominator) }
        })
        .collect();
    PsatInstance { symbols: table("x", n), gamma, assignments }
}

fn cquel(rng: &mut ChaCha8Rng, p: &GenParams) -> CquelInstance {
    let n = p.symbols.max(1);
    let counting = (0..p.constraints)
        .map(|_| CountingSentence {
            relation: if rng.gen_bool(0.5) { Relation::Le } else { Relation::Ge },
            bound: rng.gen_range(0..=p.max_bound),
            body: classical(rng, n, p.depth),
        })
        .collect();
    let universal = (0..lines(rng, p)).map(|_| clause(rng, n, 2)).collect();
    let mut el = Vec::new();
    for r in 0..p.roles {
        let role = SymbolId(r);
        el.push(ElConstraint::Inclusion {
            lhs: Basic::Pred(symbol(rng, n)),
            rhs: vec![ConceptLiteral { basic: Basic::Exists(role), positive: true }],
        });
        el.push(ElConstraint::Inclusion {
            lhs: Basic::ExistsInv(role),
            rhs: vec![ConceptLiteral { basic: Basic::Pred(symbol(rng, n)), positive: rng.gen_bool(0.5) }],
        });
    }
    CquelInstance {
        predicates: table("p", n),
        roles: table("r", p.roles),
        constants: SymbolTable::new(),
        counting,
        universal,
        el,
    }
}

fn lukasiewicz(rng: &mut ChaCha8Rng, n: usize, depth: usize) -> LFormula {
    if depth == 0 || rng.gen_bool(0.3) {
        let s = LFormula::sym(symbol(rng, n));
        return if rng.gen_bool(0.3) { LFormula::neg(s) } else { s };
    }
    match rng.gen_range(0..5) {
        0 => LFormula::neg(lukasiewicz(rng, n, depth - 1)),
        1 | 2 => {
            let a = lukasiewicz(rng, n, depth - 1);
            LFormula::oplus(a, lukasiewicz(rng, n, depth - 1))
        }
        _ => {
            let a = lukasiewicz(rng, n, depth - 1);
            LFormula::odot(a, lukasiewicz(rng, n, depth - 1))
        }
    }
}

fn lipsat(rng: &mut ChaCha8Rng, p: &GenParams) -> LipInstance {
    let n = p.symbols.max(1);
    let formulas: Vec<LFormula> = (0..p.constraints).map(|_| lukasiewicz(rng, n, p.depth)).collect();
    let gamma_lines = lines(rng, p);
    if !p.planted {
        let gamma = (0..gamma_lines).map(|_| lukasiewicz(rng, n, p.depth)).collect();
        let assignments = formulas
            .into_iter()
            .map(|formula| LipAssignment { formula, prob: probability(rng, p.max_denominator) })
            .collect();
        return LipInstance { symbols: table("x", n), gamma, assignments };
    }
    // one or two hidden valuations on the grid, mixed evenly
    let points = grid(p.max_denominator.max(1));
    let support: Vec<LValuation> = (0..rng.gen_range(1..=2))
        .map(|_| LValuation((0..n).map(|_| points.choose(rng).expect("grid is nonempty").clone()).collect()))
        .collect();
    let weight = Rational::new(1.into(), (support.len() as i64).into());
    let value = |f: &LFormula, v: &LValuation| eval_luka(f, v).expect("all symbols valued");
    let mut gamma = Vec::new();
    for _ in 0..gamma_lines {
        // keep the first candidate that holds fully on the hidden support
        if let Some(g) =
            (0..10).map(|_| lukasiewicz(rng, n, p.depth)).find(|g| support.iter().all(|v| value(g, v).is_one()))
        {
            gamma.push(g);
        }
    }
    let assignments = formulas
        .into_iter()
        .map(|formula| {
            let prob = support.iter().map(|v| value(&formula, v) * &weight).fold(Rational::zero(), |a, b| a + b);
            LipAssignment { formula, prob }
        })
        .collect();
    LipInstance { symbols: table("x", n), gamma, assignments }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_file() {
        for logic in [Logic::Psat, Logic::Cquel, Logic::Lipsat] {
            let p = GenParams::defaults(logic);
            let a = print_instance(&generate_instance(logic, 1, &p));
            assert_eq!(a, print_instance(&generate_instance(logic, 1, &p)));
            let differs = (2..10).any(|s| print_instance(&generate_instance(logic, s, &p)) != a);
            assert!(differs, "{logic} ignores the seed");
        }
    }

    #[test]
    fn parameters_are_respected() {
        let p = GenParams { roles: 1, ..GenParams::defaults(Logic::Cquel) };
        let Instance::Cquel(c) = generate_instance(Logic::Cquel, 2, &p) else { panic!() };
        assert_eq!(c.counting.len(), 3);
        assert!(c.counting.iter().all(|s| s.bound <= 4));
        assert_eq!(c.el.len(), 2);
        let Instance::Psat(s) = generate_instance(Logic::Psat, 1, &GenParams::defaults(Logic::Psat)) else { panic!() };
        assert!(s.symbols.len() <= 4);
        assert!(s.assignments.iter().all(|a| a.formula.depth() <= 3));
    }
}
