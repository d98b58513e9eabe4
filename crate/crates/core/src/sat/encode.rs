//! Linear pseudo-Boolean inequalities as CNF.
//!
//! `Σ wᵢ·yᵢ ≥ b` over 0-1 variables is scaled to integers by the LCM of all
//! denominators, negative weights are moved onto negated literals, and the
//! weighted sum is computed by a tree of ripple-carry binary adders whose
//! outputs feed a bitwise comparator against the constant bound. Every gate
//! is encoded as a full equivalence, so auxiliary variables are functionally
//! determined by the inputs and the projected models are exactly the
//! solutions of the inequality.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::cnf::{and_gate, or_gate, xor_gate, CnfFormula, Lit};
use crate::rational::{lcm_of_denominators, Rational};

/// `Σ weights[i]·y[i] ≥ bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCut {
    pub weights: Vec<Rational>,
    pub bound: Rational,
}

impl LinearCut {
    pub fn new(weights: Vec<Rational>, bound: Rational) -> Self {
        LinearCut { weights, bound }
    }

    pub fn lhs(&self, y: &[bool]) -> Rational {
        self.weights
            .iter()
            .zip(y)
            .filter(|(_, &b)| b)
            .fold(Rational::zero(), |acc, (w, _)| acc + w)
    }

    pub fn is_satisfied_by(&self, y: &[bool]) -> bool {
        self.lhs(y) >= self.bound
    }

    /// Integer form: (weights, bound) scaled by the LCM of all denominators.
    pub fn to_integer(&self) -> (Vec<BigInt>, BigInt) {
        let l = Rational::from_integer(lcm_of_denominators(
            self.weights.iter().chain(std::iter::once(&self.bound)),
        ));
        let w = self.weights.iter().map(|w| (w * &l).to_integer()).collect();
        (w, (&self.bound * &l).to_integer())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bit {
    Const(bool),
    Var(Lit),
}

impl std::ops::Not for Bit {
    type Output = Bit;
    fn not(self) -> Bit {
        match self {
            Bit::Const(b) => Bit::Const(!b),
            Bit::Var(l) => Bit::Var(!l),
        }
    }
}

struct Circuit<'a> {
    cnf: &'a mut CnfFormula,
}

impl Circuit<'_> {
    fn fresh(&mut self) -> Lit {
        Lit::pos(self.cnf.new_var())
    }

    fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::Const(false),
            (Bit::Const(true), x) | (x, Bit::Const(true)) => x,
            (Bit::Var(x), Bit::Var(y)) if x == y => a,
            (Bit::Var(x), Bit::Var(y)) if x == !y => Bit::Const(false),
            (Bit::Var(x), Bit::Var(y)) => {
                let z = self.fresh();
                and_gate(self.cnf, z, x, y);
                Bit::Var(z)
            }
        }
    }

    fn or(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(true), _) | (_, Bit::Const(true)) => Bit::Const(true),
            (Bit::Const(false), x) | (x, Bit::Const(false)) => x,
            (Bit::Var(x), Bit::Var(y)) if x == y => a,
            (Bit::Var(x), Bit::Var(y)) if x == !y => Bit::Const(true),
            (Bit::Var(x), Bit::Var(y)) => {
                let z = self.fresh();
                or_gate(self.cnf, z, x, y);
                Bit::Var(z)
            }
        }
    }

    fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(c), x) | (x, Bit::Const(c)) => {
                if c {
                    !x
                } else {
                    x
                }
            }
            (Bit::Var(x), Bit::Var(y)) if x == y => Bit::Const(false),
            (Bit::Var(x), Bit::Var(y)) if x == !y => Bit::Const(true),
            (Bit::Var(x), Bit::Var(y)) => {
                let z = self.fresh();
                xor_gate(self.cnf, z, x, y);
                Bit::Var(z)
            }
        }
    }

    /// (sum, carry) of three bits.
    fn full_add(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let ab = self.xor(a, b);
        let sum = self.xor(ab, c);
        let both = self.and(a, b);
        let prop = self.and(ab, c);
        let carry = self.or(both, prop);
        (sum, carry)
    }

    /// Ripple-carry addition of little-endian bit vectors.
    fn add(&mut self, x: &[Bit], y: &[Bit]) -> Vec<Bit> {
        let n = x.len().max(y.len());
        let mut out = Vec::with_capacity(n + 1);
        let mut carry = Bit::Const(false);
        for i in 0..n {
            let a = x.get(i).copied().unwrap_or(Bit::Const(false));
            let b = y.get(i).copied().unwrap_or(Bit::Const(false));
            let (s, c) = self.full_add(a, b, carry);
            out.push(s);
            carry = c;
        }
        out.push(carry);
        while out.len() > 1 && out.last() == Some(&Bit::Const(false)) {
            out.pop();
        }
        out
    }

    /// Bit for `value ≥ bound` with `bound` a non-negative constant.
    fn geq_const(&mut self, value: &[Bit], bound: &BigInt) -> Bit {
        let width = value.len().max(bound.bits() as usize);
        let mut acc = Bit::Const(true);
        for j in 0..width {
            let s = value.get(j).copied().unwrap_or(Bit::Const(false));
            acc = if bound.bit(j as u64) { self.and(s, acc) } else { self.or(s, acc) };
        }
        acc
    }
}

fn weighted_bits(lit: Lit, w: &BigInt) -> Vec<Bit> {
    (0..w.bits())
        .map(|j| if w.bit(j) { Bit::Var(lit) } else { Bit::Const(false) })
        .collect()
}

/// Appends clauses for `cut` over `vars` to `cnf`, allocating auxiliaries
/// after its current variables.
pub fn encode_linear_geq_into(cnf: &mut CnfFormula, cut: &LinearCut, vars: &[usize]) {
    assert_eq!(cut.weights.len(), vars.len(), "cut weights must align with variables");
    for &v in vars {
        if v >= cnf.num_vars {
            cnf.num_vars = v + 1;
        }
    }
    let (weights, mut bound) = cut.to_integer();
    let mut terms: Vec<(Lit, BigInt)> = Vec::new();
    for (&v, w) in vars.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        if w.is_negative() {
            // w·y = |w|·(1 − y) − |w|
            bound += w.abs();
            terms.push((Lit::neg(v), w.abs()));
        } else {
            terms.push((Lit::pos(v), w));
        }
    }
    if !bound.is_positive() {
        return;
    }
    let total: BigInt = terms.iter().map(|(_, w)| w.clone()).sum();
    if bound > total {
        cnf.add_clause(Vec::new());
        return;
    }
    if bound.is_one() {
        cnf.add_clause(terms.iter().map(|(l, _)| *l).collect());
        return;
    }
    let mut circuit = Circuit { cnf };
    let mut layer: Vec<Vec<Bit>> = terms.iter().map(|(l, w)| weighted_bits(*l, w)).collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len().div_ceil(2));
        for pair in layer.chunks(2) {
            next.push(match pair {
                [a, b] => circuit.add(a, b),
                [a] => a.clone(),
                _ => unreachable!(),
            });
        }
        layer = next;
    }
    let sum = layer.pop().unwrap_or_default();
    match circuit.geq_const(&sum, &bound) {
        Bit::Const(true) => {}
        Bit::Const(false) => circuit.cnf.add_clause(Vec::new()),
        Bit::Var(l) => circuit.cnf.add_clause(vec![l]),
    }
}

/// CNF over `vars` plus auxiliaries (numbered from `num_vars`) whose
/// projection onto `vars` is exactly the solution set of `cut`.
pub fn encode_linear_geq(cut: &LinearCut, vars: &[usize], num_vars: usize) -> CnfFormula {
    let mut cnf = CnfFormula::new(num_vars);
    encode_linear_geq_into(&mut cnf, cut, vars);
    cnf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn projected(cnf: &CnfFormula, n: usize) -> BTreeSet<Vec<bool>> {
        assert!(cnf.num_vars <= 22, "too many auxiliaries: {}", cnf.num_vars);
        (0u64..1 << cnf.num_vars)
            .map(|bits| (0..cnf.num_vars).map(|i| (bits >> i) & 1 == 1).collect::<Vec<_>>())
            .filter(|m| cnf.is_satisfied_by(m))
            .map(|m| m[..n].to_vec())
            .collect()
    }

    fn solutions(cut: &LinearCut) -> BTreeSet<Vec<bool>> {
        let n = cut.weights.len();
        (0u64..1 << n)
            .map(|bits| (0..n).map(|i| (bits >> i) & 1 == 1).collect::<Vec<_>>())
            .filter(|y| cut.is_satisfied_by(y))
            .collect()
    }

    #[test]
    fn forced_corner() {
        let cut = LinearCut::new(vec![int(1), int(1)], int(2));
        let got = projected(&encode_linear_geq(&cut, &[0, 1], 2), 2);
        assert_eq!(got, [vec![true, true]].into());
    }

    #[test]
    fn vacuous_cut_adds_nothing() {
        let cut = LinearCut::new(vec![int(1), int(1)], int(0));
        let cnf = encode_linear_geq(&cut, &[0, 1], 2);
        assert!(cnf.clauses.is_empty());
    }

    #[test]
    fn rational_weights_are_scaled() {
        let cut = LinearCut::new(vec![ratio(1, 2), ratio(-1, 3)], int(0));
        assert_eq!(cut.to_integer(), (vec![BigInt::from(3), BigInt::from(-2)], BigInt::from(0)));
        let got = projected(&encode_linear_geq(&cut, &[0, 1], 2), 2);
        let expected: BTreeSet<Vec<bool>> =
            [vec![false, false], vec![true, false], vec![true, true]].into();
        assert_eq!(got, expected);
    }

    #[test]
    fn impossible_cut_is_contradictory() {
        let cut = LinearCut::new(vec![int(1), int(2)], int(4));
        let cnf = encode_linear_geq(&cut, &[0, 1], 2);
        assert!(projected(&cnf, 2).is_empty());
    }

    proptest! {
        #[test]
        fn projection_equals_solution_set(
            ws in proptest::collection::vec((-7i64..=7, 1i64..=4), 1..=4),
            b in (-10i64..=10, 1i64..=3),
        ) {
            let cut = LinearCut::new(
                ws.iter().map(|&(n, d)| ratio(n, d)).collect(),
                ratio(b.0, b.1),
            );
            let n = cut.weights.len();
            let vars: Vec<usize> = (0..n).collect();
            let cnf = encode_linear_geq(&cut, &vars, n);
            prop_assume!(cnf.num_vars <= 20);
            prop_assert_eq!(projected(&cnf, n), solutions(&cut));
        }
    }
}
