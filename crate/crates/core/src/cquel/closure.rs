//! Negative-inclusion closure of EL constraints and the propositional core
//! used to decide which elementary types can occur in a model.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::{Basic, BasicDisplay, ElConstraint, NormalFormCquel};
use crate::cnf::{formulas_to_cnf, Lit};
use crate::formula::{eval_classical, Formula, SymbolId, SymbolTable, Valuation};
use crate::sat::{encode_linear_geq_into, LinearCut, SatBackend, SatError, SatResult};

/// The EL part can have no model at all, whatever the counting part says.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct Inconsistency(pub String);

/// Inclusions entailed by a set of EL constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NiClosure {
    /// `a ⊑ b`, transitively closed, without the reflexive pairs.
    pub positive: BTreeSet<(Basic, Basic)>,
    /// `a ⊑ ¬b`, stored once with `a ≤ b`. `(a, a)` means `a` is empty.
    pub negative: BTreeSet<(Basic, Basic)>,
}

impl NiClosure {
    pub fn entails_disjoint(&self, a: Basic, b: Basic) -> bool {
        self.negative.contains(&ordered(a, b))
    }

    pub fn is_empty_concept(&self, b: Basic) -> bool {
        self.negative.contains(&(b, b))
    }

    pub fn entails_inclusion(&self, a: Basic, b: Basic) -> bool {
        a == b || self.positive.contains(&(a, b))
    }
}

fn ordered(a: Basic, b: Basic) -> (Basic, Basic) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Closes positive inclusions transitively and propagates negative ones
/// along them. A role whose domain is empty also has an empty range. Ground
/// facts are then checked against the result, with distinct constants
/// naming distinct elements.
pub fn ni_closure(el: &[ElConstraint]) -> Result<NiClosure, Inconsistency> {
    let mut universe = BTreeSet::new();
    let mut pos: BTreeSet<(Basic, Basic)> = BTreeSet::new();
    let mut neg: BTreeSet<(Basic, Basic)> = BTreeSet::new();
    let add_role = |u: &mut BTreeSet<Basic>, r: SymbolId| {
        u.insert(Basic::Exists(r));
        u.insert(Basic::ExistsInv(r));
    };
    for c in el {
        match c {
            ElConstraint::Inclusion { lhs, rhs } => {
                universe.insert(*lhs);
                for l in rhs {
                    universe.insert(l.basic);
                    if l.positive {
                        pos.insert((*lhs, l.basic));
                    } else {
                        neg.insert(ordered(*lhs, l.basic));
                    }
                }
            }
            ElConstraint::Funct { role, .. } => add_role(&mut universe, *role),
            ElConstraint::Fact { pred, .. } => {
                universe.insert(Basic::Pred(*pred));
            }
            ElConstraint::RoleFact { role, .. } => add_role(&mut universe, *role),
        }
    }
    for b in universe.clone() {
        if let Some(r) = b.role() {
            add_role(&mut universe, r);
        }
    }
    let reach = transitive(&universe, &pos);
    loop {
        let before = neg.len();
        // below[x] = everything included in x
        let mut below: BTreeMap<Basic, Vec<Basic>> = BTreeMap::new();
        for (a, ups) in &reach {
            for x in ups {
                below.entry(*x).or_default().push(*a);
            }
        }
        for (x, y) in neg.clone() {
            for a in &below[&x] {
                for b in &below[&y] {
                    neg.insert(ordered(*a, *b));
                }
            }
        }
        for b in &universe {
            if !neg.contains(&(*b, *b)) {
                continue;
            }
            let twin = match *b {
                Basic::Exists(r) => Basic::ExistsInv(r),
                Basic::ExistsInv(r) => Basic::Exists(r),
                Basic::Pred(_) => continue,
            };
            neg.insert((twin, twin));
        }
        // an empty concept is disjoint from everything
        for b in universe.iter().filter(|b| neg.contains(&(**b, **b))).copied().collect::<Vec<_>>() {
            for other in &universe {
                neg.insert(ordered(b, *other));
            }
        }
        if neg.len() == before {
            break;
        }
    }
    let positive = reach
        .iter()
        .flat_map(|(a, ups)| ups.iter().filter(move |b| *b != a).map(move |b| (*a, *b)))
        .collect();
    let closure = NiClosure { positive, negative: neg };
    check_facts(el, &closure, &reach)?;
    Ok(closure)
}

fn transitive(
    universe: &BTreeSet<Basic>,
    pos: &BTreeSet<(Basic, Basic)>,
) -> BTreeMap<Basic, BTreeSet<Basic>> {
    let mut succ: BTreeMap<Basic, Vec<Basic>> = BTreeMap::new();
    for (a, b) in pos {
        succ.entry(*a).or_default().push(*b);
    }
    universe
        .iter()
        .map(|&start| {
            let mut seen = BTreeSet::from([start]);
            let mut stack = vec![start];
            while let Some(x) = stack.pop() {
                for &y in succ.get(&x).into_iter().flatten() {
                    if seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
            (start, seen)
        })
        .collect()
}

fn check_facts(
    el: &[ElConstraint],
    closure: &NiClosure,
    reach: &BTreeMap<Basic, BTreeSet<Basic>>,
) -> Result<(), Inconsistency> {
    let mut members: BTreeMap<SymbolId, BTreeSet<Basic>> = BTreeMap::new();
    let mut edges: BTreeSet<(SymbolId, SymbolId, SymbolId)> = BTreeSet::new();
    for c in el {
        match *c {
            ElConstraint::Fact { pred, constant } => {
                members.entry(constant).or_default().insert(Basic::Pred(pred));
            }
            ElConstraint::RoleFact { role, from, to } => {
                members.entry(from).or_default().insert(Basic::Exists(role));
                members.entry(to).or_default().insert(Basic::ExistsInv(role));
                edges.insert((role, from, to));
            }
            _ => {}
        }
    }
    for (constant, direct) in &members {
        let all: BTreeSet<Basic> = direct.iter().flat_map(|b| reach[b].iter().copied()).collect();
        for a in &all {
            for b in &all {
                if a <= b && closure.entails_disjoint(*a, *b) {
                    return Err(Inconsistency(format!(
                        "constant #{} is forced into disjoint concepts {a:?} and {b:?}",
                        constant.0
                    )));
                }
            }
        }
    }
    for c in el {
        let &ElConstraint::Funct { role, inverse } = c else { continue };
        let mut seen: BTreeMap<SymbolId, SymbolId> = BTreeMap::new();
        for &(r, from, to) in &edges {
            if r != role {
                continue;
            }
            let (key, value) = if inverse { (to, from) } else { (from, to) };
            if let Some(&other) = seen.get(&key) {
                if other != value {
                    return Err(Inconsistency(format!(
                        "functional role #{} has two distinct {} for constant #{}",
                        role.0,
                        if inverse { "predecessors" } else { "successors" },
                        key.0
                    )));
                }
            }
            seen.insert(key, value);
        }
    }
    Ok(())
}

/// Propositional view of `U` plus the unary consequences of `E`.
///
/// Existentials become pseudo-predicates named `some r` and `some inv r`.
/// An existential is *dead* when no satisfying type could supply the
/// matching element on the other end of the role; dead existentials are
/// forced false, which is iterated to a fixpoint.
#[derive(Debug, Clone)]
pub struct JointSat {
    /// Normal-form predicates, then pseudo-predicates, then any split
    /// predicates added during search.
    pub predicates: SymbolTable,
    /// Number of symbols that belong to the normal form proper.
    pub base_len: usize,
    pub closure: NiClosure,
    pub core: Vec<Formula>,
    pub dead: BTreeSet<SymbolId>,
    /// `(some r, some inv r)` per role.
    pub existentials: Vec<(SymbolId, SymbolId)>,
    pub sat_calls: u64,
}

impl JointSat {
    /// The inner `Err` reports EL constraints that are inconsistent on their own.
    pub fn new(nf: &NormalFormCquel, engine: &mut impl SatBackend) -> Result<Result<Self, Inconsistency>, SatError> {
        let closure = match ni_closure(&nf.el) {
            Ok(c) => c,
            Err(e) => return Ok(Err(e)),
        };
        let mut predicates = nf.predicates.clone();
        let mut existentials = Vec::new();
        for i in 0..nf.roles.len() {
            let name = nf.roles.name(SymbolId(i)).to_string();
            let f = predicates.intern(&format!("some {name}"));
            let b = predicates.intern(&format!("some inv {name}"));
            existentials.push((f, b));
        }
        let base_len = predicates.len();
        let mut ctx = JointSat {
            predicates,
            base_len,
            closure,
            core: Vec::new(),
            dead: BTreeSet::new(),
            existentials,
            sat_calls: 0,
        };
        let mut core = nf.universal.clone();
        for (a, b) in &ctx.closure.positive {
            core.push(Formula::implies(ctx.atom(*a), ctx.atom(*b)));
        }
        for (a, b) in &ctx.closure.negative {
            core.push(Formula::not(Formula::and(ctx.atom(*a), ctx.atom(*b))));
        }
        ctx.core = core;
        ctx.settle_dead(engine)?;
        Ok(Ok(ctx))
    }

    pub fn symbol(&self, b: Basic) -> SymbolId {
        match b {
            Basic::Pred(p) => p,
            Basic::Exists(r) => self.existentials[r.0].0,
            Basic::ExistsInv(r) => self.existentials[r.0].1,
        }
    }

    fn atom(&self, b: Basic) -> Formula {
        Formula::sym(self.symbol(b))
    }

    fn settle_dead(&mut self, engine: &mut impl SatBackend) -> Result<(), SatError> {
        loop {
            let mut changed = false;
            for i in 0..self.existentials.len() {
                let (f, b) = self.existentials[i];
                if self.dead.contains(&f) {
                    continue;
                }
                let realizable = self.solve(engine, &[], &[(f, true)], None)?.is_some()
                    && self.solve(engine, &[], &[(b, true)], None)?.is_some();
                if !realizable {
                    log::debug!("role {} cannot be populated", self.predicates.name(f));
                    self.dead.insert(f);
                    self.dead.insert(b);
                    changed = true;
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }

    /// Adds a predicate outside the normal form, e.g. for branching.
    pub fn fresh_predicate(&mut self, prefix: &str) -> SymbolId {
        self.predicates.fresh(prefix)
    }

    /// All constraints a susceptible type must satisfy.
    pub fn constraints(&self) -> Vec<Formula> {
        let mut all = self.core.clone();
        all.extend(self.dead.iter().map(|&d| Formula::not(Formula::sym(d))));
        all
    }

    /// Whether `v` satisfies the core with dead existentials false.
    pub fn is_susceptible(&self, v: &Valuation) -> bool {
        self.constraints().iter().all(|f| eval_classical(f, v).unwrap_or(false))
    }

    /// A type satisfying the core, `extra`, `assumptions` and optionally
    /// `cut` over the given symbols.
    pub fn solve(
        &mut self,
        engine: &mut impl SatBackend,
        extra: &[Formula],
        assumptions: &[(SymbolId, bool)],
        cut: Option<(&LinearCut, &[SymbolId])>,
    ) -> Result<Option<Valuation>, SatError> {
        let n = self.predicates.len();
        let all = self.constraints();
        let mut cnf = formulas_to_cnf(all.iter().chain(extra), n);
        if let Some((cut, over)) = cut {
            let vars: Vec<usize> = over.iter().map(|s| s.0).collect();
            encode_linear_geq_into(&mut cnf, cut, &vars);
        }
        let lits: Vec<Lit> = assumptions.iter().map(|&(s, b)| Lit::new(s.0, b)).collect();
        self.sat_calls += 1;
        match engine.solve(&cnf, &lits)? {
            SatResult::Unsat => Ok(None),
            SatResult::Sat(model) => {
                if !cnf.is_satisfied_by(&model) {
                    return Err(SatError::UnsoundModel);
                }
                Ok(Some(Valuation(model[..n].to_vec())))
            }
        }
    }

    pub fn display(&self, b: Basic, roles: &SymbolTable) -> String {
        BasicDisplay { basic: b, predicates: &self.predicates, roles }.to_string()
    }
}

/// A type over the normal form's predicates and role pseudo-predicates
/// satisfying `U` together with the unary consequences of `E`.
pub fn joint_sat(nf: &NormalFormCquel, engine: &mut impl SatBackend) -> Result<Option<Valuation>, SatError> {
    match JointSat::new(nf, engine)? {
        Err(_) => Ok(None),
        Ok(mut ctx) => ctx.solve(engine, &[], &[], None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cquel::{normalize_cquel, ConceptLiteral, CquelInstance};
    use crate::formula::parse_formula;
    use crate::sat::SatEngine;

    fn lit(basic: Basic, positive: bool) -> ConceptLiteral {
        ConceptLiteral { basic, positive }
    }

    fn ia(lhs: Basic, rhs: &[(Basic, bool)]) -> ElConstraint {
        ElConstraint::Inclusion { lhs, rhs: rhs.iter().map(|&(b, p)| lit(b, p)).collect() }
    }

    /// Every interpretation of `preds` unary predicates and `roles` binary
    /// ones over a domain of `size` elements, as (unary, binary) bit masks.
    fn interpretations(preds: usize, roles: usize, size: usize) -> impl Iterator<Item = (Vec<u32>, Vec<u32>)> {
        let unary_bits = preds * size;
        let binary_bits = roles * size * size;
        (0u64..1 << (unary_bits + binary_bits)).map(move |code| {
            let unary = (0..preds).map(|p| ((code >> (p * size)) & ((1 << size) - 1)) as u32).collect();
            let rest = code >> unary_bits;
            let binary = (0..roles)
                .map(|r| ((rest >> (r * size * size)) & ((1 << (size * size)) - 1)) as u32)
                .collect();
            (unary, binary)
        })
    }

    fn holds(b: Basic, d: usize, size: usize, unary: &[u32], binary: &[u32]) -> bool {
        match b {
            Basic::Pred(p) => unary[p.0] >> d & 1 == 1,
            Basic::Exists(r) => (0..size).any(|e| binary[r.0] >> (d * size + e) & 1 == 1),
            Basic::ExistsInv(r) => (0..size).any(|e| binary[r.0] >> (e * size + d) & 1 == 1),
        }
    }

    fn is_model(el: &[ElConstraint], size: usize, unary: &[u32], binary: &[u32]) -> bool {
        (0..size).all(|d| {
            el.iter().all(|c| match c {
                ElConstraint::Inclusion { lhs, rhs } => {
                    !holds(*lhs, d, size, unary, binary)
                        || rhs.iter().all(|l| holds(l.basic, d, size, unary, binary) == l.positive)
                }
                _ => true,
            })
        })
    }

    /// Checks every derived inclusion in all models with at most two elements.
    fn assert_sound(el: &[ElConstraint], preds: usize, roles: usize, closure: &NiClosure) {
        for size in 1..=2 {
            for (unary, binary) in interpretations(preds, roles, size) {
                if !is_model(el, size, &unary, &binary) {
                    continue;
                }
                for d in 0..size {
                    let h = |b| holds(b, d, size, &unary, &binary);
                    for &(a, b) in &closure.positive {
                        assert!(!h(a) || h(b), "{a:?} ⊑ {b:?} fails");
                    }
                    for &(a, b) in &closure.negative {
                        assert!(!(h(a) && h(b)), "{a:?} ⊓ {b:?} nonempty");
                    }
                }
            }
        }
    }

    #[test]
    fn chain_of_inclusions() {
        let [a, b, c] = [0, 1, 2].map(|i| Basic::Pred(SymbolId(i)));
        let el = vec![ia(a, &[(b, true)]), ia(b, &[(c, false)])];
        let closure = ni_closure(&el).unwrap();
        assert!(closure.entails_disjoint(a, c));
        assert!(closure.entails_inclusion(a, b));
        assert!(!closure.is_empty_concept(a));
        assert_sound(&el, 3, 0, &closure);
    }

    #[test]
    fn empty_domain_empties_the_range() {
        let a = Basic::Pred(SymbolId(0));
        let r = SymbolId(0);
        let el = vec![ia(Basic::Exists(r), &[(a, true), (a, false)]), ia(a, &[(Basic::ExistsInv(r), true)])];
        let closure = ni_closure(&el).unwrap();
        assert!(closure.is_empty_concept(Basic::Exists(r)));
        assert!(closure.is_empty_concept(Basic::ExistsInv(r)));
        assert!(closure.is_empty_concept(a));
        assert_sound(&el, 1, 1, &closure);
    }

    #[test]
    fn random_closures_are_sound() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let basics = [
            Basic::Pred(SymbolId(0)),
            Basic::Pred(SymbolId(1)),
            Basic::Exists(SymbolId(0)),
            Basic::ExistsInv(SymbolId(0)),
        ];
        for _ in 0..40 {
            let el: Vec<ElConstraint> = (0..rng.gen_range(1..4))
                .map(|_| ia(basics[rng.gen_range(0..4)], &[(basics[rng.gen_range(0..4)], rng.gen_bool(0.5))]))
                .collect();
            let closure = ni_closure(&el).unwrap();
            assert_sound(&el, 2, 1, &closure);
        }
    }

    #[test]
    fn facts_against_disjointness() {
        let [a, b] = [0, 1].map(|i| Basic::Pred(SymbolId(i)));
        let c = SymbolId(0);
        let mut el = vec![ia(a, &[(b, false)]), ElConstraint::Fact { pred: SymbolId(0), constant: c }];
        assert!(ni_closure(&el).is_ok());
        el.push(ElConstraint::Fact { pred: SymbolId(1), constant: c });
        assert!(ni_closure(&el).is_err());
    }

    #[test]
    fn functional_role_with_two_successors() {
        let r = SymbolId(0);
        let [x, y, z] = [0, 1, 2].map(SymbolId);
        let mut el = vec![
            ElConstraint::Funct { role: r, inverse: false },
            ElConstraint::RoleFact { role: r, from: x, to: y },
            ElConstraint::RoleFact { role: r, from: z, to: y },
        ];
        assert!(ni_closure(&el).is_ok());
        el.push(ElConstraint::RoleFact { role: r, from: x, to: z });
        assert!(ni_closure(&el).is_err());
        el[0] = ElConstraint::Funct { role: r, inverse: true };
        assert!(ni_closure(&el).is_err());
    }

    #[test]
    fn self_disjoint_predicate_with_a_fact() {
        let p = Basic::Pred(SymbolId(0));
        let el = vec![ia(p, &[(p, false)]), ElConstraint::Fact { pred: SymbolId(0), constant: SymbolId(0) }];
        assert!(ni_closure(&el).is_err());
        assert!(ni_closure(&el[..1]).unwrap().is_empty_concept(p));
    }

    #[test]
    fn parent_definition_has_no_disjointness() {
        let p = Basic::Pred(SymbolId(0));
        let some = Basic::Exists(SymbolId(0));
        let el = vec![ia(p, &[(some, true)]), ia(some, &[(p, true)])];
        let closure = ni_closure(&el).unwrap();
        assert!(closure.negative.is_empty());
        assert!(closure.entails_inclusion(p, some) && closure.entails_inclusion(some, p));
        assert_sound(&el, 1, 1, &closure);
    }

    fn instance(universal: &[&str], roles: &[&str], el: impl Fn(&SymbolTable, &SymbolTable) -> Vec<ElConstraint>) -> NormalFormCquel {
        let mut predicates = SymbolTable::new();
        for name in ["a", "b", "p"] {
            predicates.intern(name);
        }
        let universal = universal.iter().map(|s| parse_formula(s, &mut predicates).unwrap()).collect();
        let mut role_table = SymbolTable::new();
        for r in roles {
            role_table.intern(r);
        }
        let el = el(&predicates, &role_table);
        normalize_cquel(&CquelInstance { predicates, roles: role_table, universal, el, ..Default::default() }).unwrap()
    }

    #[test]
    fn joint_sat_unary_only() {
        let nf = instance(&["a -> b", "b -> !p"], &[], |_, _| vec![]);
        let mut engine = SatEngine::default();
        let v = joint_sat(&nf, &mut engine).unwrap().unwrap();
        for f in &nf.universal {
            assert!(eval_classical(f, &v).unwrap());
        }
    }

    #[test]
    fn contradictory_universal() {
        let nf = instance(&["p & !p"], &[], |_, _| vec![]);
        assert_eq!(joint_sat(&nf, &mut SatEngine::default()).unwrap(), None);
    }

    #[test]
    fn example_four_first_column_is_susceptible() {
        let nf = normalize_cquel(&crate::cquel::tests::example_two(false)).unwrap();
        let mut engine = SatEngine::default();
        let mut ctx = JointSat::new(&nf, &mut engine).unwrap().unwrap();
        let pin: Vec<(SymbolId, bool)> = [("q2", true), ("g", true), ("p", true), ("m", true), ("h", false)]
            .iter()
            .map(|&(n, b)| (nf.predicates.lookup(n).unwrap(), b))
            .collect();
        let v = ctx.solve(&mut engine, &[], &pin, None).unwrap().unwrap();
        assert!(ctx.is_susceptible(&v));
        assert!(joint_sat(&nf, &mut engine).unwrap().is_some());
    }

    #[test]
    fn joint_sat_parent_definition() {
        let nf = instance(&[], &["parentOf"], |p, r| {
            let p = Basic::Pred(p.lookup("p").unwrap());
            let some = Basic::Exists(r.lookup("parentOf").unwrap());
            vec![ia(p, &[(some, true)]), ia(some, &[(p, true)])]
        });
        let mut engine = SatEngine::default();
        let mut ctx = JointSat::new(&nf, &mut engine).unwrap().unwrap();
        let p = nf.predicates.lookup("p").unwrap();
        let some = ctx.predicates.lookup("some parentOf").unwrap();
        for value in [false, true] {
            let v = ctx.solve(&mut engine, &[], &[(p, value)], None).unwrap().unwrap();
            assert_eq!(v.get(some), Some(value));
        }
    }

    #[test]
    fn unrealizable_role_is_dead() {
        // b → ∃r, ∃r⁻ → a, ∀x ¬a: nothing can be an r-successor
        let nf = instance(&["!a"], &["r"], |p, r| {
            let a = Basic::Pred(p.lookup("a").unwrap());
            let b = Basic::Pred(p.lookup("b").unwrap());
            let r = r.lookup("r").unwrap();
            vec![ia(b, &[(Basic::Exists(r), true)]), ia(Basic::ExistsInv(r), &[(a, true)])]
        });
        let mut engine = SatEngine::default();
        let mut ctx = JointSat::new(&nf, &mut engine).unwrap().unwrap();
        assert_eq!(ctx.dead.len(), 2);
        let b = nf.predicates.lookup("b").unwrap();
        assert!(ctx.solve(&mut engine, &[], &[(b, true)], None).unwrap().is_none());
        assert!(ctx.solve(&mut engine, &[], &[(b, false)], None).unwrap().is_some());
    }
}
