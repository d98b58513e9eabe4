//! Finite models from count witnesses, and a direct first-order checker.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::closure::JointSat;
use super::solve::CountWitness;
use super::{Basic, CquelError, CquelInstance, ElConstraint, NormalFormCquel};
use crate::formula::{eval_classical, SymbolId, Valuation};
use crate::lp::Relation;
use crate::sat::{SatBackend, SatEngine};

/// Elements carry a valuation of the unary predicates; roles are edge sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteModel {
    pub elements: Vec<Valuation>,
    /// Edges per role, indexed like the role table.
    pub roles: Vec<BTreeSet<(usize, usize)>>,
    pub constants: BTreeMap<SymbolId, usize>,
    /// Elements added to supply role successors or predecessors.
    pub skolem_elements: usize,
}

impl FiniteModel {
    fn has_successor(&self, role: SymbolId, d: usize) -> bool {
        self.roles[role.0].iter().any(|&(a, _)| a == d)
    }

    fn has_predecessor(&self, role: SymbolId, d: usize) -> bool {
        self.roles[role.0].iter().any(|&(_, b)| b == d)
    }

    pub fn holds(&self, b: Basic, d: usize) -> bool {
        match b {
            Basic::Pred(p) => self.elements[d].get(p) == Some(true),
            Basic::Exists(r) => self.has_successor(r, d),
            Basic::ExistsInv(r) => self.has_predecessor(r, d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelViolation {
    #[error("the domain is empty")]
    Empty,
    #[error("element {element} does not interpret every predicate")]
    Unmapped { element: usize },
    #[error("counting sentence {index} counts {count} elements")]
    Counting { index: usize, count: u64 },
    #[error("universal sentence {index} fails at element {element}")]
    Universal { index: usize, element: usize },
    #[error("EL constraint {index} fails at element {element}")]
    El { index: usize, element: usize },
    #[error("fact {index} does not hold")]
    Fact { index: usize },
}

/// Evaluates every sentence of `inst` in `m`.
pub fn check_model(inst: &CquelInstance, m: &FiniteModel) -> Result<(), ModelViolation> {
    if m.elements.is_empty() {
        return Err(ModelViolation::Empty);
    }
    let eval = |f, d: usize| eval_classical(f, &m.elements[d]).map_err(|_| ModelViolation::Unmapped { element: d });
    let domain = 0..m.elements.len();
    for (index, s) in inst.counting.iter().enumerate() {
        let mut count = 0u64;
        for d in domain.clone() {
            count += u64::from(eval(&s.body, d)?);
        }
        let ok = match s.relation {
            Relation::Le => count <= s.bound,
            Relation::Ge => count >= s.bound,
            Relation::Eq => count == s.bound,
        };
        if !ok {
            return Err(ModelViolation::Counting { index, count });
        }
    }
    for (index, f) in inst.universal.iter().enumerate() {
        for element in domain.clone() {
            if !eval(f, element)? {
                return Err(ModelViolation::Universal { index, element });
            }
        }
    }
    let constant = |c: &SymbolId, index| m.constants.get(c).copied().ok_or(ModelViolation::Fact { index });
    for (index, c) in inst.el.iter().enumerate() {
        match c {
            ElConstraint::Inclusion { lhs, rhs } => {
                for element in domain.clone() {
                    if m.holds(*lhs, element) && rhs.iter().any(|l| m.holds(l.basic, element) != l.positive) {
                        return Err(ModelViolation::El { index, element });
                    }
                }
            }
            ElConstraint::Funct { role, inverse } => {
                let mut seen = BTreeSet::new();
                for &(a, b) in &m.roles[role.0] {
                    let key = if *inverse { b } else { a };
                    if !seen.insert(key) {
                        return Err(ModelViolation::El { index, element: key });
                    }
                }
            }
            ElConstraint::Fact { pred, constant: c } => {
                let d = constant(c, index)?;
                if m.elements[d].get(*pred) != Some(true) {
                    return Err(ModelViolation::Fact { index });
                }
            }
            ElConstraint::RoleFact { role, from, to } => {
                let edge = (constant(from, index)?, constant(to, index)?);
                if !m.roles[role.0].contains(&edge) {
                    return Err(ModelViolation::Fact { index });
                }
            }
        }
    }
    Ok(())
}

const MAX_EXTRA_ELEMENTS: usize = 10_000;

struct Builder<'a, E> {
    nf: &'a NormalFormCquel,
    ctx: JointSat,
    engine: &'a mut E,
    types: Vec<Valuation>,
    edges: Vec<BTreeSet<(usize, usize)>>,
    functional: BTreeSet<(SymbolId, bool)>,
    extra: usize,
}

impl<E: SatBackend> Builder<'_, E> {
    /// A new element whose type includes `required`, preferably outside
    /// every counted predicate so that no count moves.
    fn fresh(&mut self, required: &[(SymbolId, bool)]) -> Result<usize, CquelError> {
        if self.extra >= MAX_EXTRA_ELEMENTS {
            return Err(CquelError::Model(format!("more than {MAX_EXTRA_ELEMENTS} extra elements needed")));
        }
        let mut quiet = required.to_vec();
        quiet.extend(self.nf.q.iter().map(|r| (r.pred, false)));
        let v = match self.ctx.solve(self.engine, &[], &quiet, None)? {
            Some(v) => v,
            None => self
                .ctx
                .solve(self.engine, &[], required, None)?
                .ok_or_else(|| CquelError::Model("no susceptible type for a required element".into()))?,
        };
        self.extra += 1;
        self.types.push(v);
        Ok(self.types.len() - 1)
    }

    fn has(&self, d: usize, s: SymbolId) -> bool {
        self.types[d].get(s) == Some(true)
    }

    fn successors(&self, r: usize, d: usize) -> usize {
        self.edges[r].iter().filter(|&&(a, _)| a == d).count()
    }

    fn predecessors(&self, r: usize, d: usize) -> usize {
        self.edges[r].iter().filter(|&&(_, b)| b == d).count()
    }

    /// Gives every element the role neighbours its type promises.
    fn saturate(&mut self) -> Result<(), CquelError> {
        let mut d = 0;
        while d < self.types.len() {
            for r in 0..self.ctx.existentials.len() {
                let (f, b) = self.ctx.existentials[r];
                let role = SymbolId(r);
                if self.has(d, f) && self.successors(r, d) == 0 {
                    let inverse_functional = self.functional.contains(&(role, true));
                    let target = (0..self.types.len())
                        .find(|&t| self.has(t, b) && !(inverse_functional && self.predecessors(r, t) > 0));
                    let t = match target {
                        Some(t) => t,
                        None => self.fresh(&[(b, true)])?,
                    };
                    self.edges[r].insert((d, t));
                }
                if self.has(d, b) && self.predecessors(r, d) == 0 {
                    let functional = self.functional.contains(&(role, false));
                    let source = (0..self.types.len())
                        .find(|&s| self.has(s, f) && !(functional && self.successors(r, s) > 0));
                    let s = match source {
                        Some(s) => s,
                        None => self.fresh(&[(f, true)])?,
                    };
                    self.edges[r].insert((s, d));
                }
            }
            d += 1;
        }
        Ok(())
    }
}

/// Materializes `w` as a finite structure: one element per counted
/// occurrence of a type, constants placed on elements whose type fits
/// their facts, and role edges added until every existential in every type
/// is witnessed. Missing role neighbours are new elements. The result is
/// model-checked against `nf`.
pub fn build_model(nf: &NormalFormCquel, w: &CountWitness) -> Result<FiniteModel, CquelError> {
    let mut engine = SatEngine::default();
    let ctx = JointSat::new(nf, &mut engine)?.map_err(|e| CquelError::Model(e.0))?;
    let mut types = Vec::new();
    for (v, c) in &w.entries {
        if v.len() != ctx.base_len {
            return Err(CquelError::Model("witness type has the wrong length".into()));
        }
        for _ in 0..*c {
            types.push(v.clone());
        }
    }
    let functional = nf
        .el
        .iter()
        .filter_map(|c| match c {
            ElConstraint::Funct { role, inverse } => Some((*role, *inverse)),
            _ => None,
        })
        .collect();
    let mut b = Builder {
        nf,
        ctx,
        engine: &mut engine,
        types,
        edges: vec![BTreeSet::new(); nf.roles.len()],
        functional,
        extra: 0,
    };
    let counted = b.types.len();

    let mut required: BTreeMap<SymbolId, BTreeSet<Basic>> = BTreeMap::new();
    for c in &nf.el {
        match *c {
            ElConstraint::Fact { pred, constant } => {
                required.entry(constant).or_default().insert(Basic::Pred(pred));
            }
            ElConstraint::RoleFact { role, from, to } => {
                required.entry(from).or_default().insert(Basic::Exists(role));
                required.entry(to).or_default().insert(Basic::ExistsInv(role));
            }
            _ => {}
        }
    }
    let mut constants = BTreeMap::new();
    let mut taken = BTreeSet::new();
    for (c, basics) in &required {
        let symbols: Vec<(SymbolId, bool)> = basics.iter().map(|&x| (b.ctx.symbol(x), true)).collect();
        let host = (0..b.types.len()).find(|&d| !taken.contains(&d) && symbols.iter().all(|&(s, _)| b.has(d, s)));
        let d = match host {
            Some(d) => d,
            None => b.fresh(&symbols)?,
        };
        taken.insert(d);
        constants.insert(*c, d);
    }
    for c in &nf.el {
        if let ElConstraint::RoleFact { role, from, to } = *c {
            b.edges[role.0].insert((constants[&from], constants[&to]));
        }
    }
    b.saturate()?;
    let extra = b.types.len() - counted;
    if extra > 0 {
        log::debug!("{extra} elements added for constants and role neighbours");
    }
    let model = FiniteModel {
        elements: b.types.iter().map(|v| Valuation(v.0[..nf.predicates.len()].to_vec())).collect(),
        roles: b.edges,
        constants,
        skolem_elements: extra,
    };
    check_model(&nf.as_instance(), &model).map_err(|e| CquelError::Model(e.to_string()))?;
    Ok(model)
}
