//! Boolean satisfiability over CNF and SAT-based column search.

mod cdcl;
mod encode;

use std::path::PathBuf;

use thiserror::Error;

use crate::cnf::{CnfFormula, Lit};

pub use cdcl::Cdcl;
pub use encode::{encode_linear_geq, encode_linear_geq_into, LinearCut};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// A model over every CNF variable.
    Sat(Vec<bool>),
    Unsat,
}

impl SatResult {
    pub fn model(&self) -> Option<&[bool]> {
        match self {
            SatResult::Sat(m) => Some(m),
            SatResult::Unsat => None,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("SAT conflict budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("assumption refers to unknown variable {0}")]
    UnknownVariable(usize),
    #[error("solver returned a model that violates its input")]
    UnsoundModel,
}

/// Interface for a complete SAT decision procedure.
pub trait SatBackend {
    fn solve(&mut self, cnf: &CnfFormula, assumptions: &[Lit]) -> Result<SatResult, SatError>;
}

#[derive(Debug, Clone, Default)]
pub struct SatConfig {
    /// Maximum conflicts per call; `None` is unlimited.
    pub conflict_budget: Option<u64>,
    /// When set, every query is written to this directory as DIMACS.
    pub dimacs_dump_dir: Option<PathBuf>,
}

/// The built-in CDCL backend plus call statistics.
#[derive(Debug, Clone, Default)]
pub struct SatEngine {
    pub config: SatConfig,
    pub calls: u64,
    pub conflicts: u64,
}

impl SatEngine {
    pub fn new(config: SatConfig) -> Self {
        SatEngine { config, calls: 0, conflicts: 0 }
    }

    fn dump(&self, cnf: &CnfFormula, assumptions: &[Lit]) {
        let Some(dir) = &self.config.dimacs_dump_dir else { return };
        let mut text = cnf.to_dimacs();
        if !assumptions.is_empty() {
            let a: Vec<String> = assumptions.iter().map(|l| l.to_dimacs().to_string()).collect();
            text = format!("c assumptions {}\n{text}", a.join(" "));
        }
        let path = dir.join(format!("query-{:05}.cnf", self.calls));
        if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, text)) {
            log::warn!("could not write DIMACS dump {}: {e}", path.display());
        }
    }
}

impl SatBackend for SatEngine {
    fn solve(&mut self, cnf: &CnfFormula, assumptions: &[Lit]) -> Result<SatResult, SatError> {
        self.calls += 1;
        self.dump(cnf, assumptions);
        let mut solver = Cdcl::new(cnf);
        let result = solver.solve(assumptions, self.config.conflict_budget);
        self.conflicts += solver.conflicts;
        let result = result?;
        if let SatResult::Sat(model) = &result {
            let assumed = assumptions.iter().all(|l| model[l.var()] == l.is_positive());
            if !assumed || !cnf.is_satisfied_by(model) {
                return Err(SatError::UnsoundModel);
            }
        }
        Ok(result)
    }
}

/// Decides `cnf` under `assumptions` with the default engine.
pub fn solve_cnf(cnf: &CnfFormula, assumptions: &[Lit]) -> Result<SatResult, SatError> {
    SatEngine::default().solve(cnf, assumptions)
}

/// A model of `gamma ∧ cut`, with the cut read over `project_to`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutModel {
    /// Values of `project_to`, in order.
    pub projection: Vec<bool>,
    /// Values of all variables of `gamma`.
    pub model: Vec<bool>,
}

/// Finds a model of `gamma` whose projection onto `project_to` satisfies `cut`.
/// `cut.weights` is aligned with `project_to`.
pub fn generate_valuation_under_cut(
    engine: &mut impl SatBackend,
    gamma: &CnfFormula,
    cut: &LinearCut,
    project_to: &[usize],
) -> Result<Option<CutModel>, SatError> {
    let mut query = gamma.clone();
    encode_linear_geq_into(&mut query, cut, project_to);
    match engine.solve(&query, &[])? {
        SatResult::Unsat => Ok(None),
        SatResult::Sat(model) => {
            let projection: Vec<bool> = project_to.iter().map(|&v| model[v]).collect();
            if !gamma.is_satisfied_by(&model) || !cut.is_satisfied_by(&projection) {
                return Err(SatError::UnsoundModel);
            }
            Ok(Some(CutModel { projection, model: model[..gamma.num_vars].to_vec() }))
        }
    }
}
