//! Seeded corpora: generate, solve, compare with the oracle.

use std::thread;

use qlr::cquel::size_bound;
use qlr::lipsat::normalize_lip;
use qlr::psat::normalize_psat;

use crate::format::{Instance, Logic};
use crate::generate::{generate_instance, GenParams};
use crate::oracle::{oracle_solve, OracleVerdict};
use crate::report::WitnessReport;
use crate::run::{solve, SolveOptions};

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub seed: u64,
    pub instance: Instance,
    pub solver: Result<WitnessReport, String>,
    /// `None` when the oracle was not asked.
    pub oracle: Option<Result<OracleVerdict, String>>,
}

impl CaseResult {
    /// Verdicts match; for LIPSAT only an oracle `Sat` is binding.
    pub fn agrees(&self) -> bool {
        let Ok(report) = &self.solver else { return false };
        match &self.oracle {
            None => true,
            Some(Err(_)) => false,
            Some(Ok(OracleVerdict::Sat)) => report.is_sat(),
            Some(Ok(OracleVerdict::Unsat)) => self.instance.logic() == Logic::Lipsat || !report.is_sat(),
        }
    }

    /// Nonzero witness entries against the bound for this instance.
    pub fn support(&self) -> Option<(usize, usize)> {
        let report = self.solver.as_ref().ok().filter(|r| r.is_sat())?;
        Some((report.witness.len(), support_bound(&self.instance)))
    }
}

/// `k + 1` for PSAT and LIPSAT with `k` normal-form assignments, the
/// distinct-type bound for CQUEL.
pub fn support_bound(inst: &Instance) -> usize {
    match inst {
        Instance::Psat(p) => normalize_psat(p).map_or(p.assignments.len(), |nf| nf.psi.len()) + 1,
        Instance::Lipsat(l) => normalize_lip(l).map_or(l.assignments.len(), |nf| nf.psi.len()) + 1,
        Instance::Cquel(c) => size_bound(c.counting.len()),
    }
}

pub fn run_case(logic: Logic, seed: u64, params: &GenParams, opts: &SolveOptions, with_oracle: bool) -> CaseResult {
    let instance = generate_instance(logic, seed, params);
    let solver = solve(&instance, opts).map_err(|e| e.to_string());
    let oracle = with_oracle.then(|| oracle_solve(&instance).map_err(|e| e.to_string()));
    CaseResult { seed, instance, solver, oracle }
}

/// Seeds `first_seed..first_seed + count`, spread over `jobs` worker
/// threads. Results come back in seed order whatever the job count.
pub fn run_corpus(
    logic: Logic,
    first_seed: u64,
    count: u64,
    params: &GenParams,
    opts: &SolveOptions,
    with_oracle: bool,
    jobs: usize,
) -> Vec<CaseResult> {
    let jobs = jobs.max(1) as u64;
    let mut results: Vec<CaseResult> = thread::scope(|scope| {
        let workers: Vec<_> = (0..jobs)
            .map(|j| {
                scope.spawn(move || {
                    (0..count)
                        .filter(|i| i % jobs == j)
                        .map(|i| run_case(logic, first_seed + i, params, opts, with_oracle))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("corpus worker panicked")).collect()
    });
    results.sort_by_key(|r| r.seed);
    results
}
