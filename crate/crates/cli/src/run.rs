//! Solving and re-verifying instances. A witness is checked against the
//! original instance before it is put into a report, and reports read back
//! from disk are checked the same way.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use qlr::bnb::BnbPolicy;
use qlr::cquel::{
    build_model, check_model, cquel_solve, normalize_cquel, verify_count_witness, CountWitness, CquelConfig,
    CquelError, CquelInstance, CquelVerdict, FiniteModel,
};
use qlr::formula::{SymbolId, SymbolTable, Valuation};
use qlr::lipsat::{
    l_dutch_book_from_refutation, lipsat_solve, normalize_lip, verify_l_dutch_book, verify_witness_lip, ConvexWitness,
    LDutchBook, LipConfig, LipError, LipInstance, LipVerdict,
};
use qlr::lp::Relation;
use qlr::luka::{LValuation, LukaError};
use qlr::psat::{
    dutch_book_from_refutation, normalize_psat, psat_solve, verify_dutch_book, verify_witness_psat, DutchBook,
    ProbabilityWitness, PsatConfig, PsatError, PsatInstance, PsatVerdict,
};
use qlr::rational::{format_rational, parse_rational, Rational};
use qlr::sat::SatConfig;
use serde_json::Value;
use thiserror::Error;

use crate::format::Instance;
use crate::report::{ModelReport, Stake, Stats, WitnessEntry, WitnessReport};

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Column-generation rounds (per branch-and-bound node for CQUEL).
    pub max_iterations: Option<u64>,
    /// Branch-and-bound nodes, for CQUEL search and each Łukasiewicz MILP.
    pub max_nodes: Option<u64>,
    /// Directory receiving every SAT query in DIMACS form.
    pub dimacs_dir: Option<PathBuf>,
}

impl SolveOptions {
    fn sat(&self) -> SatConfig {
        SatConfig { conflict_budget: None, dimacs_dump_dir: self.dimacs_dir.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
}

fn failed(e: impl ToString) -> RunError {
    RunError::Failed(e.to_string())
}

pub fn solve(inst: &Instance, opts: &SolveOptions) -> Result<WitnessReport, RunError> {
    let start = Instant::now();
    let mut report = match inst {
        Instance::Psat(p) => solve_psat(p, opts)?,
        Instance::Cquel(c) => solve_cquel(c, opts)?,
        Instance::Lipsat(l) => solve_lipsat(l, opts)?,
    };
    report.stats.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

fn blank(logic: &str, sat: bool) -> WitnessReport {
    WitnessReport {
        logic: logic.into(),
        verdict: if sat { "sat" } else { "unsat" }.into(),
        witness: Vec::new(),
        model: None,
        dutch_book: Vec::new(),
        dutch_book_verified: None,
        notes: Vec::new(),
        stats: Stats::default(),
    }
}

fn stakes(stakes: &[(usize, Rational)]) -> Vec<Stake> {
    stakes.iter().map(|(index, s)| Stake { index: *index, stake: format_rational(s) }).collect()
}

fn classical_entry(symbols: &SymbolTable, v: &Valuation) -> BTreeMap<String, Value> {
    (0..symbols.len()).map(|i| (symbols.name(SymbolId(i)).to_string(), Value::from(u8::from(v.0[i])))).collect()
}

fn luka_entry(symbols: &SymbolTable, v: &LValuation) -> BTreeMap<String, Value> {
    (0..symbols.len()).map(|i| (symbols.name(SymbolId(i)).to_string(), Value::from(format_rational(&v.0[i])))).collect()
}

/// Drops normal-form symbols and merges valuations that become equal.
fn project<V: Ord + Clone>(entries: impl Iterator<Item = (V, Rational)>) -> Vec<(V, Rational)> {
    let mut out: Vec<(V, Rational)> = Vec::new();
    for (v, w) in entries {
        match out.iter_mut().find(|(u, _)| *u == v) {
            Some((_, total)) => *total += w,
            None => out.push((v, w)),
        }
    }
    out
}

fn psat_budget(e: PsatError) -> RunError {
    match e {
        PsatError::IterationBudget(_) => RunError::Budget(e.to_string()),
        e => failed(e),
    }
}

fn solve_psat(inst: &PsatInstance, opts: &SolveOptions) -> Result<WitnessReport, RunError> {
    let nf = normalize_psat(inst).map_err(failed)?;
    let config = PsatConfig { max_iterations: opts.max_iterations, sat: opts.sat(), ..Default::default() };
    let outcome = psat_solve(&nf, &config).map_err(psat_budget)?;
    let s = &outcome.stats;
    let stats = Stats {
        iterations: s.iterations,
        columns_generated: s.columns_generated,
        sat_calls: s.sat_calls,
        lp_pivots: s.lp_pivots,
        ..Default::default()
    };
    let n = inst.symbols.len();
    match outcome.verdict {
        PsatVerdict::Sat(w) => {
            let entries = project(w.entries.into_iter().map(|e| (Valuation(e.valuation.0[..n].to_vec()), e.weight)));
            let w = ProbabilityWitness::new(entries);
            verify_witness_psat(inst, &w).map_err(|e| RunError::Failed(format!("witness rejected: {e}")))?;
            let mut report = blank("psat", true);
            report.witness = w
                .entries
                .iter()
                .map(|e| WitnessEntry {
                    valuation: classical_entry(&inst.symbols, &e.valuation),
                    weight: Some(format_rational(&e.weight)),
                    count: None,
                })
                .collect();
            report.stats = stats;
            Ok(report)
        }
        PsatVerdict::Unsat(r) => {
            let mut report = blank("psat", false);
            report.stats = stats;
            if inst.assignments.iter().all(|a| a.relation == Relation::Eq) {
                let book = dutch_book_from_refutation(inst, &nf, &r);
                let verified = verify_dutch_book(inst, &book);
                if verified == Some(false) {
                    return Err(RunError::Failed("Dutch book does not lose in every world".into()));
                }
                report.dutch_book = stakes(&book.stakes);
                report.dutch_book_verified = verified;
                if verified.is_none() {
                    report.notes.push("too many symbols to check the Dutch book by enumeration".into());
                }
            } else {
                report.notes.push("no Dutch book: some assignments are inequalities".into());
            }
            Ok(report)
        }
    }
}

fn solve_lipsat(inst: &LipInstance, opts: &SolveOptions) -> Result<WitnessReport, RunError> {
    let nf = normalize_lip(inst).map_err(failed)?;
    let mut config = LipConfig { max_iterations: opts.max_iterations, ..Default::default() };
    config.bnb.max_nodes = opts.max_nodes;
    let budget = |e: LipError| match e {
        LipError::IterationBudget(_) | LipError::Luka(LukaError::NodeBudget(_)) => RunError::Budget(e.to_string()),
        e => failed(e),
    };
    let outcome = lipsat_solve(&nf, &config).map_err(budget)?;
    let s = &outcome.stats;
    let stats = Stats {
        iterations: s.iterations,
        columns_generated: s.columns_generated,
        milp_calls: s.milp_calls,
        bnb_nodes: s.bnb_nodes,
        lp_pivots: s.lp_pivots,
        ..Default::default()
    };
    let n = inst.symbols.len();
    match outcome.verdict {
        LipVerdict::Sat(w) => {
            let entries = project(w.entries.into_iter().map(|e| (LValuation(e.valuation.0[..n].to_vec()), e.weight)));
            let w = ConvexWitness::new(entries);
            verify_witness_lip(inst, &w).map_err(|e| RunError::Failed(format!("witness rejected: {e}")))?;
            let mut report = blank("lipsat", true);
            report.witness = w
                .entries
                .iter()
                .map(|e| WitnessEntry {
                    valuation: luka_entry(&inst.symbols, &e.valuation),
                    weight: Some(format_rational(&e.weight)),
                    count: None,
                })
                .collect();
            report.stats = stats;
            Ok(report)
        }
        LipVerdict::Unsat(r) => {
            let (book, verified) =
                l_dutch_book_from_refutation(inst, &nf, &r, &config.bnb).map_err(|e| budget(e.into()))?;
            let mut report = blank("lipsat", false);
            report.stats = stats;
            report.dutch_book = stakes(&book.stakes);
            report.dutch_book_verified = Some(verified);
            if !verified {
                report.notes.push("no stake on gamma made the book lose everywhere".into());
            }
            Ok(report)
        }
    }
}

fn solve_cquel(inst: &CquelInstance, opts: &SolveOptions) -> Result<WitnessReport, RunError> {
    let nf = normalize_cquel(inst).map_err(failed)?;
    let mut config = CquelConfig { sat: opts.sat(), ..Default::default() };
    if opts.max_iterations.is_some() {
        config.max_iterations = opts.max_iterations;
    }
    if opts.max_nodes.is_some() {
        config.max_nodes = opts.max_nodes;
    }
    let outcome = cquel_solve(&nf, &config).map_err(|e| match e {
        CquelError::NodeBudget(_) | CquelError::IterationBudget(_) => RunError::Budget(e.to_string()),
        e => failed(e),
    })?;
    let s = &outcome.stats;
    let stats = Stats {
        iterations: s.iterations,
        columns_generated: s.columns_generated,
        sat_calls: s.sat_calls,
        lp_pivots: s.lp_pivots,
        bnb_nodes: s.bnb_nodes,
        ..Default::default()
    };
    let CquelVerdict::Sat(w) = outcome.verdict else {
        let mut report = blank("cquel", false);
        report.stats = stats;
        return Ok(report);
    };
    verify_count_witness(&nf, &w).map_err(|e| RunError::Failed(format!("witness rejected: {e}")))?;
    let mut report = blank("cquel", true);
    report.stats = stats;
    report.witness = w
        .entries
        .iter()
        .map(|(v, c)| WitnessEntry { valuation: classical_entry(&w.predicates, v), weight: None, count: Some(*c) })
        .collect();
    match build_model(&nf, &w) {
        Ok(m) => {
            check_model(inst, &m).map_err(|e| RunError::Failed(format!("model rejected: {e}")))?;
            report.model = Some(model_report(inst, &m));
        }
        Err(e) => report.notes.push(format!("no finite model printed: {e}")),
    }
    Ok(report)
}

fn model_report(inst: &CquelInstance, m: &FiniteModel) -> ModelReport {
    let predicates = (0..inst.predicates.len())
        .map(|p| {
            let holders = (0..m.elements.len()).filter(|&d| m.elements[d].get(SymbolId(p)) == Some(true)).collect();
            (inst.predicates.name(SymbolId(p)).to_string(), holders)
        })
        .collect();
    let roles = (0..inst.roles.len())
        .map(|r| (inst.roles.name(SymbolId(r)).to_string(), m.roles[r].iter().map(|&(a, b)| [a, b]).collect()))
        .collect();
    let constants = m.constants.iter().map(|(c, &d)| (inst.constants.name(*c).to_string(), d)).collect();
    ModelReport { domain_size: m.elements.len(), skolem_elements: m.skolem_elements, predicates, roles, constants }
}

/// Re-checks a report's certificate against `inst`. `Ok` means accepted.
pub fn verify_report(inst: &Instance, report: &WitnessReport) -> Result<(), String> {
    if report.logic != inst.logic().name() {
        return Err(format!("report is for {}, instance is {}", report.logic, inst.logic()));
    }
    match (inst, report.is_sat()) {
        (Instance::Psat(p), true) => {
            let entries = report
                .witness
                .iter()
                .map(|e| Ok((classical_valuation(&p.symbols, &e.valuation)?, weight(e)?)))
                .collect::<Result<Vec<_>, String>>()?;
            verify_witness_psat(p, &ProbabilityWitness::new(entries)).map_err(|e| e.to_string())
        }
        (Instance::Psat(p), false) => {
            let book = DutchBook { stakes: book(report, p.gamma.len() + p.assignments.len())? };
            match verify_dutch_book(p, &book) {
                Some(true) => Ok(()),
                Some(false) => Err("the Dutch book does not lose in every world".into()),
                None => Err("too many symbols to check the Dutch book".into()),
            }
        }
        (Instance::Lipsat(l), true) => {
            let entries = report
                .witness
                .iter()
                .map(|e| Ok((luka_valuation(&l.symbols, &e.valuation)?, weight(e)?)))
                .collect::<Result<Vec<_>, String>>()?;
            verify_witness_lip(l, &ConvexWitness::new(entries)).map_err(|e| e.to_string())
        }
        (Instance::Lipsat(l), false) => {
            let book = LDutchBook { stakes: book(report, l.gamma.len() + l.assignments.len())? };
            match verify_l_dutch_book(l, &book, &BnbPolicy::default()) {
                Ok(true) => Ok(()),
                Ok(false) => Err("the Dutch book does not lose under every valuation".into()),
                Err(e) => Err(e.to_string()),
            }
        }
        (Instance::Cquel(c), true) => verify_cquel(c, report),
        (Instance::Cquel(_), false) => Err("unsat CQUEL reports carry no certificate".into()),
    }
}

fn weight(e: &WitnessEntry) -> Result<Rational, String> {
    let w = e.weight.as_deref().ok_or("entry without weight")?;
    parse_rational(w).map_err(|e| e.to_string())
}

fn book(report: &WitnessReport, len: usize) -> Result<Vec<(usize, Rational)>, String> {
    if report.dutch_book.is_empty() {
        return Err("report has no Dutch book".into());
    }
    report
        .dutch_book
        .iter()
        .map(|s| {
            if s.index >= len {
                return Err(format!("stake index {} out of range", s.index));
            }
            Ok((s.index, parse_rational(&s.stake).map_err(|e| e.to_string())?))
        })
        .collect()
}

fn lookup<'a>(map: &'a BTreeMap<String, Value>, name: &str) -> Result<&'a Value, String> {
    map.get(name).ok_or_else(|| format!("valuation misses symbol `{name}`"))
}

fn classical_valuation(symbols: &SymbolTable, map: &BTreeMap<String, Value>) -> Result<Valuation, String> {
    let bits = symbols.names().map(|name| match lookup(map, name)? {
        Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
        Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
        Value::String(s) if s == "0" => Ok(false),
        Value::String(s) if s == "1" => Ok(true),
        v => Err(format!("`{name}` has non-Boolean value {v}")),
    });
    Ok(Valuation(bits.collect::<Result<_, String>>()?))
}

fn luka_valuation(symbols: &SymbolTable, map: &BTreeMap<String, Value>) -> Result<LValuation, String> {
    let values = symbols.names().map(|name| match lookup(map, name)? {
        Value::Number(n) if n.is_u64() => Ok(Rational::from_integer(n.as_u64().unwrap().into())),
        Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
        v => Err(format!("`{name}` has non-rational value {v}")),
    });
    Ok(LValuation(values.collect::<Result<_, String>>()?))
}

fn verify_cquel(inst: &CquelInstance, report: &WitnessReport) -> Result<(), String> {
    let nf = normalize_cquel(inst).map_err(|e| e.to_string())?;
    // types range over the normal form's predicates and the role existentials
    let mut predicates = nf.predicates.clone();
    for r in nf.roles.names() {
        predicates.intern(&format!("some {r}"));
        predicates.intern(&format!("some inv {r}"));
    }
    let entries = report
        .witness
        .iter()
        .map(|e| {
            let count = e.count.ok_or("entry without count")?;
            Ok((classical_valuation(&predicates, &e.valuation)?, count))
        })
        .collect::<Result<Vec<_>, String>>()?;
    verify_count_witness(&nf, &CountWitness { predicates, entries }).map_err(|e| e.to_string())?;
    let Some(m) = &report.model else { return Ok(()) };
    let mut elements = vec![Valuation::all_false(inst.predicates.len()); m.domain_size];
    for (name, holders) in &m.predicates {
        let p = inst.predicates.lookup(name).ok_or_else(|| format!("unknown predicate `{name}`"))?;
        for &d in holders {
            elements.get_mut(d).ok_or("element out of range")?.set(p, true);
        }
    }
    let mut roles = vec![Default::default(); inst.roles.len()];
    for (name, edges) in &m.roles {
        let r = inst.roles.lookup(name).ok_or_else(|| format!("unknown role `{name}`"))?;
        roles[r.0] = edges.iter().map(|&[a, b]| (a, b)).collect();
    }
    let constants = m
        .constants
        .iter()
        .map(|(name, &d)| Ok((inst.constants.lookup(name).ok_or_else(|| format!("unknown constant `{name}`"))?, d)))
        .collect::<Result<_, String>>()?;
    let model = FiniteModel { elements, roles, constants, skolem_elements: m.skolem_elements };
    if model.roles.iter().flatten().any(|&(a, b)| a.max(b) >= m.domain_size) {
        return Err("edge endpoint out of range".into());
    }
    check_model(inst, &model).map_err(|e| format!("model rejected: {e}"))
}
