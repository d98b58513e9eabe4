//! JSON witness reports. Rationals are always exact strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub iterations: u64,
    pub columns_generated: u64,
    #[serde(default)]
    pub sat_calls: u64,
    #[serde(default)]
    pub milp_calls: u64,
    #[serde(default)]
    pub lp_pivots: u64,
    #[serde(default)]
    pub bnb_nodes: u64,
    #[serde(default)]
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    /// Symbol name to `0`/`1` for classical logics, `"num/den"` for Łukasiewicz.
    pub valuation: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stake {
    /// Position among the instance's `gamma` lines followed by its `prob` lines.
    pub index: usize,
    pub stake: String,
}

/// A finite first-order model. Elements are numbered from 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelReport {
    pub domain_size: usize,
    /// Elements added to satisfy existentials or host constants.
    pub skolem_elements: usize,
    pub predicates: BTreeMap<String, Vec<usize>>,
    pub roles: BTreeMap<String, Vec<[usize; 2]>>,
    pub constants: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub logic: String,
    /// `"sat"` or `"unsat"`.
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<WitnessEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dutch_book: Vec<Stake>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dutch_book_verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub stats: Stats,
}

impl WitnessReport {
    pub fn is_sat(&self) -> bool {
        self.verdict == "sat"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The report with wall time zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.stats.wall_time_ms = 0;
        r
    }
}
