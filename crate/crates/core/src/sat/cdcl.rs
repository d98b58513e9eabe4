//! A small conflict-driven clause-learning solver.
//!
//! Two watched literals, first-UIP learning, activity-based branching with
//! lowest-index tie-breaking, phase saving, no restarts. Given the same
//! clauses and assumptions it always explores the same search tree.

use crate::cnf::{CnfFormula, Lit};

use super::{SatError, SatResult};

const VAR_DECAY: f64 = 0.95;

pub struct Cdcl {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    values: Vec<Option<bool>>,
    level: Vec<usize>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    phase: Vec<bool>,
    seen: Vec<bool>,
    unsat: bool,
    pub conflicts: u64,
}

impl Cdcl {
    pub fn new(cnf: &CnfFormula) -> Self {
        let n = cnf.num_vars;
        let mut s = Cdcl {
            num_vars: n,
            clauses: Vec::with_capacity(cnf.clauses.len()),
            watches: vec![Vec::new(); 2 * n],
            values: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            phase: vec![false; n],
            seen: vec![false; n],
            unsat: false,
            conflicts: 0,
        };
        for c in &cnf.clauses {
            s.add_input_clause(c);
            if s.unsat {
                break;
            }
        }
        s
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.values[l.var()].map(|v| v == l.is_positive())
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn add_input_clause(&mut self, clause: &[Lit]) {
        let mut lits: Vec<Lit> = clause.to_vec();
        lits.sort();
        lits.dedup();
        if lits.windows(2).any(|w| w[0] == !w[1]) {
            return;
        }
        match lits.len() {
            0 => self.unsat = true,
            1 => match self.lit_value(lits[0]) {
                Some(true) => {}
                Some(false) => self.unsat = true,
                None => self.enqueue(lits[0], None),
            },
            _ => {
                let idx = self.clauses.len();
                self.watches[lits[0].code()].push(idx);
                self.watches[lits[1].code()].push(idx);
                self.clauses.push(lits);
            }
        }
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var();
        self.values[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns a falsified clause on conflict.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let watching = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut kept = Vec::with_capacity(watching.len());
            let mut conflict = None;
            let mut iter = watching.into_iter();
            for ci in iter.by_ref() {
                let clause = &mut self.clauses[ci];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                if self.values[first.var()].map(|v| v == first.is_positive()) == Some(true) {
                    kept.push(ci);
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    if self.values[l.var()].map(|v| v == l.is_positive()) != Some(false) {
                        clause.swap(1, k);
                        let new_watch = clause[1];
                        self.watches[new_watch.code()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                kept.push(ci);
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(ci);
                        break;
                    }
                    _ => self.enqueue(first, Some(ci)),
                }
            }
            kept.extend(iter);
            self.watches[false_lit.code()] = kept;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, conflict: usize) -> (Vec<Lit>, usize) {
        let current = self.decision_level();
        let mut learnt = vec![Lit::pos(0)];
        let mut pending = 0usize;
        let mut idx = self.trail.len();
        let mut clause = conflict;
        let mut skip_first = false;
        let asserting;
        loop {
            let lits: Vec<Lit> = self.clauses[clause].clone();
            for &q in lits.iter().skip(usize::from(skip_first)) {
                let v = q.var();
                if self.seen[v] || self.level[v] == 0 {
                    continue;
                }
                self.seen[v] = true;
                self.bump(v);
                if self.level[v] == current {
                    pending += 1;
                } else {
                    learnt.push(q);
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let p = self.trail[idx];
            self.seen[p.var()] = false;
            pending -= 1;
            if pending == 0 {
                asserting = p;
                break;
            }
            clause = self.reason[p.var()].expect("implied literal has a reason");
            skip_first = true;
        }
        learnt[0] = !asserting;
        for l in &learnt[1..] {
            self.seen[l.var()] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let (pos, lvl) = learnt[1..]
                .iter()
                .enumerate()
                .map(|(i, l)| (i + 1, self.level[l.var()]))
                .max_by_key(|&(i, lvl)| (lvl, std::cmp::Reverse(i)))
                .unwrap();
            learnt.swap(1, pos);
            back = lvl;
        }
        (learnt, back)
    }

    fn backtrack(&mut self, to_level: usize) {
        if self.decision_level() <= to_level {
            return;
        }
        let start = self.trail_lim[to_level];
        for l in self.trail.drain(start..) {
            let v = l.var();
            self.phase[v] = l.is_positive();
            self.values[v] = None;
            self.reason[v] = None;
        }
        self.trail_lim.truncate(to_level);
        self.qhead = self.trail.len();
    }

    fn pick_branch(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in 0..self.num_vars {
            if self.values[v].is_none() && best.map_or(true, |b| self.activity[v] > self.activity[b]) {
                best = Some(v);
            }
        }
        best
    }

    pub fn solve(&mut self, assumptions: &[Lit], budget: Option<u64>) -> Result<SatResult, SatError> {
        if self.unsat {
            return Ok(SatResult::Unsat);
        }
        for a in assumptions {
            if a.var() >= self.num_vars {
                return Err(SatError::UnknownVariable(a.var()));
            }
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if let Some(b) = budget {
                    if self.conflicts > b {
                        return Err(SatError::BudgetExhausted(b));
                    }
                }
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Ok(SatResult::Unsat);
                }
                let (learnt, back) = self.analyze(confl);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let idx = self.clauses.len();
                    self.watches[learnt[0].code()].push(idx);
                    self.watches[learnt[1].code()].push(idx);
                    let first = learnt[0];
                    self.clauses.push(learnt);
                    self.enqueue(first, Some(idx));
                }
                self.var_inc /= VAR_DECAY;
                continue;
            }
            if self.decision_level() < assumptions.len() {
                let a = assumptions[self.decision_level()];
                match self.lit_value(a) {
                    Some(true) => self.trail_lim.push(self.trail.len()),
                    Some(false) => {
                        self.backtrack(0);
                        return Ok(SatResult::Unsat);
                    }
                    None => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, None);
                    }
                }
                continue;
            }
            match self.pick_branch() {
                None => {
                    let model = self.values.iter().map(|v| v.unwrap_or(false)).collect();
                    self.backtrack(0);
                    return Ok(SatResult::Sat(model));
                }
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    let phase = self.phase[v];
                    self.enqueue(Lit::new(v, phase), None);
                }
            }
        }
    }
}
