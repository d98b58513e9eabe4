//! Exact rational linear programming.
//!
//! `min c'x  s.t.  A x ⋈ b, x ≥ 0` solved by a two-phase revised simplex
//! that keeps an explicit rational basis inverse. Pivoting follows Bland's
//! rule over a fixed global column order (structural, then slack, then
//! artificial), so every solve terminates and is reproducible.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{primitive_integer_vector, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }

    pub fn flipped(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A linear program stored column by column, so generated columns append cheaply.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LpProblem {
    pub relations: Vec<Relation>,
    pub rhs: Vec<Rational>,
    /// `columns[j][i]` is the coefficient of variable `j` in row `i`.
    pub columns: Vec<Vec<Rational>>,
    pub costs: Vec<Rational>,
}

impl LpProblem {
    pub fn new(relations: Vec<Relation>, rhs: Vec<Rational>) -> Self {
        assert_eq!(relations.len(), rhs.len());
        LpProblem { relations, rhs, columns: Vec::new(), costs: Vec::new() }
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn add_column(&mut self, column: Vec<Rational>, cost: Rational) -> usize {
        assert_eq!(column.len(), self.num_rows(), "column height must match row count");
        self.columns.push(column);
        self.costs.push(cost);
        self.columns.len() - 1
    }

    /// Appends a row; `coeffs` has one entry per existing column.
    pub fn add_row(&mut self, coeffs: &[Rational], relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.num_columns());
        for (col, a) in self.columns.iter_mut().zip(coeffs) {
            col.push(a.clone());
        }
        self.relations.push(relation);
        self.rhs.push(rhs);
    }

    pub fn row_activity(&self, row: usize, x: &[Rational]) -> Rational {
        self.columns
            .iter()
            .zip(x)
            .filter(|(_, v)| !v.is_zero())
            .map(|(col, v)| &col[row] * v)
            .sum()
    }

    pub fn objective(&self, x: &[Rational]) -> Rational {
        self.costs.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Index of the first violated row, if any; negativity is reported as `None` row.
    pub fn first_violation(&self, x: &[Rational]) -> Option<Option<usize>> {
        if x.len() != self.num_columns() || x.iter().any(|v| v.is_negative()) {
            return Some(None);
        }
        (0..self.num_rows())
            .find(|&i| !self.relations[i].holds(&self.row_activity(i, x), &self.rhs[i]))
            .map(Some)
    }

    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        self.first_violation(x).is_none()
    }
}

/// Identity of a basis column, stable under appending structural columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnId {
    Structural(usize),
    /// Slack or surplus of the given row.
    Slack(usize),
    /// Phase-one artificial of the given row; only survives on redundant rows.
    Artificial(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Factor {
    basis: Vec<ColumnId>,
    binv: Vec<Vec<Rational>>,
    xb: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the structural columns (empty unless optimal).
    pub primal: Vec<Rational>,
    pub objective: Rational,
    /// `z = c_B B⁻¹`, one entry per original row in original sign convention.
    pub duals: Vec<Rational>,
    pub basis: Vec<ColumnId>,
    /// Integer `w` with `w'A ≥ 0`, `w'b < 0` and sign-feasible for the row relations.
    pub farkas: Option<Vec<Rational>>,
    pub iterations: u64,
    factor: Option<Factor>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Reduced cost `c - z'a` of a prospective column.
    pub fn reduced_cost(&self, column: &[Rational], cost: &Rational) -> Rational {
        cost - self.duals.iter().zip(column).map(|(z, a)| z * a).sum::<Rational>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("simplex iteration budget of {0} exhausted")]
    IterationBudget(u64),
    #[error("merge requires an optimal solution with its basis factorization")]
    NotOptimal,
    #[error("problem dimensions are inconsistent: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Default)]
pub struct LpConfig {
    /// Maximum pivots per solve; `None` is unlimited.
    pub max_iterations: Option<u64>,
}

pub fn solve_lp(p: &LpProblem, warm_basis: Option<&[ColumnId]>) -> Result<LpSolution, LpError> {
    solve_lp_with(p, warm_basis, &LpConfig::default())
}

pub fn solve_lp_with(
    p: &LpProblem,
    warm_basis: Option<&[ColumnId]>,
    config: &LpConfig,
) -> Result<LpSolution, LpError> {
    check_shape(p)?;
    let mut t = Tableau::new(p, config.max_iterations);
    let warm = warm_basis.and_then(|b| t.install(b).then_some(()));
    if warm.is_none() {
        t.cold_start();
        if t.has_basic_artificial() {
            t.run(Phase::One)?;
            let infeasibility: Rational = (0..t.m)
                .filter(|&r| t.is_artificial(t.basis[r]))
                .map(|r| t.xb[r].clone())
                .sum();
            if infeasibility.is_positive() {
                return Ok(t.infeasible());
            }
        }
    }
    t.drive_out_artificials();
    let status = t.run(Phase::Two)?;
    Ok(t.finish(status))
}

/// Appends `column` to `p` and pivots it into the optimal basis of `sol` when
/// its reduced cost is negative, then re-optimizes from there. The leaving
/// column is chosen by the ratio test with Bland's tie-break, so every step
/// stays primal feasible and the objective does not increase. The one pivot
/// alone can leave other nonbasic columns or slacks with negative reduced
/// costs, and then the duals would not price new columns correctly.
pub fn merge_column(
    p: &mut LpProblem,
    sol: &LpSolution,
    column: Vec<Rational>,
    cost: Rational,
) -> Result<LpSolution, LpError> {
    let factor = match (&sol.status, &sol.factor) {
        (LpStatus::Optimal, Some(f)) => f.clone(),
        _ => return Err(LpError::NotOptimal),
    };
    let j = p.add_column(column, cost);
    let mut t = Tableau::new(p, None);
    t.iterations = sol.iterations;
    t.basis = factor.basis.iter().map(|&id| t.index_of(id)).collect();
    t.binv = factor.binv;
    t.xb = factor.xb;
    let y = t.simplex_multipliers(Phase::Two);
    let d = t.reduced_cost(j, &y, Phase::Two);
    if d.is_negative() {
        let alpha = t.ftran(j);
        match t.ratio_test(&alpha) {
            Some(r) => {
                t.pivot(r, j, &alpha);
                t.iterations += 1;
            }
            None => return Ok(t.finish(LpStatus::Unbounded)),
        }
    }
    let status = t.run(Phase::Two)?;
    Ok(t.finish(status))
}

pub fn farkas_certificate(sol: &LpSolution) -> Option<&[Rational]> {
    sol.farkas.as_deref()
}

/// Checks that `w` proves `p` infeasible.
pub fn verify_farkas(p: &LpProblem, w: &[Rational]) -> bool {
    if w.len() != p.num_rows() {
        return false;
    }
    let signs_ok = p.relations.iter().zip(w).all(|(rel, wi)| match rel {
        Relation::Le => !wi.is_negative(),
        Relation::Ge => !wi.is_positive(),
        Relation::Eq => true,
    });
    let columns_ok = p
        .columns
        .iter()
        .all(|col| !col.iter().zip(w).map(|(a, wi)| a * wi).sum::<Rational>().is_negative());
    let rhs: Rational = p.rhs.iter().zip(w).map(|(b, wi)| b * wi).sum();
    signs_ok && columns_ok && rhs.is_negative()
}

fn check_shape(p: &LpProblem) -> Result<(), LpError> {
    let m = p.num_rows();
    if p.relations.len() != m || p.costs.len() != p.columns.len() {
        return Err(LpError::Malformed("relations/costs length mismatch".into()));
    }
    if let Some(j) = p.columns.iter().position(|c| c.len() != m) {
        return Err(LpError::Malformed(format!("column {j} has wrong height")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Working state. Global column indices: `0..n` structural, `n + i` slack of
/// row `i`, `n + m + i` artificial of row `i`. Rows are sign-normalized so
/// that every right-hand side is non-negative.
struct Tableau<'a> {
    p: &'a LpProblem,
    n: usize,
    m: usize,
    negated: Vec<bool>,
    rel: Vec<Relation>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    binv: Vec<Vec<Rational>>,
    xb: Vec<Rational>,
    iterations: u64,
    budget: Option<u64>,
}

impl<'a> Tableau<'a> {
    fn new(p: &'a LpProblem, budget: Option<u64>) -> Self {
        let m = p.num_rows();
        let negated: Vec<bool> = p.rhs.iter().map(|b| b.is_negative()).collect();
        let rel = p
            .relations
            .iter()
            .zip(&negated)
            .map(|(r, &neg)| if neg { r.flipped() } else { *r })
            .collect();
        let b = p.rhs.iter().map(|b| b.abs()).collect();
        Tableau {
            p,
            n: p.num_columns(),
            m,
            negated,
            rel,
            b,
            basis: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            iterations: 0,
            budget,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.n + self.m
    }

    fn has_slack(&self, row: usize) -> bool {
        self.rel[row] != Relation::Eq
    }

    fn index_of(&self, id: ColumnId) -> usize {
        match id {
            ColumnId::Structural(j) => j,
            ColumnId::Slack(i) => self.n + i,
            ColumnId::Artificial(i) => self.n + self.m + i,
        }
    }

    fn id_of(&self, j: usize) -> ColumnId {
        if j < self.n {
            ColumnId::Structural(j)
        } else if j < self.n + self.m {
            ColumnId::Slack(j - self.n)
        } else {
            ColumnId::Artificial(j - self.n - self.m)
        }
    }

    /// Normalized column `j` as a sparse list.
    fn column(&self, j: usize) -> Vec<(usize, Rational)> {
        if j < self.n {
            self.p.columns[j]
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(i, a)| (i, if self.negated[i] { -a } else { a.clone() }))
                .collect()
        } else if j < self.n + self.m {
            let i = j - self.n;
            let v = if self.rel[i] == Relation::Le { Rational::one() } else { -Rational::one() };
            vec![(i, v)]
        } else {
            vec![(j - self.n - self.m, Rational::one())]
        }
    }

    fn cost(&self, j: usize, phase: Phase) -> Rational {
        match phase {
            Phase::One => {
                if self.is_artificial(j) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            Phase::Two => {
                if j < self.n {
                    self.p.costs[j].clone()
                } else {
                    Rational::zero()
                }
            }
        }
    }

    fn cold_start(&mut self) {
        let m = self.m;
        self.basis = (0..m)
            .map(|i| if self.rel[i] == Relation::Le { self.n + i } else { self.n + m + i })
            .collect();
        self.binv = identity(m);
        self.xb = self.b.clone();
    }

    fn has_basic_artificial(&self) -> bool {
        self.basis.iter().any(|&j| self.is_artificial(j))
    }

    /// Installs a caller-provided basis; false when it is unusable.
    fn install(&mut self, ids: &[ColumnId]) -> bool {
        if ids.len() != self.m {
            return false;
        }
        let mut basis = Vec::with_capacity(self.m);
        for &id in ids {
            let ok = match id {
                ColumnId::Structural(j) => j < self.n,
                ColumnId::Slack(i) => i < self.m && self.has_slack(i),
                ColumnId::Artificial(i) => i < self.m,
            };
            let j = self.index_of(id);
            if !ok || basis.contains(&j) {
                return false;
            }
            basis.push(j);
        }
        let mut mat = vec![vec![Rational::zero(); self.m]; self.m];
        for (c, &j) in basis.iter().enumerate() {
            for (i, a) in self.column(j) {
                mat[i][c] = a;
            }
        }
        let Some(binv) = invert(mat) else { return false };
        let xb: Vec<Rational> = binv.iter().map(|row| dot(row, &self.b)).collect();
        let feasible = xb.iter().zip(&basis).all(|(x, &j)| {
            !x.is_negative() && !(self.is_artificial(j) && x.is_positive())
        });
        if !feasible {
            return false;
        }
        self.basis = basis;
        self.binv = binv;
        self.xb = xb;
        true
    }

    fn ftran(&self, j: usize) -> Vec<Rational> {
        let col = self.column(j);
        self.binv
            .iter()
            .map(|row| col.iter().map(|(i, a)| &row[*i] * a).sum())
            .collect()
    }

    fn simplex_multipliers(&self, phase: Phase) -> Vec<Rational> {
        let cb: Vec<Rational> = self.basis.iter().map(|&j| self.cost(j, phase)).collect();
        (0..self.m)
            .map(|k| {
                cb.iter()
                    .zip(&self.binv)
                    .filter(|(c, _)| !c.is_zero())
                    .map(|(c, row)| c * &row[k])
                    .sum()
            })
            .collect()
    }

    fn reduced_cost(&self, j: usize, y: &[Rational], phase: Phase) -> Rational {
        let za: Rational = self.column(j).iter().map(|(i, a)| &y[*i] * a).sum();
        self.cost(j, phase) - za
    }

    /// Leaving row by minimum ratio, ties to the lowest global index.
    fn ratio_test(&self, alpha: &[Rational]) -> Option<usize> {
        let mut best: Option<(usize, Rational)> = None;
        for (r, a) in alpha.iter().enumerate() {
            if !a.is_positive() {
                continue;
            }
            let ratio = &self.xb[r] / a;
            let better = match &best {
                None => true,
                Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
            };
            if better {
                best = Some((r, ratio));
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, r: usize, j: usize, alpha: &[Rational]) {
        let piv = alpha[r].clone();
        for v in &mut self.binv[r] {
            *v /= &piv;
        }
        self.xb[r] /= &piv;
        let pivot_row = self.binv[r].clone();
        let pivot_x = self.xb[r].clone();
        for (i, a) in alpha.iter().enumerate() {
            if i == r || a.is_zero() {
                continue;
            }
            for (v, pr) in self.binv[i].iter_mut().zip(&pivot_row) {
                if !pr.is_zero() {
                    *v -= a * pr;
                }
            }
            self.xb[i] -= a * &pivot_x;
        }
        self.basis[r] = j;
    }

    fn count_iteration(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        match self.budget {
            Some(b) if self.iterations > b => Err(LpError::IterationBudget(b)),
            _ => Ok(()),
        }
    }

    /// Simplex iterations with Bland's rule. Artificials never enter.
    fn run(&mut self, phase: Phase) -> Result<LpStatus, LpError> {
        loop {
            let y = self.simplex_multipliers(phase);
            let entering = (0..self.n + self.m)
                .filter(|&j| j < self.n || self.has_slack(j - self.n))
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.reduced_cost(j, &y, phase).is_negative());
            let Some(j) = entering else { return Ok(LpStatus::Optimal) };
            let alpha = self.ftran(j);
            let Some(r) = self.ratio_test(&alpha) else { return Ok(LpStatus::Unbounded) };
            log::trace!("pivot {:?} in for {:?} (row {r})", self.id_of(j), self.id_of(self.basis[r]));
            self.count_iteration()?;
            self.pivot(r, j, &alpha);
        }
    }

    /// Replaces zero-valued basic artificials by real columns where possible.
    /// Those that remain sit on redundant rows.
    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let candidate = (0..self.n + self.m)
                .filter(|&j| j < self.n || self.has_slack(j - self.n))
                .filter(|j| !self.basis.contains(j))
                .find(|&j| {
                    let entry: Rational = self.column(j).iter().map(|(i, a)| &self.binv[r][*i] * a).sum();
                    !entry.is_zero()
                });
            if let Some(j) = candidate {
                let alpha = self.ftran(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    fn infeasible(&self) -> LpSolution {
        let y = self.simplex_multipliers(Phase::One);
        let w: Vec<Rational> = y
            .iter()
            .zip(&self.negated)
            .map(|(v, &neg)| if neg { v.clone() } else { -v })
            .collect();
        let w: Vec<Rational> = primitive_integer_vector(&w).into_iter().map(Rational::from_integer).collect();
        debug_assert!(verify_farkas(self.p, &w), "phase-one duals must certify infeasibility");
        LpSolution {
            status: LpStatus::Infeasible,
            primal: Vec::new(),
            objective: Rational::zero(),
            duals: Vec::new(),
            basis: self.basis.iter().map(|&j| self.id_of(j)).collect(),
            farkas: Some(w),
            iterations: self.iterations,
            factor: None,
        }
    }

    fn finish(&self, status: LpStatus) -> LpSolution {
        let basis: Vec<ColumnId> = self.basis.iter().map(|&j| self.id_of(j)).collect();
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                primal: Vec::new(),
                objective: Rational::zero(),
                duals: Vec::new(),
                basis,
                farkas: None,
                iterations: self.iterations,
                factor: None,
            };
        }
        let mut primal = vec![Rational::zero(); self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                primal[j] = self.xb[r].clone();
            }
        }
        let y = self.simplex_multipliers(Phase::Two);
        let duals = y
            .into_iter()
            .zip(&self.negated)
            .map(|(v, &neg)| if neg { -v } else { v })
            .collect();
        LpSolution {
            status,
            objective: self.p.objective(&primal),
            primal,
            duals,
            basis: basis.clone(),
            farkas: None,
            iterations: self.iterations,
            factor: Some(Factor { basis, binv: self.binv.clone(), xb: self.xb.clone() }),
        }
    }
}

fn identity(m: usize) -> Vec<Vec<Rational>> {
    (0..m)
        .map(|i| (0..m).map(|k| if i == k { Rational::one() } else { Rational::zero() }).collect())
        .collect()
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).filter(|(x, _)| !x.is_zero()).map(|(x, y)| x * y).sum()
}

/// Gauss-Jordan inverse; `None` when singular.
fn invert(mut a: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let m = a.len();
    let mut inv = identity(m);
    for c in 0..m {
        let p = (c..m).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        inv.swap(c, p);
        let piv = a[c][c].clone();
        for k in 0..m {
            a[c][k] /= &piv;
            inv[c][k] /= &piv;
        }
        for r in 0..m {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for k in 0..m {
                let (ack, ick) = (a[c][k].clone(), inv[c][k].clone());
                a[r][k] -= &f * ack;
                inv[r][k] -= &f * ick;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use rand::{Rng, SeedableRng};

    fn lp(rows: &[(Vec<i64>, Relation, Rational)], costs: &[i64]) -> LpProblem {
        let mut p = LpProblem::new(rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2.clone()).collect());
        for (j, &c) in costs.iter().enumerate() {
            p.add_column(rows.iter().map(|r| int(r.0[j])).collect(), int(c));
        }
        p
    }

    #[test]
    fn single_equality() {
        let p = lp(&[(vec![1], Relation::Eq, int(1))], &[0]);
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.primal, vec![int(1)]);
    }

    #[test]
    fn lower_bound_has_unit_dual() {
        let p = lp(&[(vec![1], Relation::Ge, int(2))], &[1]);
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.objective, int(2));
        assert_eq!(s.duals, vec![int(1)]);
    }

    #[test]
    fn ant_colony_distribution() {
        // rows: Σπ, x1, x2, x1 ∨ x2 over valuations 00, 10, 01, 11
        let p = lp(
            &[
                (vec![1, 1, 1, 1], Relation::Eq, int(1)),
                (vec![0, 1, 0, 1], Relation::Eq, ratio(1, 10)),
                (vec![0, 0, 1, 1], Relation::Eq, ratio(3, 4)),
                (vec![0, 1, 1, 1], Relation::Eq, ratio(4, 5)),
            ],
            &[0, 0, 0, 0],
        );
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.primal, vec![ratio(1, 5), ratio(1, 20), ratio(7, 10), ratio(1, 20)]);
        assert!(p.is_feasible_point(&s.primal));
    }

    #[test]
    fn contradictory_equalities_certificate() {
        let p = lp(&[(vec![1], Relation::Eq, int(1)), (vec![1], Relation::Eq, int(2))], &[0]);
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert_eq!(farkas_certificate(&s).unwrap(), &[int(1), int(-1)]);
        let feasible = solve_lp(&lp(&[(vec![1], Relation::Eq, int(1))], &[0]), None).unwrap();
        assert_eq!(farkas_certificate(&feasible), None);
    }

    #[test]
    fn unbounded_is_reported() {
        let p = lp(&[(vec![1, -1], Relation::Eq, int(0))], &[-1, 0]);
        assert_eq!(solve_lp(&p, None).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        let p = lp(
            &[
                (vec![-1, -1], Relation::Le, int(-2)),
                (vec![1, 1], Relation::Eq, int(3)),
                (vec![2, 2], Relation::Eq, int(6)),
            ],
            &[1, 2],
        );
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.primal, vec![int(3), int(0)]);
        assert!(p.is_feasible_point(&s.primal));
        let zb: Rational = s.duals.iter().zip(&p.rhs).map(|(z, b)| z * b).sum();
        assert_eq!(zb, s.objective);
    }

    #[test]
    fn warm_start_reuses_basis() {
        let p = lp(
            &[(vec![1, 1, 1], Relation::Eq, int(1)), (vec![1, 0, 2], Relation::Ge, ratio(1, 2))],
            &[1, 1, 0],
        );
        let cold = solve_lp(&p, None).unwrap();
        let warm = solve_lp(&p, Some(&cold.basis)).unwrap();
        assert_eq!(warm.iterations, 0);
        assert_eq!(warm.objective, cold.objective);
        // an infeasible warm basis falls back to a cold start
        let bad = [ColumnId::Structural(0), ColumnId::Slack(1)];
        let s = solve_lp(&p, Some(&bad)).unwrap();
        assert_eq!(s.objective, cold.objective);
    }

    #[test]
    fn iteration_budget() {
        let p = lp(
            &[(vec![1, 1, 1], Relation::Eq, int(1)), (vec![1, 0, 2], Relation::Ge, ratio(1, 2))],
            &[1, 1, 0],
        );
        let cfg = LpConfig { max_iterations: Some(0) };
        assert_eq!(solve_lp_with(&p, None, &cfg), Err(LpError::IterationBudget(0)));
    }

    #[test]
    fn merge_duplicate_basis_column_keeps_objective() {
        let mut p = lp(&[(vec![1, 1], Relation::Eq, int(1)), (vec![1, 0], Relation::Eq, ratio(1, 3))], &[1, 0]);
        let s = solve_lp(&p, None).unwrap();
        let m = merge_column(&mut p, &s, vec![int(1), int(1)], int(1)).unwrap();
        assert_eq!(m.objective, s.objective);
    }

    #[test]
    fn merge_cheaper_column_strictly_improves() {
        let mut p = lp(&[(vec![1, 1], Relation::Eq, int(1)), (vec![1, 0], Relation::Eq, ratio(1, 2))], &[1, 1]);
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.objective, int(1));
        let m = merge_column(&mut p, &s, vec![int(1), ratio(1, 2)], int(0)).unwrap();
        assert_eq!(m.objective, int(0));
        let fresh = solve_lp(&p, None).unwrap();
        assert_eq!(m.objective, fresh.objective);
        assert!(p.is_feasible_point(&m.primal));
    }

    #[test]
    fn merge_reoptimizes_after_the_pivot() {
        // x1 ≥ 4, x2 ≥ 3, x3 ≥ 2 with unit columns of cost 1; the new
        // column covers rows 2 and 3 for free
        let mut p = lp(
            &[
                (vec![1, 0, 0], Relation::Ge, int(4)),
                (vec![0, 1, 0], Relation::Ge, int(3)),
                (vec![0, 0, 1], Relation::Ge, int(2)),
            ],
            &[1, 1, 1],
        );
        let s = solve_lp(&p, None).unwrap();
        assert_eq!(s.objective, int(9));
        let m = merge_column(&mut p, &s, vec![int(0), int(1), int(1)], int(0)).unwrap();
        assert_eq!(m.objective, int(4));
        assert!(m.duals.iter().all(|z| !z.is_negative()), "duals of ≥ rows in a minimization");
        assert_eq!(m.objective, solve_lp(&p, None).unwrap().objective);
    }

    #[test]
    fn merge_matches_fresh_solve_on_random_systems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let m = 5;
            let mut p = LpProblem::new(vec![Relation::Eq; m], vec![Rational::zero(); m]);
            let x0: Vec<Rational> = (0..m).map(|_| ratio(rng.gen_range(1..6), rng.gen_range(1..4))).collect();
            for _ in 0..m {
                let col: Vec<Rational> = (0..m).map(|_| int(rng.gen_range(-3..=5))).collect();
                p.add_column(col, int(rng.gen_range(0..=4)));
            }
            for i in 0..m {
                p.rhs[i] = p.row_activity(i, &x0);
            }
            let s = solve_lp(&p, None).unwrap();
            if s.status != LpStatus::Optimal || s.basis.iter().any(|c| !matches!(c, ColumnId::Structural(_))) {
                continue;
            }
            let y: Vec<Rational> = (0..m).map(|_| int(rng.gen_range(-3..=5))).collect();
            let merged = merge_column(&mut p, &s, y, int(rng.gen_range(-2..=3))).unwrap();
            let fresh = solve_lp(&p, None).unwrap();
            assert_eq!(merged.status, fresh.status);
            if fresh.is_optimal() {
                assert_eq!(merged.objective, fresh.objective);
                assert!(p.is_feasible_point(&merged.primal));
                assert!(merged.objective <= s.objective);
            }
            checked += 1;
        }
    }

    #[test]
    fn random_problems_are_exact_and_bounded_in_pivots() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=4);
            let rels = [Relation::Le, Relation::Ge, Relation::Eq];
            let mut p = LpProblem::new(
                (0..m).map(|_| rels[rng.gen_range(0..3)]).collect(),
                (0..m).map(|_| int(rng.gen_range(-3..=3))).collect(),
            );
            for _ in 0..n {
                p.add_column((0..m).map(|_| int(rng.gen_range(-2..=2))).collect(), int(rng.gen_range(0..=3)));
            }
            let s = solve_lp(&p, None).unwrap();
            let total = n + 2 * m;
            assert!(s.iterations <= binomial(total, m) * 2, "{} pivots", s.iterations);
            match s.status {
                LpStatus::Optimal => {
                    assert!(p.is_feasible_point(&s.primal));
                    // weak duality gap closes at the optimum
                    let zb: Rational = s.duals.iter().zip(&p.rhs).map(|(z, b)| z * b).sum();
                    assert_eq!(zb, s.objective);
                }
                LpStatus::Infeasible => assert!(verify_farkas(&p, s.farkas.as_ref().unwrap())),
                LpStatus::Unbounded => {}
            }
        }
    }

    fn binomial(n: usize, k: usize) -> u64 {
        (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
    }
}
