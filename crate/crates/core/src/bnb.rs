//! Branch-and-bound for integer feasibility over exact relaxations.
//!
//! The driver is generic over the relaxation so the counting solver can plug
//! in its column-generation relaxation while the Łukasiewicz encoder uses a
//! plain [`LpProblem`] with extra bound rows per node.

use num_traits::{One, Zero};

use crate::lp::{solve_lp_with, LpConfig, LpError, LpProblem, LpSolution, LpStatus, Relation};
use crate::rational::{ceil, floor, integrality_gap, Rational};

/// How ties between equally ranked open nodes are broken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Oldest node first.
    #[default]
    Fifo,
    /// Newest node first, which makes the search depth-first.
    Lifo,
}

#[derive(Debug, Clone, Default)]
pub struct BnbPolicy {
    pub tie_break: TieBreak,
    /// Maximum relaxations solved; `None` is unlimited.
    pub max_nodes: Option<u64>,
    pub lp: LpConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BnbOutcome<S> {
    Found(S),
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BnbResult<S> {
    pub outcome: BnbOutcome<S>,
    pub nodes: u64,
}

/// A family of relaxed subproblems that can be split on a fractional variable.
pub trait Relaxation {
    type Node;
    type Solution;
    type Error;

    /// `None` when the node's relaxation is infeasible or provably useless.
    fn solve(&mut self, node: &Self::Node) -> Result<Option<Self::Solution>, Self::Error>;

    /// Current values of the variables that must become integral.
    fn integral_values(&self, solution: &Self::Solution) -> Vec<Rational>;

    /// Children for `x_var ≤ ⌊value⌋` and `x_var ≥ ⌈value⌉`, in that order.
    fn branch(
        &mut self,
        node: &Self::Node,
        solution: &Self::Solution,
        var: usize,
        value: &Rational,
    ) -> Vec<Self::Node>;

    /// Nodes failing this test are never queued.
    fn admit(&self, _node: &Self::Node) -> bool {
        true
    }
}

/// Fractional variable whose value is nearest an integer; ties to the lowest index.
pub fn select_branch_variable(values: &[Rational]) -> Option<usize> {
    let mut best: Option<(usize, Rational)> = None;
    for (i, v) in values.iter().enumerate() {
        let gap = integrality_gap(v);
        if gap.is_zero() {
            continue;
        }
        if best.as_ref().map_or(true, |(_, g)| gap < *g) {
            best = Some((i, gap));
        }
    }
    best.map(|(i, _)| i)
}

struct Open<N> {
    priority: usize,
    seq: u64,
    node: N,
}

/// Searches for a relaxation solution whose designated values are all integral.
/// Open nodes are ranked by how many integral components their parent's
/// relaxed solution had.
pub fn branch_and_bound<R: Relaxation>(
    relaxation: &mut R,
    root: R::Node,
    policy: &BnbPolicy,
) -> Result<BnbResult<R::Solution>, R::Error> {
    let mut open = vec![Open { priority: 0, seq: 0, node: root }];
    let mut seq = 0u64;
    let mut nodes = 0u64;
    while !open.is_empty() {
        if policy.max_nodes.is_some_and(|max| nodes >= max) {
            return Ok(BnbResult { outcome: BnbOutcome::BudgetExhausted, nodes });
        }
        let pick = pick_node(&open, policy.tie_break);
        let Open { node, .. } = open.swap_remove(pick);
        nodes += 1;
        let Some(solution) = relaxation.solve(&node)? else { continue };
        let values = relaxation.integral_values(&solution);
        let Some(var) = select_branch_variable(&values) else {
            return Ok(BnbResult { outcome: BnbOutcome::Found(solution), nodes });
        };
        let integral = values.iter().filter(|v| v.is_integer()).count();
        log::debug!("node {nodes}: branching on {var} = {}", values[var]);
        for child in relaxation.branch(&node, &solution, var, &values[var]) {
            if !relaxation.admit(&child) {
                log::debug!("child of node {nodes} not admitted");
                continue;
            }
            seq += 1;
            open.push(Open { priority: integral, seq, node: child });
        }
    }
    Ok(BnbResult { outcome: BnbOutcome::Infeasible, nodes })
}

fn pick_node<N>(open: &[Open<N>], tie: TieBreak) -> usize {
    let key = |o: &Open<N>| match tie {
        TieBreak::Fifo => (o.priority, u64::MAX - o.seq),
        TieBreak::Lifo => (o.priority, o.seq),
    };
    (0..open.len()).max_by_key(|&i| key(&open[i])).expect("open set is non-empty")
}

/// Extra bound on one structural variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundRow {
    pub var: usize,
    pub relation: Relation,
    pub value: Rational,
}

/// LP relaxation where nodes are lists of bound rows added to a root problem.
/// With a threshold `t`, only points with objective `< t` count and subtrees
/// whose relaxed optimum is already `≥ t` are pruned.
pub struct LpRelaxation<'a> {
    pub root: &'a LpProblem,
    pub integral: &'a [usize],
    pub threshold: Option<Rational>,
    pub lp: LpConfig,
}

impl LpRelaxation<'_> {
    pub fn node_problem(&self, bounds: &[BoundRow]) -> LpProblem {
        let mut p = self.root.clone();
        let n = p.num_columns();
        for b in bounds {
            let mut row = vec![Rational::zero(); n];
            row[b.var] = Rational::one();
            p.add_row(&row, b.relation, b.value.clone());
        }
        p
    }
}

impl Relaxation for LpRelaxation<'_> {
    type Node = Vec<BoundRow>;
    type Solution = LpSolution;
    type Error = LpError;

    fn solve(&mut self, node: &Vec<BoundRow>) -> Result<Option<LpSolution>, LpError> {
        let p = self.node_problem(node);
        let sol = solve_lp_with(&p, None, &self.lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => {
                return Err(LpError::Malformed("branch-and-bound relaxation is unbounded".into()))
            }
        }
        if self.threshold.as_ref().is_some_and(|t| sol.objective >= *t) {
            return Ok(None);
        }
        Ok(Some(sol))
    }

    fn integral_values(&self, sol: &LpSolution) -> Vec<Rational> {
        self.integral.iter().map(|&j| sol.primal[j].clone()).collect()
    }

    fn branch(&mut self, node: &Vec<BoundRow>, _: &LpSolution, var: usize, value: &Rational) -> Vec<Vec<BoundRow>> {
        let var = self.integral[var];
        [(Relation::Le, floor(value)), (Relation::Ge, ceil(value))]
            .into_iter()
            .map(|(relation, v)| {
                let mut child = node.clone();
                child.push(BoundRow { var, relation, value: Rational::from_integer(v) });
                child
            })
            .collect()
    }
}

/// First solution of `root` that is integral on `integral`.
pub fn bnb_feasible(
    root: &LpProblem,
    integral: &[usize],
    policy: &BnbPolicy,
) -> Result<BnbResult<LpSolution>, LpError> {
    bnb_search(root, integral, policy, None)
}

/// Like [`bnb_feasible`] but only accepts points with objective strictly below `threshold`.
pub fn bnb_improving(
    root: &LpProblem,
    integral: &[usize],
    policy: &BnbPolicy,
    threshold: Rational,
) -> Result<BnbResult<LpSolution>, LpError> {
    bnb_search(root, integral, policy, Some(threshold))
}

fn bnb_search(
    root: &LpProblem,
    integral: &[usize],
    policy: &BnbPolicy,
    threshold: Option<Rational>,
) -> Result<BnbResult<LpSolution>, LpError> {
    let mut relaxation = LpRelaxation { root, integral, threshold, lp: policy.lp.clone() };
    let result = branch_and_bound(&mut relaxation, Vec::new(), policy)?;
    if let BnbOutcome::Found(sol) = &result.outcome {
        let x = &sol.primal[..root.num_columns()];
        assert!(root.is_feasible_point(x), "branch-and-bound point violates the root problem");
        assert!(integral.iter().all(|&j| x[j].is_integer()));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn bounded(lo: Rational, hi: Rational) -> LpProblem {
        let mut p = LpProblem::new(vec![Relation::Ge, Relation::Le], vec![lo, hi]);
        p.add_column(vec![int(1), int(1)], int(0));
        p
    }

    #[test]
    fn integral_root_returns_immediately() {
        let r = bnb_feasible(&bounded(int(1), int(1)), &[0], &BnbPolicy::default()).unwrap();
        assert_eq!(r.nodes, 1);
        assert!(matches!(r.outcome, BnbOutcome::Found(s) if s.primal == vec![int(1)]));
    }

    #[test]
    fn no_integer_in_interval() {
        let r = bnb_feasible(&bounded(ratio(3, 10), ratio(7, 10)), &[0], &BnbPolicy::default()).unwrap();
        assert_eq!(r.outcome, BnbOutcome::Infeasible);
        assert_eq!(r.nodes, 3);
    }

    #[test]
    fn counting_toy_system() {
        // x counts p-elements, y the rest: x ≥ 2, x ≤ 3, 2x + y ≥ 13/2
        let mut p = LpProblem::new(
            vec![Relation::Ge, Relation::Le, Relation::Ge, Relation::Le],
            vec![int(2), int(3), ratio(13, 2), int(4)],
        );
        p.add_column(vec![int(1), int(1), int(2), int(1)], int(0));
        p.add_column(vec![int(0), int(0), int(1), int(1)], int(0));
        let r = bnb_feasible(&p, &[0, 1], &BnbPolicy::default()).unwrap();
        let BnbOutcome::Found(s) = r.outcome else { panic!("expected a solution") };
        let oracle: Vec<(i64, i64)> = (0..=4)
            .flat_map(|x| (0..=4).map(move |y| (x, y)))
            .filter(|&(x, y)| (2..=3).contains(&x) && 4 * x + 2 * y >= 13 && x + y <= 4)
            .collect();
        let got = (s.primal[0].to_integer().try_into().unwrap(), s.primal[1].to_integer().try_into().unwrap());
        assert!(oracle.contains(&got), "{got:?} not in {oracle:?}");
        assert!(got.0 == 2 || got.0 == 3);
    }

    #[test]
    fn budget_is_distinct() {
        let policy = BnbPolicy { max_nodes: Some(1), ..Default::default() };
        let r = bnb_feasible(&bounded(ratio(3, 10), ratio(7, 10)), &[0], &policy).unwrap();
        assert_eq!(r.outcome, BnbOutcome::BudgetExhausted);
    }

    #[test]
    fn improving_threshold_is_strict() {
        // min -x  s.t. x ≤ 5/2, integral: best is x = 2 with objective -2
        let mut p = LpProblem::new(vec![Relation::Le], vec![ratio(5, 2)]);
        p.add_column(vec![int(1)], int(-1));
        let policy = BnbPolicy::default();
        let r = bnb_improving(&p, &[0], &policy, int(-1)).unwrap();
        assert!(matches!(r.outcome, BnbOutcome::Found(ref s) if s.objective < int(-1)));
        let r = bnb_improving(&p, &[0], &policy, int(-2)).unwrap();
        assert_eq!(r.outcome, BnbOutcome::Infeasible);
    }

    #[test]
    fn branch_variable_prefers_nearly_integral() {
        let v = [ratio(1, 2), int(3), ratio(9, 10), ratio(1, 10)];
        assert_eq!(select_branch_variable(&v), Some(2));
        assert_eq!(select_branch_variable(&[int(0), int(1)]), None);
    }
}
