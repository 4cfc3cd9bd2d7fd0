//! Branch-and-bound for integer linear programs (maximisation).
//!
//! Nodes are explored depth first, into the child holding the rounded LP
//! value, until an incumbent exists; from then on the open node with the
//! best bound is taken next.
//! Branching picks the most fractional integer variable (lowest index on
//! ties). The search stops once the relative gap between incumbent and best
//! bound reaches the requested tolerance, or a node/time limit hits.
//!
//! When every objective coefficient on an integer variable is rational, all
//! integer solutions lie on a lattice of step `gcd(coefficients)`, so node
//! bounds are rounded down to that lattice before pruning. This is what lets
//! a zero-gap solve prove exact optimality with a floating-point LP.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use log::{debug, warn};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::lp::{Basis, LpProblem, LpStatus, Relation, Simplex, StandardForm};
use crate::rational::{from_f64, to_f64, Rational};

pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MipProblem {
    pub lp: LpProblem,
    pub integer: Vec<bool>,
    /// Branching classes: a fractional variable of a higher class is always
    /// branched on before any of a lower class. Empty means one class.
    pub priority: Vec<u32>,
}

impl MipProblem {
    pub fn new(lp: LpProblem, integer: Vec<bool>) -> Self {
        MipProblem {
            lp,
            integer,
            priority: Vec::new(),
        }
    }

    pub fn all_integer(lp: LpProblem) -> Self {
        let integer = vec![true; lp.num_vars()];
        MipProblem::new(lp, integer)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipParams {
    pub relative_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for MipParams {
    fn default() -> Self {
        MipParams {
            relative_gap: 0.001,
            node_limit: None,
            time_limit: None,
        }
    }
}

impl MipParams {
    pub fn exact() -> Self {
        MipParams {
            relative_gap: 0.0,
            ..MipParams::default()
        }
    }

    pub fn with_gap(relative_gap: f64) -> Self {
        MipParams {
            relative_gap,
            ..MipParams::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MipStatus {
    OptimalWithinGap,
    NodeLimit,
    TimeLimit,
    Infeasible,
}

impl MipStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            MipStatus::OptimalWithinGap => "optimal_within_gap",
            MipStatus::NodeLimit => "node_limit",
            MipStatus::TimeLimit => "time_limit",
            MipStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MipResult {
    pub status: MipStatus,
    /// Incumbent values; integer variables are exactly integral.
    pub values: Option<Vec<f64>>,
    /// Exact objective of the incumbent (the lower bound).
    pub objective: Option<Rational>,
    /// Best proven upper bound on the optimum.
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: u64,
    pub branches: u64,
}

impl MipResult {
    pub fn has_incumbent(&self) -> bool {
        self.values.is_some()
    }
}

/// `(UB - LB) / max(|LB|, 1e-10)`, or infinity without an incumbent.
pub fn relative_gap(lower: Option<f64>, upper: f64) -> f64 {
    match lower {
        None => f64::INFINITY,
        Some(lb) => (upper - lb).max(0.0) / lb.abs().max(1e-10),
    }
}

/// A node of the search as seen by a [`NodeHook`]: LP solution and the
/// variable bounds in force.
pub struct NodeView<'n> {
    pub values: &'n [f64],
    pub lower: &'n [f64],
    pub upper: &'n [f64],
}

/// Outcome of solving a subtree directly.
#[derive(Clone, Debug, PartialEq)]
pub enum Closure {
    /// Best solution of the subtree.
    Solved(Vec<f64>),
    /// The subtree holds no feasible point.
    Empty,
}

/// Problem-specific help for the search. Every proposed vector is checked
/// for integrality and feasibility before it is used.
pub trait NodeHook {
    /// Solves the whole subtree below a node, when the hook can.
    fn close(&mut self, _node: &NodeView<'_>) -> Option<Closure> {
        None
    }

    /// Candidate solutions, tried at fractional nodes.
    fn propose(&mut self, _node: &NodeView<'_>) -> Vec<Vec<f64>> {
        Vec::new()
    }

    /// Overrides the branching choice with `(var, split)`; the children get
    /// `x <= floor(split)` and `x >= floor(split) + 1`.
    fn branch(&mut self, _node: &NodeView<'_>) -> Option<(usize, f64)> {
        None
    }
}

pub fn solve_mip(problem: &MipProblem, params: &MipParams) -> Result<MipResult> {
    solve_mip_with(problem, params, None, None)
}

/// Like [`solve_mip`], seeded with a known feasible solution.
pub fn solve_mip_from(problem: &MipProblem, params: &MipParams, start: Option<&[f64]>) -> Result<MipResult> {
    solve_mip_with(problem, params, start, None)
}

/// Full entry point: optional start solution and node hook.
pub fn solve_mip_with(
    problem: &MipProblem,
    params: &MipParams,
    start: Option<&[f64]>,
    hook: Option<&mut dyn NodeHook>,
) -> Result<MipResult> {
    if problem.integer.len() != problem.lp.num_vars() {
        return Err(Error::Dimension(format!(
            "{} integrality flags for {} variables",
            problem.integer.len(),
            problem.lp.num_vars()
        )));
    }
    if !problem.priority.is_empty() && problem.priority.len() != problem.lp.num_vars() {
        return Err(Error::Dimension(format!(
            "{} branching priorities for {} variables",
            problem.priority.len(),
            problem.lp.num_vars()
        )));
    }
    if params.relative_gap.is_nan() || params.relative_gap < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "relative gap {} must be nonnegative",
            params.relative_gap
        )));
    }
    let form = StandardForm::new(&problem.lp)?;
    let mut search = Search::new(problem, params, &form);
    if let Some(start) = start {
        search.offer(start);
    }
    search.run(hook)
}

/// Step of the objective lattice over integer points, if there is one.
pub fn objective_granularity(problem: &MipProblem) -> Option<Rational> {
    let mut lcm = BigInt::from(1);
    for (c, &int) in problem.lp.objective.iter().zip(&problem.integer) {
        if c.is_zero() {
            continue;
        }
        if !int {
            return None;
        }
        lcm = lcm.lcm(c.denom());
    }
    let mut g = BigInt::zero();
    for c in &problem.lp.objective {
        if c.is_zero() {
            continue;
        }
        let scaled = (c * Rational::from_integer(lcm.clone())).to_integer();
        g = g.gcd(&scaled.abs());
    }
    if g.is_zero() {
        None
    } else {
        Some(Rational::new(g, lcm))
    }
}

struct BoundChange {
    var: usize,
    lower: f64,
    upper: f64,
    parent: Option<Rc<BoundChange>>,
}

struct Node {
    id: u64,
    depth: u32,
    bound: f64,
    changes: Option<Rc<BoundChange>>,
    basis: Option<Rc<Basis>>,
    parent: Option<u64>,
}

struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .bound
            .total_cmp(&other.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

/// Coefficients, right-hand side, relation and tolerance scale of a row.
type FloatRow = (Vec<(usize, f64)>, f64, Relation, f64);

/// Float copy of the rows, bounds and costs for screening candidates.
struct FloatCheck {
    rows: Vec<FloatRow>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
}

impl FloatCheck {
    fn new(lp: &LpProblem) -> Self {
        let rows = lp
            .rows
            .iter()
            .map(|row| {
                let coeffs: Vec<(usize, f64)> = row.coeffs.iter().map(|(j, a)| (*j, to_f64(a))).collect();
                let scale = coeffs.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max).max(1e-300);
                (coeffs, to_f64(&row.rhs), row.relation, scale)
            })
            .collect();
        FloatCheck {
            rows,
            lower: lp.lower.iter().map(to_f64).collect(),
            upper: lp.upper.iter().map(|u| u.as_ref().map_or(f64::INFINITY, to_f64)).collect(),
            cost: lp.objective.iter().map(to_f64).collect(),
        }
    }

    /// Same measure as [`LpProblem::max_violation`].
    fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (coeffs, rhs, relation, scale) in &self.rows {
            let activity: f64 = coeffs.iter().map(|(j, a)| a * x[*j]).sum();
            let excess = match relation {
                Relation::Le => activity - rhs,
                Relation::Ge => rhs - activity,
                Relation::Eq => (activity - rhs).abs(),
            };
            worst = worst.max(excess / scale);
        }
        for ((v, lo), hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

struct Search<'a> {
    problem: &'a MipProblem,
    check: FloatCheck,
    params: &'a MipParams,
    simplex: Simplex<'a>,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    node_lower: Vec<f64>,
    node_upper: Vec<f64>,
    step: Option<f64>,
    incumbent: Option<(Vec<f64>, Rational, f64)>,
    stack: Vec<Node>,
    heap: BinaryHeap<Ranked>,
    next_id: u64,
    nodes: u64,
    branches: u64,
    live_node: Option<u64>,
    started: Instant,
}

enum NodeOutcome {
    Infeasible,
    Solved { bound: f64, values: Vec<f64> },
}

impl<'a> Search<'a> {
    fn new(problem: &'a MipProblem, params: &'a MipParams, form: &'a StandardForm) -> Self {
        let step = objective_granularity(problem).map(|g| to_f64(&g));
        Search {
            problem,
            check: FloatCheck::new(&problem.lp),
            params,
            simplex: Simplex::new(form),
            root_lower: form.lower.clone(),
            root_upper: form.upper.clone(),
            node_lower: form.lower.clone(),
            node_upper: form.upper.clone(),
            step,
            incumbent: None,
            stack: Vec::new(),
            heap: BinaryHeap::new(),
            next_id: 0,
            nodes: 0,
            branches: 0,
            live_node: None,
            started: Instant::now(),
        }
    }

    /// Rounds an LP bound down to the objective lattice.
    fn effective_bound(&self, bound: f64) -> f64 {
        match self.step {
            Some(step) if step > 0.0 => {
                let units = bound / step;
                let tol = 1e-6 + 1e-9 * units.abs();
                (units + tol).floor() * step
            }
            _ => bound,
        }
    }

    fn lower(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(_, _, lb)| *lb)
    }

    fn prunable(&self, bound: f64) -> bool {
        match self.lower() {
            None => false,
            Some(lb) => match self.step {
                Some(_) => bound <= lb + 1e-9 * lb.abs().max(1.0) * 1e-3,
                None => bound <= lb + 1e-9 * lb.abs().max(1.0),
            },
        }
    }

    /// Accepts `values` as incumbent if integral, feasible and improving.
    /// `None` when the vector is not a feasible integer point, otherwise
    /// whether it improved the incumbent.
    fn offer(&mut self, values: &[f64]) -> Option<bool> {
        let lp = &self.problem.lp;
        if values.len() != lp.num_vars() {
            warn!("ignoring candidate of wrong length");
            return None;
        }
        let mut rounded = values.to_vec();
        for (v, &int) in rounded.iter_mut().zip(&self.problem.integer) {
            if int {
                let r = v.round();
                if (*v - r).abs() > INTEGRALITY_TOL {
                    return None;
                }
                *v = r;
            }
        }
        if self.check.max_violation(&rounded) > crate::lp::FEASIBILITY_TOL {
            debug!("rounded candidate violates rows; discarded");
            return None;
        }
        if let Some(lb) = self.lower() {
            let estimate: f64 = self.check.cost.iter().zip(&rounded).map(|(c, v)| c * v).sum();
            if estimate < lb - 1e-6 * lb.abs().max(1.0) {
                return Some(false);
            }
        }
        let mut objective = Rational::zero();
        for (c, v) in lp.objective.iter().zip(&rounded) {
            if !c.is_zero() && *v != 0.0 {
                {
                    let v = from_f64(*v)?;
                    objective += c * v
                }
            }
        }
        let improves = match &self.incumbent {
            None => true,
            Some((_, best, _)) => objective > *best,
        };
        if improves {
            let lb = objective.to_f64().unwrap_or(f64::NEG_INFINITY);
            self.incumbent = Some((rounded, objective, lb));
        }
        Some(improves)
    }

    fn best_open_bound(&self) -> Option<f64> {
        let heap = self.heap.peek().map(|r| r.0.bound);
        let stack = self.stack.iter().map(|n| n.bound).fold(None, |acc: Option<f64>, b| {
            Some(acc.map_or(b, |a| a.max(b)))
        });
        match (heap, stack) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    fn push(&mut self, node: Node) {
        if self.incumbent.is_some() {
            self.heap.push(Ranked(node));
        } else {
            self.stack.push(node);
        }
    }

    fn pop(&mut self) -> Option<Node> {
        if self.incumbent.is_some() && !self.stack.is_empty() {
            for node in std::mem::take(&mut self.stack) {
                self.heap.push(Ranked(node));
            }
        }
        self.stack.pop().or_else(|| self.heap.pop().map(|r| r.0))
    }

    fn result(&self, status: MipStatus, best_bound: f64) -> MipResult {
        let (values, objective, gap, best_bound) = match &self.incumbent {
            Some((values, objective, lb)) => {
                let ub = best_bound.max(*lb);
                (Some(values.clone()), Some(objective.clone()), relative_gap(Some(*lb), ub), ub)
            }
            None => (None, None, f64::INFINITY, best_bound),
        };
        MipResult {
            status,
            values,
            objective,
            best_bound,
            gap,
            nodes: self.nodes,
            branches: self.branches,
        }
    }

    fn run(mut self, mut hook: Option<&mut dyn NodeHook>) -> Result<MipResult> {
        let root = Node {
            id: 0,
            depth: 0,
            bound: f64::INFINITY,
            changes: None,
            basis: None,
            parent: None,
        };
        self.next_id = 1;
        self.push(root);
        let mut root_bound = f64::INFINITY;
        loop {
            let open_bound = match self.best_open_bound() {
                None => {
                    return Ok(match self.incumbent {
                        Some((_, _, lb)) => self.result(MipStatus::OptimalWithinGap, lb),
                        None => self.result(MipStatus::Infeasible, f64::NEG_INFINITY),
                    });
                }
                Some(b) => b.min(root_bound),
            };
            if let Some(lb) = self.lower() {
                let ub = if self.prunable(open_bound) { lb } else { open_bound };
                if relative_gap(Some(lb), ub) <= self.params.relative_gap {
                    return Ok(self.result(MipStatus::OptimalWithinGap, ub));
                }
            }
            if let Some(limit) = self.params.node_limit {
                if self.nodes >= limit {
                    return Ok(self.result(MipStatus::NodeLimit, open_bound));
                }
            }
            if let Some(limit) = self.params.time_limit {
                if self.started.elapsed() >= limit {
                    return Ok(self.result(MipStatus::TimeLimit, open_bound));
                }
            }
            let node = self.pop().expect("open node exists");
            if self.prunable(node.bound) {
                continue;
            }
            self.nodes += 1;
            let outcome = self.solve_node(&node)?;
            let (bound, values) = match outcome {
                NodeOutcome::Infeasible => continue,
                NodeOutcome::Solved { bound, values } => (bound, values),
            };
            if node.id == 0 {
                root_bound = bound;
            }
            if self.prunable(bound) {
                continue;
            }
            if let Some(hook) = hook.as_deref_mut() {
                let view = NodeView {
                    values: &values,
                    lower: &self.node_lower,
                    upper: &self.node_upper,
                };
                match hook.close(&view) {
                    Some(Closure::Empty) => continue,
                    Some(Closure::Solved(best)) => {
                        if self.offer(&best).is_some() {
                            continue;
                        }
                        warn!("subtree solution at node {} rejected; branching instead", node.id);
                    }
                    None => {}
                }
            }
            match self.branching_variable(&values) {
                None => {
                    if self.offer(&values).is_none() {
                        warn!("integral LP solution at node {} rejected after rounding", node.id);
                    }
                }
                Some(fallback) => {
                    let mut choice = (fallback, values[fallback]);
                    if let Some(hook) = hook.as_deref_mut() {
                        let candidates = hook.propose(&NodeView {
                            values: &values,
                            lower: &self.node_lower,
                            upper: &self.node_upper,
                        });
                        for candidate in candidates {
                            self.offer(&candidate);
                        }
                        if self.prunable(bound) {
                            continue;
                        }
                        let view = NodeView {
                            values: &values,
                            lower: &self.node_lower,
                            upper: &self.node_upper,
                        };
                        if let Some((var, split)) = hook.branch(&view) {
                            let at = split.floor();
                            if var < values.len() && self.node_lower[var] <= at && at + 1.0 <= self.node_upper[var] {
                                choice = (var, split);
                            } else {
                                warn!("ignoring invalid branch on variable {var} at {split}");
                            }
                        }
                    }
                    let (var, split) = choice;
                    self.branches += 1;
                    let basis = Rc::new(self.simplex.snapshot());
                    let (lo, hi) = self.current_bounds(&node, var);
                    let down = Rc::new(BoundChange {
                        var,
                        lower: lo,
                        upper: split.floor(),
                        parent: node.changes.clone(),
                    });
                    let up = Rc::new(BoundChange {
                        var,
                        lower: split.floor() + 1.0,
                        upper: hi,
                        parent: node.changes.clone(),
                    });
                    let depth = node.depth + 1;
                    let up_node = Node {
                        id: self.next_id,
                        depth,
                        bound,
                        changes: Some(up),
                        basis: Some(basis.clone()),
                        parent: Some(node.id),
                    };
                    let down_node = Node {
                        id: self.next_id + 1,
                        depth,
                        bound,
                        changes: Some(down),
                        basis: Some(basis),
                        parent: Some(node.id),
                    };
                    self.next_id += 2;
                    if values[var].round() <= split.floor() {
                        self.push(up_node);
                        self.push(down_node);
                    } else {
                        self.push(down_node);
                        self.push(up_node);
                    }
                }
            }
        }
    }

    fn current_bounds(&self, node: &Node, var: usize) -> (f64, f64) {
        let mut link = node.changes.as_ref();
        while let Some(change) = link {
            if change.var == var {
                return (change.lower, change.upper);
            }
            link = change.parent.as_ref();
        }
        (self.root_lower[var], self.root_upper[var])
    }

    fn apply_bounds(&mut self, node: &Node) {
        let n = self.root_lower.len();
        let mut lower = self.root_lower.clone();
        let mut upper = self.root_upper.clone();
        let mut seen = vec![false; n];
        let mut link = node.changes.as_ref();
        while let Some(change) = link {
            if !seen[change.var] {
                seen[change.var] = true;
                lower[change.var] = change.lower;
                upper[change.var] = change.upper;
            }
            link = change.parent.as_ref();
        }
        for j in 0..n {
            self.simplex.set_bounds(j, lower[j], upper[j]);
        }
        self.node_lower = lower;
        self.node_upper = upper;
    }

    fn solve_node(&mut self, node: &Node) -> Result<NodeOutcome> {
        self.apply_bounds(node);
        let mut status = match (&node.basis, node.parent) {
            (None, _) => self.simplex.solve_cold(),
            (Some(_), Some(_)) if self.live_node.is_some() => self.simplex.resolve_warm(None),
            (Some(basis), _) => self.simplex.resolve_warm(Some(basis)),
        };
        if matches!(status, LpStatus::NumericalFailure | LpStatus::IterationLimit) && node.basis.is_some() {
            debug!("warm start failed at node {} ({status:?}); cold solve", node.id);
            status = self.simplex.solve_cold();
        }
        self.live_node = None;
        match status {
            LpStatus::Optimal => {
                self.live_node = Some(node.id);
                let values = self.simplex.values();
                let bound = self.effective_bound(self.simplex.objective());
                Ok(NodeOutcome::Solved { bound, values })
            }
            LpStatus::Infeasible => Ok(NodeOutcome::Infeasible),
            LpStatus::Unbounded => Err(Error::Solver(format!(
                "LP relaxation unbounded at node {}; every variable needs a finite upper bound",
                node.id
            ))),
            LpStatus::IterationLimit => Err(Error::Solver(format!("simplex iteration limit at node {}", node.id))),
            LpStatus::NumericalFailure => Err(Error::Solver(format!("numerical failure at node {}", node.id))),
        }
    }

    fn branching_variable(&self, values: &[f64]) -> Option<usize> {
        let priority = |j: usize| self.problem.priority.get(j).copied().unwrap_or(0);
        let mut best: Option<(usize, u32, f64)> = None;
        for (j, (&v, &int)) in values.iter().zip(&self.problem.integer).enumerate() {
            if !int {
                continue;
            }
            let frac = v - v.floor();
            let score = frac.min(1.0 - frac);
            if score <= INTEGRALITY_TOL {
                continue;
            }
            let class = priority(j);
            let better = match best {
                None => true,
                Some((_, c, s)) => class > c || (class == c && score > s),
            };
            if better {
                best = Some((j, class, score));
            }
        }
        best.map(|(j, _, _)| j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn knapsack(values: &[i64], weights: &[i64], capacity: i64, upper: i64) -> MipProblem {
        let mut lp = LpProblem::default();
        let vars: Vec<usize> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| lp.add_var(format!("x{j}"), ratio(v, 1), int(0), Some(ratio(upper, 1))))
            .collect();
        lp.add_row(
            "cap",
            vars.iter().zip(weights).map(|(&j, &w)| (j, ratio(w, 1))).collect(),
            Relation::Le,
            ratio(capacity, 1),
        );
        MipProblem::all_integer(lp)
    }

    fn brute_knapsack(values: &[i64], weights: &[i64], capacity: i64, upper: i64) -> i64 {
        let n = values.len();
        let mut best = 0;
        let mut counts = vec![0i64; n];
        loop {
            let w: i64 = counts.iter().zip(weights).map(|(c, w)| c * w).sum();
            if w <= capacity {
                best = best.max(counts.iter().zip(values).map(|(c, v)| c * v).sum());
            }
            let mut k = 0;
            while k < n && counts[k] == upper {
                counts[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
            counts[k] += 1;
        }
    }

    #[test]
    fn gap_formula() {
        assert_eq!(relative_gap(Some(100.0), 100.0), 0.0);
        assert_eq!(relative_gap(Some(100.0), 101.0), 0.01);
        assert_eq!(relative_gap(None, 5.0), f64::INFINITY);
    }

    #[test]
    fn integral_root_needs_no_branching() {
        let problem = knapsack(&[3, 2], &[1, 1], 4, 2);
        let result = solve_mip(&problem, &MipParams::exact()).unwrap();
        assert_eq!(result.status, MipStatus::OptimalWithinGap);
        assert_eq!(result.branches, 0);
        assert_eq!(result.objective, Some(int(10)));
    }

    #[test]
    fn small_knapsacks_match_enumeration() {
        let cases: &[(&[i64], &[i64], i64)] = &[
            (&[5, 4, 3], &[4, 3, 2], 7),
            (&[10, 7, 1, 3], &[6, 5, 1, 2], 11),
            (&[8, 8, 9], &[5, 5, 6], 16),
            (&[1, 1, 1], &[2, 2, 2], 1),
        ];
        for &(values, weights, capacity) in cases {
            let problem = knapsack(values, weights, capacity, 3);
            let result = solve_mip(&problem, &MipParams::exact()).unwrap();
            let expected = brute_knapsack(values, weights, capacity, 3);
            assert_eq!(result.objective, Some(int(expected as u64)), "{values:?} {weights:?} {capacity}");
            assert!(result.gap <= 1e-12);
        }
    }

    #[test]
    fn infeasible_root() {
        let mut problem = knapsack(&[1], &[1], 3, 5);
        problem.lp.add_row("low", vec![(0, int(1))], Relation::Ge, int(4));
        let result = solve_mip(&problem, &MipParams::exact()).unwrap();
        assert_eq!(result.status, MipStatus::Infeasible);
        assert!(!result.has_incumbent());
    }

    #[test]
    fn integer_infeasible_after_branching() {
        // 2x = 1 has no integer solution.
        let mut lp = LpProblem::default();
        lp.add_var("x", int(1), int(0), Some(int(3)));
        lp.add_row("half", vec![(0, int(2))], Relation::Eq, int(1));
        let result = solve_mip(&MipProblem::all_integer(lp), &MipParams::exact()).unwrap();
        assert_eq!(result.status, MipStatus::Infeasible);
        assert_eq!(result.branches, 1);
    }

    #[test]
    fn unbounded_root_is_rejected() {
        let mut lp = LpProblem::default();
        lp.add_var("x", int(1), int(0), None);
        assert!(matches!(
            solve_mip(&MipProblem::all_integer(lp), &MipParams::exact()),
            Err(Error::Solver(_))
        ));
    }

    #[test]
    fn node_limit_is_reported() {
        let problem = knapsack(&[10, 7, 1, 3, 9, 4], &[6, 5, 1, 2, 7, 3], 17, 3);
        let params = MipParams {
            relative_gap: 0.0,
            node_limit: Some(1),
            time_limit: None,
        };
        let result = solve_mip(&problem, &params).unwrap();
        assert!(matches!(result.status, MipStatus::NodeLimit | MipStatus::OptimalWithinGap));
        assert!(result.nodes <= 1);
    }

    #[test]
    fn granularity_of_rational_objectives() {
        let mut lp = LpProblem::default();
        lp.add_var("a", ratio(7, 10), int(0), Some(int(1)));
        lp.add_var("b", ratio(3, 5), int(0), Some(int(1)));
        lp.add_var("c", int(0), int(0), Some(int(1)));
        let problem = MipProblem::all_integer(lp);
        assert_eq!(objective_granularity(&problem), Some(ratio(1, 10)));
        let mut mixed = problem.clone();
        mixed.integer[0] = false;
        assert_eq!(objective_granularity(&mixed), None);
    }

    #[test]
    fn start_solution_is_used() {
        let problem = knapsack(&[5, 4, 3], &[4, 3, 2], 7, 3);
        let start = vec![0.0, 0.0, 1.0];
        let result = solve_mip_from(&problem, &MipParams::with_gap(10.0), Some(&start)).unwrap();
        assert!(result.has_incumbent());
        assert!(result.gap <= 10.0);
    }

    #[test]
    fn deterministic_node_counts() {
        let problem = knapsack(&[10, 7, 1, 3, 9, 4], &[6, 5, 1, 2, 7, 3], 17, 3);
        let a = solve_mip(&problem, &MipParams::exact()).unwrap();
        let b = solve_mip(&problem, &MipParams::exact()).unwrap();
        assert_eq!(a, b);
    }
}
