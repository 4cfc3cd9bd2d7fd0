//! Linear programs with bounded variables.
//!
//! The solver is a revised simplex on the bounded-variable standard form with
//! an explicit dense basis inverse. Cold solves run the two-phase primal
//! method (artificial columns for rows the starting slack basis cannot
//! satisfy). Branch-and-bound re-solves start from the parent's optimal basis
//! and run the dual simplex, falling back to a cold solve when that fails.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const BLAND_AFTER: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `maximize objective . x` subject to the rows and `lower <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LpProblem {
    pub var_names: Vec<String>,
    pub objective: Vec<Rational>,
    pub rows: Vec<Row>,
    pub lower: Vec<Rational>,
    /// `None` is an infinite upper bound.
    pub upper: Vec<Option<Rational>>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        objective: Rational,
        lower: Rational,
        upper: Option<Rational>,
    ) -> usize {
        self.var_names.push(name.into());
        self.objective.push(objective);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn check(&self) -> Result<()> {
        let n = self.objective.len();
        if self.var_names.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension(format!(
                "{} objective coefficients, {} names, {} lower and {} upper bounds",
                n,
                self.var_names.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        for (j, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if let Some(hi) = hi {
                if lo > hi {
                    return Err(Error::InvalidArgument(format!(
                        "variable {} has lower bound {lo} above upper bound {hi}",
                        self.var_names[j]
                    )));
                }
            }
        }
        for row in &self.rows {
            if let Some((j, _)) = row.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(Error::Dimension(format!(
                    "row {} references variable {j} of {n}",
                    row.name
                )));
            }
        }
        Ok(())
    }

    /// Largest violation of rows and bounds by `x`, after scaling each row by
    /// its largest coefficient magnitude.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let scale = row
                .coeffs
                .iter()
                .map(|(_, a)| to_f64(a).abs())
                .fold(0.0, f64::max)
                .max(1e-300);
            let activity: f64 = row.coeffs.iter().map(|(j, a)| to_f64(a) * x[*j]).sum();
            let rhs = to_f64(&row.rhs);
            let excess = match row.relation {
                Relation::Le => activity - rhs,
                Relation::Ge => rhs - activity,
                Relation::Eq => (activity - rhs).abs(),
            };
            worst = worst.max(excess / scale);
        }
        for (j, value) in x.iter().enumerate() {
            worst = worst.max(to_f64(&self.lower[j]) - value);
            if let Some(hi) = &self.upper[j] {
                worst = worst.max(value - to_f64(hi));
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome> {
    let form = StandardForm::new(problem)?;
    let mut simplex = Simplex::new(&form);
    let status = simplex.solve_cold();
    Ok(LpOutcome {
        status,
        values: simplex.values(),
        objective: simplex.objective(),
        iterations: simplex.iterations,
    })
}

/// Float copy of a problem with every row turned into `<=` or `=` and scaled
/// by a power of two so its largest coefficient lies in [0.5, 1).
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    equality: Vec<bool>,
    cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StandardForm {
    pub fn new(problem: &LpProblem) -> Result<Self> {
        problem.check()?;
        let n = problem.num_vars();
        let m = problem.rows.len();
        let mut cols = vec![Vec::new(); n];
        let mut rhs = Vec::with_capacity(m);
        let mut equality = Vec::with_capacity(m);
        for (i, row) in problem.rows.iter().enumerate() {
            let mut dense: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
            let mut merged = row.coeffs.clone();
            merged.sort_by_key(|(j, _)| *j);
            for (j, a) in merged {
                match dense.last_mut() {
                    Some((last, value)) if *last == j => *value += to_f64(&a),
                    _ => dense.push((j, to_f64(&a))),
                }
            }
            let sign = if row.relation == Relation::Ge { -1.0 } else { 1.0 };
            let largest = dense.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
            let scale = if largest > 0.0 {
                2f64.powi(-(largest.log2().floor() as i32) - 1)
            } else {
                1.0
            };
            for (j, a) in dense {
                if a != 0.0 {
                    cols[j].push((i, sign * scale * a));
                }
            }
            rhs.push(sign * scale * to_f64(&row.rhs));
            equality.push(row.relation == Relation::Eq);
        }
        Ok(StandardForm {
            n,
            m,
            cols,
            rhs,
            equality,
            cost: problem.objective.iter().map(to_f64).collect(),
            lower: problem.lower.iter().map(to_f64).collect(),
            upper: problem
                .upper
                .iter()
                .map(|u| u.as_ref().map_or(f64::INFINITY, to_f64))
                .collect(),
        })
    }
}

/// Basis snapshot sufficient to warm-start a later solve.
#[derive(Clone, Debug)]
pub(crate) struct Basis {
    head: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Phase {
    One,
    Two,
}

pub(crate) struct Simplex<'a> {
    form: &'a StandardForm,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    art_sign: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    binv: Vec<f64>,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    pub iterations: usize,
    iteration_limit: usize,
}

const NONBASIC: usize = usize::MAX;

enum Step {
    Optimal,
    Moved,
    Unbounded,
}

impl<'a> Simplex<'a> {
    pub fn new(form: &'a StandardForm) -> Self {
        let (n, m) = (form.n, form.m);
        let total = n + 2 * m;
        let mut lower = vec![0.0; total];
        let mut upper = vec![0.0; total];
        lower[..n].copy_from_slice(&form.lower);
        upper[..n].copy_from_slice(&form.upper);
        for i in 0..m {
            upper[n + i] = if form.equality[i] { 0.0 } else { f64::INFINITY };
        }
        Simplex {
            form,
            lower,
            upper,
            cost: vec![0.0; total],
            art_sign: vec![1.0; m],
            x: vec![0.0; total],
            head: Vec::new(),
            row_of: vec![NONBASIC; total],
            at_upper: vec![false; total],
            binv: Vec::new(),
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            iterations: 0,
            iteration_limit: 20_000 + 50 * (n + m),
        }
    }

    fn total(&self) -> usize {
        self.form.n + 2 * self.form.m
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        let (n, m) = (self.form.n, self.form.m);
        if j < n {
            ColumnIter::Sparse(self.form.cols[j].iter())
        } else if j < n + m {
            ColumnIter::Unit(Some((j - n, 1.0)))
        } else {
            ColumnIter::Unit(Some((j - n - m, self.art_sign[j - n - m])))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.x[..self.form.n].to_vec()
    }

    pub fn objective(&self) -> f64 {
        self.form
            .cost
            .iter()
            .zip(&self.x)
            .map(|(c, x)| c * x)
            .sum()
    }

    /// Overrides the bounds of structural variable `j`.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.row_of[j] == NONBASIC {
            if self.at_upper[j] && upper.is_finite() {
                self.x[j] = upper;
            } else {
                self.at_upper[j] = false;
                self.x[j] = lower;
            }
        }
    }

    pub fn snapshot(&self) -> Basis {
        Basis {
            head: self.head.clone(),
            at_upper: self.at_upper.clone(),
        }
    }

    /// Two-phase primal simplex from the slack basis.
    pub fn solve_cold(&mut self) -> LpStatus {
        let (n, m) = (self.form.n, self.form.m);
        let total = self.total();
        self.iterations = 0;
        self.bland = false;
        self.degenerate_run = 0;
        self.head = vec![0; m];
        self.row_of = vec![NONBASIC; total];
        self.at_upper = vec![false; total];
        self.binv = vec![0.0; m * m];
        for j in 0..n {
            if !self.lower[j].is_finite() {
                return LpStatus::NumericalFailure;
            }
            self.x[j] = self.lower[j];
        }
        let mut residual = self.form.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in &self.form.cols[j] {
                    residual[i] -= a * xj;
                }
            }
        }
        let mut needs_phase_one = false;
        for i in 0..m {
            let slack = n + i;
            let art = n + m + i;
            self.lower[art] = 0.0;
            self.upper[art] = 0.0;
            self.x[art] = 0.0;
            let r = residual[i];
            let slack_ok = if self.form.equality[i] {
                r.abs() <= FEASIBILITY_TOL
            } else {
                r >= -FEASIBILITY_TOL
            };
            if slack_ok {
                self.head[i] = slack;
                self.row_of[slack] = i;
                self.x[slack] = r;
                self.binv[i * m + i] = 1.0;
            } else {
                needs_phase_one = true;
                self.x[slack] = 0.0;
                self.art_sign[i] = if r < 0.0 { -1.0 } else { 1.0 };
                self.upper[art] = f64::INFINITY;
                self.head[i] = art;
                self.row_of[art] = i;
                self.x[art] = r.abs();
                self.binv[i * m + i] = self.art_sign[i];
            }
        }
        self.since_refactor = 0;

        if needs_phase_one {
            self.cost.iter_mut().for_each(|c| *c = 0.0);
            for i in 0..m {
                if self.upper[n + m + i] > 0.0 {
                    self.cost[n + m + i] = -1.0;
                }
            }
            match self.primal(Phase::One) {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => return LpStatus::NumericalFailure,
                other => return other,
            }
            if !self.refactor() {
                return LpStatus::NumericalFailure;
            }
            let infeasibility: f64 = (0..m).map(|i| self.x[n + m + i].max(0.0)).sum();
            if infeasibility > FEASIBILITY_TOL {
                return LpStatus::Infeasible;
            }
            for i in 0..m {
                let art = n + m + i;
                self.upper[art] = 0.0;
                if self.row_of[art] == NONBASIC {
                    self.x[art] = 0.0;
                    self.at_upper[art] = false;
                }
            }
        }
        self.set_phase_two_costs();
        self.bland = false;
        self.degenerate_run = 0;
        self.primal(Phase::Two)
    }

    fn set_phase_two_costs(&mut self) {
        let n = self.form.n;
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..n].copy_from_slice(&self.form.cost);
    }

    /// Dual simplex from a dual-feasible basis (after bound changes), then a
    /// primal clean-up pass.
    pub fn resolve_warm(&mut self, basis: Option<&Basis>) -> LpStatus {
        self.iterations = 0;
        self.bland = false;
        self.degenerate_run = 0;
        if let Some(basis) = basis {
            if basis.head.len() != self.form.m {
                return LpStatus::NumericalFailure;
            }
            self.head = basis.head.clone();
            self.at_upper = basis.at_upper.clone();
            self.row_of.iter_mut().for_each(|r| *r = NONBASIC);
            for (i, &j) in self.head.iter().enumerate() {
                self.row_of[j] = i;
            }
            for j in 0..self.total() {
                if self.row_of[j] == NONBASIC {
                    self.at_upper[j] = self.at_upper[j] && self.upper[j].is_finite();
                    self.x[j] = if self.at_upper[j] {
                        self.upper[j]
                    } else {
                        self.lower[j]
                    };
                }
            }
            self.binv = vec![0.0; self.form.m * self.form.m];
            if !self.refactor() {
                return LpStatus::NumericalFailure;
            }
        } else if self.binv.len() != self.form.m * self.form.m || !self.recompute_basics() {
            return LpStatus::NumericalFailure;
        }
        self.set_phase_two_costs();
        match self.dual() {
            LpStatus::Optimal => {}
            other => return other,
        }
        self.bland = false;
        self.degenerate_run = 0;
        self.primal(Phase::Two)
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.form.m;
        let mut y = vec![0.0; m];
        for (i, &j) in self.head.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost[j];
        for (i, a) in self.column(j) {
            d -= y[i] * a;
        }
        d
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.form.m;
        let mut alpha = vec![0.0; m];
        for (r, a) in self.column(j) {
            for (i, out) in alpha.iter_mut().enumerate() {
                *out += self.binv[i * m + r] * a;
            }
        }
        alpha
    }

    fn primal(&mut self, phase: Phase) -> LpStatus {
        loop {
            if self.iterations >= self.iteration_limit {
                return LpStatus::IterationLimit;
            }
            match self.primal_step(phase) {
                Ok(Step::Optimal) => {
                    if !self.recompute_basics() {
                        return LpStatus::NumericalFailure;
                    }
                    // Drift can leave basics slightly outside their bounds.
                    if self.max_basic_infeasibility() > FEASIBILITY_TOL {
                        if phase == Phase::One {
                            return LpStatus::NumericalFailure;
                        }
                        match self.dual() {
                            LpStatus::Optimal => continue,
                            other => return other,
                        }
                    }
                    return LpStatus::Optimal;
                }
                Ok(Step::Moved) => {}
                Ok(Step::Unbounded) => return LpStatus::Unbounded,
                Err(()) => return LpStatus::NumericalFailure,
            }
        }
    }

    fn primal_step(&mut self, _phase: Phase) -> std::result::Result<Step, ()> {
        let m = self.form.m;
        let y = self.duals();
        let mut entering = None;
        let mut best = 0.0;
        for j in 0..self.total() {
            if self.row_of[j] != NONBASIC || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let d = self.reduced_cost(j, &y);
            let gain = if self.at_upper[j] { -d } else { d };
            if gain > OPTIMALITY_TOL {
                if self.bland {
                    entering = Some(j);
                    break;
                }
                if gain > best {
                    best = gain;
                    entering = Some(j);
                }
            }
        }
        let Some(q) = entering else {
            return Ok(Step::Optimal);
        };
        let alpha = self.ftran(q);
        let dir = if self.at_upper[q] { -1.0 } else { 1.0 };

        // Harris two-pass ratio test over the basic variables.
        let mut relaxed = f64::INFINITY;
        for i in 0..m {
            let rate = -dir * alpha[i];
            if rate.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.head[i];
            let limit = if rate < 0.0 {
                (self.x[j] - self.lower[j] + HARRIS_TOL) / -rate
            } else {
                (self.upper[j] - self.x[j] + HARRIS_TOL) / rate
            };
            if limit < relaxed {
                relaxed = limit;
            }
        }
        let mut leave: Option<usize> = None;
        let mut theta = f64::INFINITY;
        if relaxed.is_finite() {
            let mut best_pivot = 0.0;
            for i in 0..m {
                let rate = -dir * alpha[i];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[i];
                let limit = if rate < 0.0 {
                    (self.x[j] - self.lower[j]) / -rate
                } else {
                    (self.upper[j] - self.x[j]) / rate
                };
                if limit <= relaxed {
                    let better = match leave {
                        None => true,
                        Some(prev) if self.bland => j < self.head[prev],
                        Some(_) => rate.abs() > best_pivot,
                    };
                    if better {
                        best_pivot = rate.abs();
                        leave = Some(i);
                        theta = limit.max(0.0);
                    }
                }
            }
        }
        let range = self.upper[q] - self.lower[q];
        if range <= theta {
            // The entering variable reaches its opposite bound first.
            if !range.is_finite() {
                return Ok(Step::Unbounded);
            }
            self.shift_basics(&alpha, dir * range);
            self.at_upper[q] = !self.at_upper[q];
            self.x[q] = if self.at_upper[q] { self.upper[q] } else { self.lower[q] };
            self.iterations += 1;
            self.degenerate_run = 0;
            return Ok(Step::Moved);
        }
        let Some(r) = leave else {
            return Ok(Step::Unbounded);
        };
        self.shift_basics(&alpha, dir * theta);
        self.x[q] += dir * theta;
        let to_upper = -dir * alpha[r] > 0.0;
        self.pivot(r, q, &alpha, to_upper)?;
        if theta <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > BLAND_AFTER {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
        Ok(Step::Moved)
    }

    fn shift_basics(&mut self, alpha: &[f64], step: f64) {
        for (i, a) in alpha.iter().enumerate() {
            if *a != 0.0 {
                let j = self.head[i];
                self.x[j] -= a * step;
            }
        }
    }

    /// Replaces the basic variable of row `r` by column `q`.
    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], leave_to_upper: bool) -> std::result::Result<(), ()> {
        let m = self.form.m;
        let pivot = alpha[r];
        if pivot.abs() < 1e-12 {
            return Err(());
        }
        let leaving = self.head[r];
        self.row_of[leaving] = NONBASIC;
        self.at_upper[leaving] = leave_to_upper && self.upper[leaving].is_finite();
        self.x[leaving] = if self.at_upper[leaving] {
            self.upper[leaving]
        } else {
            self.lower[leaving]
        };
        self.head[r] = q;
        self.row_of[q] = r;
        self.at_upper[q] = false;

        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v /= pivot;
        }
        for (i, row) in before.chunks_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        for (k, row) in after.chunks_mut(m).enumerate() {
            let f = alpha[r + 1 + k];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
            }
        }
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY && !self.refactor() {
            return Err(());
        }
        Ok(())
    }

    /// Rebuilds the basis inverse from scratch and recomputes basic values.
    ///
    /// Slack and artificial columns are unit vectors, so only the block of
    /// structural columns on the rows no unit column covers is inverted.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.form.n, self.form.m);
        self.since_refactor = 0;
        if m == 0 {
            return true;
        }
        let mut unit_at = vec![NONBASIC; m];
        let mut structural = Vec::new();
        for (k, &j) in self.head.iter().enumerate() {
            if j < n {
                structural.push(k);
                continue;
            }
            let i = if j < n + m { j - n } else { j - n - m };
            if unit_at[i] != NONBASIC {
                return false;
            }
            unit_at[i] = k;
        }
        let free: Vec<usize> = (0..m).filter(|&i| unit_at[i] == NONBASIC).collect();
        let t = structural.len();
        if free.len() != t {
            return false;
        }
        let mut local = vec![NONBASIC; m];
        for (b, &i) in free.iter().enumerate() {
            local[i] = b;
        }
        let mut block = vec![0.0; t * t];
        for (a, &k) in structural.iter().enumerate() {
            for (i, v) in self.column(self.head[k]) {
                if local[i] != NONBASIC {
                    block[local[i] * t + a] = v;
                }
            }
        }
        let Some(inv) = invert(block, t) else { return false };
        let mut binv = vec![0.0; m * m];
        for (a, &k) in structural.iter().enumerate() {
            let row = &mut binv[k * m..(k + 1) * m];
            for (b, &i) in free.iter().enumerate() {
                row[i] = inv[a * t + b];
            }
        }
        for i in 0..m {
            let u = unit_at[i];
            if u != NONBASIC {
                binv[u * m + i] = self.unit_sign(self.head[u]);
            }
        }
        for (a, &k) in structural.iter().enumerate() {
            for (i, v) in self.column(self.head[k]) {
                let u = unit_at[i];
                if u == NONBASIC {
                    continue;
                }
                let f = self.unit_sign(self.head[u]) * v;
                let row = &mut binv[u * m..(u + 1) * m];
                for (b, &c) in free.iter().enumerate() {
                    row[c] -= f * inv[a * t + b];
                }
            }
        }
        self.binv = binv;
        self.recompute_basics()
    }

    fn unit_sign(&self, j: usize) -> f64 {
        let (n, m) = (self.form.n, self.form.m);
        if j < n + m {
            1.0
        } else {
            self.art_sign[j - n - m]
        }
    }

    fn recompute_basics(&mut self) -> bool {
        let m = self.form.m;
        let mut r = self.form.rhs.clone();
        for j in 0..self.total() {
            if self.row_of[j] == NONBASIC {
                let xj = self.x[j];
                if xj != 0.0 {
                    for (i, a) in self.column(j) {
                        r[i] -= a * xj;
                    }
                }
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&r).map(|(b, r)| b * r).sum();
            if !v.is_finite() {
                return false;
            }
            self.x[self.head[i]] = v;
        }
        true
    }

    fn max_basic_infeasibility(&self) -> f64 {
        self.head
            .iter()
            .map(|&j| {
                let x = self.x[j];
                (self.lower[j] - x).max(x - self.upper[j]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn dual(&mut self) -> LpStatus {
        let m = self.form.m;
        let total = self.total();
        let mut d = vec![0.0; total];
        let mut fresh = false;
        let mut row = vec![0.0; total];
        loop {
            if self.iterations >= self.iteration_limit {
                return LpStatus::IterationLimit;
            }
            let mut leave = None;
            let mut worst = FEASIBILITY_TOL;
            for i in 0..m {
                let j = self.head[i];
                let x = self.x[j];
                let v = (self.lower[j] - x).max(x - self.upper[j]);
                if v > worst {
                    worst = v;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else {
                return LpStatus::Optimal;
            };
            if !fresh {
                // Reduced costs are updated in place between refactorizations.
                let y = self.duals();
                for (j, dj) in d.iter_mut().enumerate() {
                    *dj = if self.row_of[j] == NONBASIC { self.reduced_cost(j, &y) } else { 0.0 };
                }
                fresh = true;
            }
            let leaving = self.head[r];
            let below = self.x[leaving] < self.lower[leaving];
            let target = if below {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            let rho = &self.binv[r * m..(r + 1) * m];
            let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..total {
                row[j] = 0.0;
                if self.row_of[j] != NONBASIC {
                    continue;
                }
                let mut arj = 0.0;
                for (i, a) in self.column(j) {
                    arj += rho[i] * a;
                }
                row[j] = arj;
                if arj.abs() <= PIVOT_TOL || self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let increases = if self.at_upper[j] { arj > 0.0 } else { arj < 0.0 };
                if increases != below {
                    continue;
                }
                let slack = if self.at_upper[j] { d[j].max(0.0) } else { (-d[j]).max(0.0) };
                candidates.push((j, slack, arj));
            }
            if candidates.is_empty() {
                return LpStatus::Infeasible;
            }
            let relaxed = candidates
                .iter()
                .map(|(_, s, a)| (s + OPTIMALITY_TOL) / a.abs())
                .fold(f64::INFINITY, f64::min);
            let mut chosen: Option<(usize, f64)> = None;
            for &(j, s, a) in &candidates {
                if s / a.abs() <= relaxed {
                    let better = match chosen {
                        None => true,
                        Some((_, best)) => a.abs() > best,
                    };
                    if better {
                        chosen = Some((j, a.abs()));
                    }
                }
            }
            let (q, _) = chosen.expect("non-empty candidate set");
            let alpha = self.ftran(q);
            if alpha[r].abs() <= PIVOT_TOL {
                return LpStatus::NumericalFailure;
            }
            let theta = d[q] / row[q];
            for (dj, aj) in d.iter_mut().zip(&row) {
                if *aj != 0.0 {
                    *dj -= theta * aj;
                }
            }
            d[q] = 0.0;
            d[leaving] = -theta;
            let delta = (self.x[leaving] - target) / alpha[r];
            self.shift_basics(&alpha, delta);
            self.x[q] += delta;
            if self.pivot(r, q, &alpha, !below).is_err() {
                return LpStatus::NumericalFailure;
            }
            self.x[leaving] = target;
            if self.since_refactor == 0 {
                fresh = false;
            }
        }
    }
}

/// Gauss-Jordan inverse of a dense row-major `t x t` matrix with partial
/// pivoting.
fn invert(mut mat: Vec<f64>, t: usize) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; t * t];
    for i in 0..t {
        inv[i * t + i] = 1.0;
    }
    let mut pivot_mat: Vec<(usize, f64)> = Vec::with_capacity(t);
    let mut pivot_inv: Vec<(usize, f64)> = Vec::with_capacity(t);
    for k in 0..t {
        let mut p = k;
        let mut best = mat[k * t + k].abs();
        for i in (k + 1)..t {
            let v = mat[i * t + k].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best < 1e-11 {
            return None;
        }
        if p != k {
            for c in 0..t {
                mat.swap(k * t + c, p * t + c);
                inv.swap(k * t + c, p * t + c);
            }
        }
        let piv = mat[k * t + k];
        pivot_mat.clear();
        pivot_inv.clear();
        for c in 0..t {
            mat[k * t + c] /= piv;
            inv[k * t + c] /= piv;
            if mat[k * t + c] != 0.0 {
                pivot_mat.push((c, mat[k * t + c]));
            }
            if inv[k * t + c] != 0.0 {
                pivot_inv.push((c, inv[k * t + c]));
            }
        }
        for i in 0..t {
            if i == k {
                continue;
            }
            let f = mat[i * t + k];
            if f == 0.0 {
                continue;
            }
            for &(c, v) in &pivot_mat {
                mat[i * t + c] -= f * v;
            }
            for &(c, v) in &pivot_inv {
                inv[i * t + c] -= f * v;
            }
        }
    }
    Some(inv)
}

enum ColumnIter<'a> {
    Sparse(std::slice::Iter<'a, (usize, f64)>),
    Unit(Option<(usize, f64)>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Sparse(it) => it.next().copied(),
            ColumnIter::Unit(entry) => entry.take(),
        }
    }
}

/// Objective value of `x` computed exactly.
pub fn exact_objective(problem: &LpProblem, x: &[i64]) -> Rational {
    let mut total = Rational::zero();
    for (c, &v) in problem.objective.iter().zip(x) {
        if v != 0 && !c.is_zero() {
            total += c * Rational::from_integer(v.into());
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn var(p: &mut LpProblem, name: &str, c: i64, upper: Option<i64>) -> usize {
        p.add_var(name, ratio(c, 1), int(0), upper.map(|u| ratio(u, 1)))
    }

    #[test]
    fn single_bounded_variable() {
        let mut p = LpProblem::default();
        let x = var(&mut p, "x", 1, None);
        p.add_row("cap", vec![(x, int(1))], Relation::Le, int(5));
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.values[0] - 5.0).abs() < 1e-9);
        assert!((out.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows() {
        let mut p = LpProblem::default();
        let x = var(&mut p, "x", 1, None);
        let y = var(&mut p, "y", 1, None);
        p.add_row("sum", vec![(x, int(1)), (y, int(1))], Relation::Le, int(1));
        p.add_row("low", vec![(x, int(1))], Relation::Ge, int(2));
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::default();
        let x = var(&mut p, "x", 1, None);
        let y = var(&mut p, "y", 0, None);
        p.add_row("r", vec![(x, int(1)), (y, ratio(-1, 1))], Relation::Le, int(3));
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_upper_bounds() {
        // max 3x + 2y, x + y = 4, x <= 3, y <= 3  ->  x = 3, y = 1, obj 11
        let mut p = LpProblem::default();
        let x = var(&mut p, "x", 3, Some(3));
        let y = var(&mut p, "y", 2, Some(3));
        p.add_row("sum", vec![(x, int(1)), (y, int(1))], Relation::Eq, int(4));
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 11.0).abs() < 1e-9);
        assert!(p.max_violation(&out.values) <= FEASIBILITY_TOL);
    }

    #[test]
    fn no_rows_at_all() {
        let mut p = LpProblem::default();
        var(&mut p, "x", 2, Some(4));
        var(&mut p, "y", -1, Some(4));
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.values, vec![4.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut p = LpProblem::default();
        var(&mut p, "x", 1, None);
        p.add_row("bad", vec![(3, int(1))], Relation::Le, int(1));
        assert!(matches!(solve_lp(&p), Err(Error::Dimension(_))));
        p.rows.clear();
        p.lower.push(int(0));
        assert!(matches!(solve_lp(&p), Err(Error::Dimension(_))));
    }

    #[test]
    fn warm_resolve_after_bound_change() {
        // max x + y, 2x + 2y <= 3  ->  1.5; then x, y <= 0.5 forces 1.0
        let mut p = LpProblem::default();
        let x = var(&mut p, "x", 1, Some(10));
        let y = var(&mut p, "y", 1, Some(10));
        p.add_row("r", vec![(x, int(2)), (y, int(2))], Relation::Le, int(3));
        let form = StandardForm::new(&p).unwrap();
        let mut s = Simplex::new(&form);
        assert_eq!(s.solve_cold(), LpStatus::Optimal);
        assert!((s.objective() - 1.5).abs() < 1e-9);
        let basis = s.snapshot();
        s.set_bounds(x, 0.0, 0.5);
        s.set_bounds(y, 0.0, 0.5);
        assert_eq!(s.resolve_warm(Some(&basis)), LpStatus::Optimal);
        assert!((s.objective() - 1.0).abs() < 1e-9);
        s.set_bounds(x, 2.0, 2.0);
        assert_eq!(s.resolve_warm(None), LpStatus::Infeasible);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // min -0.75a + 150b - 0.02c + 6d as a maximisation.
        let mut p = LpProblem::default();
        let a = p.add_var("a", ratio(3, 4), int(0), None);
        let b = p.add_var("b", ratio(-150, 1), int(0), None);
        let c = p.add_var("c", ratio(1, 50), int(0), None);
        let d = p.add_var("d", ratio(-6, 1), int(0), None);
        p.add_row(
            "r1",
            vec![(a, ratio(1, 4)), (b, ratio(-60, 1)), (c, ratio(-1, 25)), (d, ratio(9, 1))],
            Relation::Le,
            int(0),
        );
        p.add_row(
            "r2",
            vec![(a, ratio(1, 2)), (b, ratio(-90, 1)), (c, ratio(-1, 50)), (d, ratio(3, 1))],
            Relation::Le,
            int(0),
        );
        p.add_row("r3", vec![(c, int(1))], Relation::Le, int(1));
        let out = solve_lp(&p).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 0.05).abs() < 1e-9);
    }
}
