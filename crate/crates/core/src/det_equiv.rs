//! The deterministic-equivalent integer program and single-scenario recourse
//! programs, plus the mapping back to domain decisions.
//!
//! Variables of the full model, in order: `a_i` per item, `a_b`, `y_j` per
//! candidate printer, `a_i^s` per scenario and item, then `p_ij^s` per
//! scenario, printable item and printer.
//!
//! Every variable gets a finite upper bound that no optimal solution needs
//! to exceed:
//! - `a_i <= min(W / w_i, V / v_i, max_s d_i^s)`: copies beyond the largest
//!   demand never earn reward and only use capacity.
//! - `a_b <= M` and `y_j <= 1`.
//! - `a_i^s <= d_i^s`.
//! - `p_ij^s <= min(d_i^s, T / t_i, M / m_i)`, and `0` when `t_i > T`.
//!
//! Items with `t_i = 0` are not limited by the per-printer time rows, so a
//! row `p_ij^s <= d_i^s y_j` ties their prints to packed printers.

use std::collections::{HashMap, HashSet};

use num_traits::{ToPrimitive, Zero};

use crate::bound::printer_upper_bound;
use crate::error::{Error, Result};
use crate::lp::{LpProblem, Relation};
use crate::mip::{
    solve_mip, solve_mip_with, Closure, MipParams, MipProblem, MipResult, MipStatus, NodeHook, NodeView, INTEGRALITY_TOL,
};
use crate::model::{check_first_stage, check_plan_feasible, FirstStageDecision, Instance, PrintPlan, Scenario};
use crate::rational::{int, Rational};

/// Where each domain quantity sits in the solver's variable vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableMap {
    pub num_items: usize,
    /// Scenario index of each recourse block.
    pub scenarios: Vec<usize>,
    /// `a_i`; empty for a single-scenario model.
    pub items: Vec<usize>,
    pub material: Option<usize>,
    /// `y_j`; empty for a single-scenario model, whose printers are fixed.
    pub printers: Vec<usize>,
    /// Printer slots per scenario block (`Z`, or `a_p` for a recourse model).
    pub printer_slots: usize,
    /// `matched[block][i]` is `a_i^s`.
    pub matched: Vec<Vec<usize>>,
    /// `prints[block][i][j]` is `p_ij^s`; `None` for non-printable items.
    pub prints: Vec<Vec<Option<Vec<usize>>>>,
    pub num_vars: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub allow_printers: bool,
    pub symmetry_rows: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            allow_printers: true,
            symmetry_rows: true,
        }
    }
}

/// Material big-M: `min(W / w_b, V / v_b)` over the nonzero sizes.
pub fn big_m(instance: &Instance) -> Result<u64> {
    let material = &instance.material;
    let caps = [
        (instance.capacity.weight, material.weight),
        (instance.capacity.volume, material.volume),
    ];
    caps.iter()
        .filter(|(_, size)| *size > 0)
        .map(|(cap, size)| cap / size)
        .min()
        .ok_or_else(|| Error::InvalidArgument("material needs a positive weight or volume".into()))
}

/// Copies of item `i` that can ever be useful to pack.
pub(crate) fn item_upper(instance: &Instance, i: usize) -> u64 {
    let item = &instance.items[i];
    [
        (instance.capacity.weight, item.weight),
        (instance.capacity.volume, item.volume),
    ]
    .iter()
    .filter(|(_, size)| *size > 0)
    .map(|(cap, size)| cap / size)
    .fold(instance.max_demand(i), u64::min)
}

/// Copies of item `i` one printer can make in a scenario with demand `d`,
/// given at most `material` units of material.
pub(crate) fn print_upper(instance: &Instance, i: usize, demand: u64, material: u64) -> u64 {
    let Some(spec) = instance.items[i].print else { return 0 };
    let budget = instance.printer.time_budget;
    if spec.time > budget {
        return 0;
    }
    let by_time = budget.checked_div(spec.time).unwrap_or(u64::MAX);
    let by_material = material.checked_div(spec.material).unwrap_or(u64::MAX);
    demand.min(by_time).min(by_material)
}

fn rows_for_recourse(
    instance: &Instance,
    lp: &mut LpProblem,
    s: usize,
    matched: &[usize],
    prints: &[Option<Vec<usize>>],
    material: MaterialRef,
    printers: PrinterRef<'_>,
) {
    let demand = &instance.scenarios[s].demand;
    let tag = s + 1;
    for (i, row) in prints.iter().enumerate() {
        if let Some(row) = row {
            let mut coeffs = vec![(matched[i], int(1))];
            coeffs.extend(row.iter().map(|&p| (p, int(1))));
            lp.add_row(format!("dem_{}_s{tag}", i + 1), coeffs, Relation::Le, int(demand[i]));
        }
    }
    let mut coeffs = Vec::new();
    for (i, row) in prints.iter().enumerate() {
        let Some(row) = row else { continue };
        let m = instance.items[i].print.map_or(0, |spec| spec.material);
        if m > 0 {
            coeffs.extend(row.iter().map(|&p| (p, int(m))));
        }
    }
    if !coeffs.is_empty() {
        let rhs = match material {
            MaterialRef::Variable(b) => {
                coeffs.push((b, -int(1)));
                Rational::zero()
            }
            MaterialRef::Fixed(amount) => int(amount),
        };
        lp.add_row(format!("mat_s{tag}"), coeffs, Relation::Le, rhs);
    }
    let budget = instance.printer.time_budget;
    let slots = prints.iter().flatten().map(Vec::len).next().unwrap_or(0);
    for j in 0..slots {
        let mut coeffs = Vec::new();
        for (i, row) in prints.iter().enumerate() {
            let Some(row) = row else { continue };
            let t = instance.items[i].print.map_or(0, |spec| spec.time);
            if t > 0 {
                coeffs.push((row[j], int(t)));
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let rhs = match printers {
            PrinterRef::Variables(ys) => {
                coeffs.push((ys[j], -int(budget)));
                Rational::zero()
            }
            PrinterRef::Packed => int(budget),
        };
        lp.add_row(format!("time_{}_s{tag}", j + 1), coeffs, Relation::Le, rhs);
    }
    if let PrinterRef::Variables(ys) = printers {
        for (i, row) in prints.iter().enumerate() {
            let Some(row) = row else { continue };
            let zero_time = instance.items[i].print.is_some_and(|spec| spec.time == 0);
            if !zero_time || demand[i] == 0 {
                continue;
            }
            for (j, &p) in row.iter().enumerate() {
                lp.add_row(
                    format!("link_{}_{}_s{tag}", i + 1, j + 1),
                    vec![(p, int(1)), (ys[j], -int(demand[i]))],
                    Relation::Le,
                    Rational::zero(),
                );
            }
        }
    }
}

#[derive(Clone, Copy)]
enum MaterialRef {
    Variable(usize),
    Fixed(u64),
}

#[derive(Clone, Copy)]
enum PrinterRef<'a> {
    Variables(&'a [usize]),
    Packed,
}

/// Builds the deterministic equivalent with `z` candidate printers.
pub fn build_det_equiv(instance: &Instance, z: u64, options: BuildOptions) -> Result<(MipProblem, VariableMap)> {
    instance.ensure_valid()?;
    let n = instance.num_items();
    let m_cap = big_m(instance)?;
    let z = if options.allow_printers { z } else { 0 };
    let slots = usize::try_from(z).map_err(|_| Error::InvalidArgument(format!("printer bound {z} too large")))?;
    let mut lp = LpProblem::default();

    let items: Vec<usize> = (0..n)
        .map(|i| lp.add_var(format!("a_{}", i + 1), Rational::zero(), int(0), Some(int(item_upper(instance, i)))))
        .collect();
    let material_ub = if options.allow_printers && slots > 0 { m_cap } else { 0 };
    let material = lp.add_var("a_b", Rational::zero(), int(0), Some(int(material_ub)));
    let printers: Vec<usize> = (0..slots)
        .map(|j| lp.add_var(format!("y_{}", j + 1), Rational::zero(), int(0), Some(int(1))))
        .collect();

    let mut matched = Vec::new();
    for (s, scenario) in instance.scenarios.iter().enumerate() {
        let row: Vec<usize> = (0..n)
            .map(|i| {
                let coef = &scenario.probability * int(instance.items[i].reward);
                lp.add_var(format!("as_{}_s{}", i + 1, s + 1), coef, int(0), Some(int(scenario.demand[i])))
            })
            .collect();
        matched.push(row);
    }
    let mut prints = Vec::new();
    for (s, scenario) in instance.scenarios.iter().enumerate() {
        let mut block = Vec::new();
        for i in 0..n {
            if !instance.items[i].is_printable() {
                block.push(None);
                continue;
            }
            let ub = print_upper(instance, i, scenario.demand[i], m_cap);
            let coef = &scenario.probability * &instance.alpha * int(instance.items[i].reward);
            let row: Vec<usize> = (0..slots)
                .map(|j| {
                    lp.add_var(format!("p_{}_{}_s{}", i + 1, j + 1, s + 1), coef.clone(), int(0), Some(int(ub)))
                })
                .collect();
            block.push(Some(row));
        }
        prints.push(block);
    }

    let mut weight: Vec<(usize, Rational)> = Vec::new();
    let mut volume: Vec<(usize, Rational)> = Vec::new();
    for (i, item) in instance.items.iter().enumerate() {
        if item.weight > 0 {
            weight.push((items[i], int(item.weight)));
        }
        if item.volume > 0 {
            volume.push((items[i], int(item.volume)));
        }
    }
    if instance.material.weight > 0 {
        weight.push((material, int(instance.material.weight)));
    }
    if instance.material.volume > 0 {
        volume.push((material, int(instance.material.volume)));
    }
    for &y in &printers {
        if instance.printer.weight > 0 {
            weight.push((y, int(instance.printer.weight)));
        }
        if instance.printer.volume > 0 {
            volume.push((y, int(instance.printer.volume)));
        }
    }
    lp.add_row("cap_w", weight, Relation::Le, int(instance.capacity.weight));
    lp.add_row("cap_v", volume, Relation::Le, int(instance.capacity.volume));
    if !printers.is_empty() {
        let mut coeffs = vec![(material, int(1))];
        coeffs.extend(printers.iter().map(|&y| (y, -int(m_cap))));
        lp.add_row("bigm", coeffs, Relation::Le, Rational::zero());
    }
    for (s, _) in instance.scenarios.iter().enumerate() {
        for i in 0..n {
            lp.add_row(
                format!("match_{}_s{}", i + 1, s + 1),
                vec![(matched[s][i], int(1)), (items[i], -int(1))],
                Relation::Le,
                Rational::zero(),
            );
        }
        rows_for_recourse(
            instance,
            &mut lp,
            s,
            &matched[s],
            &prints[s],
            MaterialRef::Variable(material),
            PrinterRef::Variables(&printers),
        );
    }
    if options.symmetry_rows {
        for j in 1..slots {
            lp.add_row(
                format!("sym_{}", j + 1),
                vec![(printers[j], int(1)), (printers[j - 1], -int(1))],
                Relation::Le,
                Rational::zero(),
            );
        }
    }

    let mut priority = vec![0; lp.num_vars()];
    for &y in &printers {
        priority[y] = 2;
    }
    for &j in items.iter().chain(std::iter::once(&material)) {
        priority[j] = 1;
    }
    let map = VariableMap {
        num_items: n,
        scenarios: (0..instance.num_scenarios()).collect(),
        items,
        material: Some(material),
        printers,
        printer_slots: slots,
        matched,
        prints,
        num_vars: lp.num_vars(),
    };
    let mut problem = MipProblem::all_integer(lp);
    problem.priority = priority;
    Ok((problem, map))
}

/// Builds the deterministic equivalent sized by the printer bound `Z`.
pub fn build_for_instance(instance: &Instance, allow_printers: bool) -> Result<(MipProblem, VariableMap)> {
    instance.ensure_valid()?;
    let z = printer_upper_bound(instance).z;
    build_det_equiv(
        instance,
        z,
        BuildOptions {
            allow_printers,
            symmetry_rows: true,
        },
    )
}

/// Recourse program of one scenario for a fixed packing.
pub fn build_second_stage(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
) -> Result<(MipProblem, VariableMap)> {
    instance.ensure_valid()?;
    let violations = check_first_stage(instance, decision);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let data: &Scenario = instance
        .scenarios
        .get(scenario)
        .ok_or_else(|| Error::InvalidArgument(format!("scenario {scenario} out of range")))?;
    let n = instance.num_items();
    let slots = usize::try_from(decision.printers)
        .map_err(|_| Error::InvalidArgument(format!("{} printers is too many", decision.printers)))?;
    let mut lp = LpProblem::default();
    let tag = scenario + 1;
    let matched: Vec<usize> = (0..n)
        .map(|i| {
            let ub = decision.items[i].min(data.demand[i]);
            lp.add_var(format!("as_{}_s{tag}", i + 1), int(instance.items[i].reward), int(0), Some(int(ub)))
        })
        .collect();
    let prints: Vec<Option<Vec<usize>>> = (0..n)
        .map(|i| {
            if !instance.items[i].is_printable() || slots == 0 {
                return instance.items[i].is_printable().then(Vec::new);
            }
            let ub = print_upper(instance, i, data.demand[i], decision.material);
            let coef = &instance.alpha * int(instance.items[i].reward);
            Some(
                (0..slots)
                    .map(|j| lp.add_var(format!("p_{}_{}_s{tag}", i + 1, j + 1), coef.clone(), int(0), Some(int(ub))))
                    .collect(),
            )
        })
        .collect();
    rows_for_recourse(
        instance,
        &mut lp,
        scenario,
        &matched,
        &prints,
        MaterialRef::Fixed(decision.material),
        PrinterRef::Packed,
    );
    let map = VariableMap {
        num_items: n,
        scenarios: vec![scenario],
        items: Vec::new(),
        material: None,
        printers: Vec::new(),
        printer_slots: slots,
        matched: vec![matched],
        prints: vec![prints],
        num_vars: lp.num_vars(),
    };
    Ok((MipProblem::all_integer(lp), map))
}

/// Optimal recourse value `Q(a, s)` and the plan attaining it.
pub fn solve_second_stage(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
    params: &MipParams,
) -> Result<(Rational, PrintPlan)> {
    let params = MipParams {
        relative_gap: 0.0,
        ..params.clone()
    };
    match recourse(instance, decision, scenario, &params)? {
        (MipStatus::OptimalWithinGap, Some(found)) => Ok(found),
        (MipStatus::OptimalWithinGap, None) => Err(Error::Internal("recourse program has no solution".into())),
        (status, _) => Err(Error::Solver(format!(
            "recourse solve for scenario {} stopped: {}",
            scenario + 1,
            status.as_str()
        ))),
    }
}

/// Recourse of one scenario: the packing route when it applies, otherwise
/// the per-printer program under `params`.
fn recourse(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
    params: &MipParams,
) -> Result<(MipStatus, Option<(Rational, PrintPlan)>)> {
    if let Some(found) = recourse_by_packing(instance, decision, scenario)? {
        return Ok((MipStatus::OptimalWithinGap, Some(found)));
    }
    let (problem, map) = build_second_stage(instance, decision, scenario)?;
    let result = solve_mip(&problem, params)?;
    let Some(values) = result.values.as_ref() else {
        return Ok((result.status, None));
    };
    let ints = round_values(values, map.num_vars)?;
    let plan = plan_from(&map, 0, &ints, Some)?;
    let value = result.objective.clone().unwrap_or_default();
    Ok((result.status, Some((value, plan))))
}

/// Solves the recourse with the printers pooled: print counts limited by
/// demand, material and the total time `k T`. When first-fit decreasing
/// spreads that optimum over the `k` printers it is optimal for the real
/// recourse; otherwise `None`.
///
/// Physical matches are taken first, at `min(a_i, d_i)`, since they earn at
/// least as much as a print and use no printing resources.
fn recourse_by_packing(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
) -> Result<Option<(Rational, PrintPlan)>> {
    instance.ensure_valid()?;
    let violations = check_first_stage(instance, decision);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let data = instance
        .scenarios
        .get(scenario)
        .ok_or_else(|| Error::InvalidArgument(format!("scenario {scenario} out of range")))?;
    let n = instance.num_items();
    let k = usize::try_from(decision.printers)
        .map_err(|_| Error::InvalidArgument(format!("{} printers is too many", decision.printers)))?;
    let budget = instance.printer.time_budget;
    let mut plan = PrintPlan::empty(scenario, n, decision.printers);
    let mut value = Rational::zero();
    for i in 0..n {
        plan.matched[i] = decision.items[i].min(data.demand[i]);
        value += int(instance.items[i].reward * plan.matched[i]);
    }
    if k == 0 {
        return Ok(Some((value, plan)));
    }

    let mut lp = LpProblem::default();
    let mut vars = Vec::new();
    let mut time_row = Vec::new();
    let mut material_row = Vec::new();
    for (i, item) in instance.items.iter().enumerate() {
        let Some(spec) = item.print else { continue };
        let residual = data.demand[i] - plan.matched[i];
        let mut ub = residual;
        if spec.time > budget {
            ub = 0;
        } else if let Some(each) = budget.checked_div(spec.time) {
            ub = ub.min(each * k as u64);
        }
        if let Some(most) = decision.material.checked_div(spec.material) {
            ub = ub.min(most);
        }
        if ub == 0 {
            continue;
        }
        let var = lp.add_var(format!("x_{}", i + 1), &instance.alpha * int(item.reward), int(0), Some(int(ub)));
        if spec.time > 0 {
            time_row.push((var, int(spec.time)));
        }
        if spec.material > 0 {
            material_row.push((var, int(spec.material)));
        }
        vars.push((i, var));
    }
    if vars.is_empty() {
        return Ok(Some((value, plan)));
    }
    if !time_row.is_empty() {
        lp.add_row("time", time_row, Relation::Le, int(budget) * int(k as u64));
    }
    if !material_row.is_empty() {
        lp.add_row("material", material_row, Relation::Le, int(decision.material));
    }
    let result = solve_mip(&MipProblem::all_integer(lp), &MipParams::exact())?;
    if result.status != MipStatus::OptimalWithinGap {
        return Ok(None);
    }
    let (Some(values), Some(printed)) = (result.values.as_ref(), result.objective.as_ref()) else {
        return Ok(None);
    };
    let counts = round_values(values, vars.len())?;

    let mut copies: Vec<(usize, u64)> = Vec::new();
    for &(i, var) in &vars {
        let t = instance.items[i].print.map_or(0, |spec| spec.time);
        copies.extend(std::iter::repeat_n((i, t), counts[var] as usize));
    }
    copies.sort_by_key(|&(i, t)| (std::cmp::Reverse(t), i));
    let Some(bins) = pack_copies(&copies, k, budget) else {
        return Ok(None);
    };
    for (&(i, _), &j) in copies.iter().zip(&bins) {
        plan.prints[i][j] += 1;
    }
    value += printed;
    Ok(Some((value, plan)))
}

const PACKING_STEPS: u64 = 200_000;

/// Printer of each copy, for copies sorted by decreasing time. Tries first
/// fit, then a bounded exact search; `None` if neither finds a packing.
fn pack_copies(copies: &[(usize, u64)], k: usize, budget: u64) -> Option<Vec<usize>> {
    let mut used = vec![0u64; k];
    let mut bins = Vec::with_capacity(copies.len());
    for &(_, t) in copies {
        match (0..k).find(|&j| used[j] + t <= budget) {
            Some(j) => {
                used[j] += t;
                bins.push(j);
            }
            None => break,
        }
    }
    if bins.len() == copies.len() {
        return Some(bins);
    }

    // copies of equal time are interchangeable, whatever their item
    let mut sizes: Vec<u64> = copies.iter().map(|&(_, t)| t).filter(|&t| t > 0).collect();
    sizes.dedup();
    let counts: Vec<u64> = sizes
        .iter()
        .map(|&t| copies.iter().filter(|&&(_, c)| c == t).count() as u64)
        .collect();
    let gcd = sizes.iter().fold(0, |g, &t| num_integer::gcd(g, t));
    let mut search = Packing {
        sizes,
        capacity: budget - budget % gcd.max(1),
        failed: HashSet::new(),
        steps: 0,
        loads: Vec::with_capacity(k),
    };
    let mut remaining = counts;
    if !search.fill(&mut remaining, k) {
        return None;
    }
    let mut bins = Vec::with_capacity(copies.len());
    let mut quota = search.loads;
    for &(_, t) in copies {
        if t == 0 {
            bins.push(0);
            continue;
        }
        let s = search.sizes.iter().position(|&x| x == t)?;
        let j = quota.iter().position(|q| q[s] > 0)?;
        quota[j][s] -= 1;
        bins.push(j);
    }
    Some(bins)
}

/// Exact search over printer contents for copies grouped by size.
struct Packing {
    /// Distinct positive times, decreasing.
    sizes: Vec<u64>,
    capacity: u64,
    /// `(printers left, remaining counts)` known not to fit.
    failed: HashSet<(usize, Vec<u64>)>,
    steps: u64,
    /// Copies of each size per filled printer.
    loads: Vec<Vec<u64>>,
}

impl Packing {
    fn fill(&mut self, remaining: &mut Vec<u64>, left: usize) -> bool {
        let Some(first) = remaining.iter().position(|&c| c > 0) else {
            return true;
        };
        let total: u64 = remaining.iter().zip(&self.sizes).map(|(c, t)| c * t).sum();
        if left == 0 || total > self.capacity * left as u64 {
            return false;
        }
        if self.failed.contains(&(left, remaining.clone())) {
            return false;
        }
        self.steps += 1;
        if self.steps > PACKING_STEPS {
            return false;
        }
        // this printer takes a copy of the largest remaining size
        let least = total.saturating_sub(self.capacity * (left as u64 - 1));
        let mut pattern = vec![0u64; self.sizes.len()];
        let found = self.pattern(first, first, 0, least, &mut pattern, remaining, left);
        if !found && self.steps <= PACKING_STEPS {
            self.failed.insert((left, remaining.clone()));
        }
        found
    }

    /// Chooses the count of size `s` in the current printer, then the rest.
    #[allow(clippy::too_many_arguments)]
    fn pattern(
        &mut self,
        first: usize,
        s: usize,
        load: u64,
        least: u64,
        pattern: &mut Vec<u64>,
        remaining: &mut Vec<u64>,
        left: usize,
    ) -> bool {
        if s == self.sizes.len() {
            if load < least {
                return false;
            }
            for (r, p) in remaining.iter_mut().zip(pattern.iter()) {
                *r -= p;
            }
            self.loads.push(pattern.clone());
            if self.fill(remaining, left - 1) {
                return true;
            }
            self.loads.pop();
            for (r, p) in remaining.iter_mut().zip(pattern.iter()) {
                *r += p;
            }
            return false;
        }
        self.steps += 1;
        if self.steps > PACKING_STEPS {
            return false;
        }
        let t = self.sizes[s];
        // the rest of the sizes can add at most this much
        let rest: u64 = (s + 1..self.sizes.len()).map(|x| remaining[x] * self.sizes[x]).sum();
        let most = remaining[s].min((self.capacity - load) / t);
        let low = u64::from(s == first);
        for c in (low..=most).rev() {
            if load + c * t + rest < least {
                break;
            }
            pattern[s] = c;
            if self.pattern(first, s + 1, load + c * t, least, pattern, remaining, left) {
                return true;
            }
            if self.steps > PACKING_STEPS {
                break;
            }
        }
        pattern[s] = 0;
        false
    }
}

/// Expected recourse value `sum_s q_s Q(a, s)` of a fixed packing.
pub fn evaluate_first_stage(instance: &Instance, decision: &FirstStageDecision, params: &MipParams) -> Result<Rational> {
    let mut total = Rational::zero();
    for (s, scenario) in instance.scenarios.iter().enumerate() {
        let (value, _) = solve_second_stage(instance, decision, s, params)?;
        total += &scenario.probability * value;
    }
    Ok(total)
}

fn round_values(values: &[f64], expected: usize) -> Result<Vec<u64>> {
    if values.len() != expected {
        return Err(Error::Dimension(format!(
            "{} solution values for {expected} variables",
            values.len()
        )));
    }
    values
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let r = v.round();
            if (v - r).abs() > INTEGRALITY_TOL || r < 0.0 {
                Err(Error::Internal(format!("variable {j} has non-integral value {v}")))
            } else {
                r.to_u64()
                    .ok_or_else(|| Error::Internal(format!("variable {j} value {v} out of range")))
            }
        })
        .collect()
}

fn plan_from(
    map: &VariableMap,
    block: usize,
    ints: &[u64],
    slot_of: impl Fn(usize) -> Option<usize>,
) -> Result<PrintPlan> {
    let get = |j: usize| {
        ints.get(j)
            .copied()
            .ok_or_else(|| Error::Dimension(format!("variable {j} outside the solution vector")))
    };
    let width = (0..map.printer_slots).filter(|&j| slot_of(j).is_some()).count();
    let scenario = *map
        .scenarios
        .get(block)
        .ok_or_else(|| Error::Dimension(format!("no scenario block {block}")))?;
    let mut plan = PrintPlan::empty(scenario, map.num_items, width as u64);
    for i in 0..map.num_items {
        plan.matched[i] = get(map.matched[block][i])?;
        if let Some(row) = &map.prints[block][i] {
            for (j, &var) in row.iter().enumerate() {
                let count = get(var)?;
                match slot_of(j) {
                    Some(k) => plan.prints[i][k] = count,
                    None if count > 0 => {
                        return Err(Error::Internal(format!(
                            "item {} printed on unpacked printer {} in scenario {}",
                            i + 1,
                            j + 1,
                            scenario + 1
                        )))
                    }
                    None => {}
                }
            }
        }
    }
    Ok(plan)
}

/// Reads the packing and recourse plans out of a solved deterministic
/// equivalent and re-checks them against the instance.
pub fn extract_solution(
    instance: &Instance,
    result: &MipResult,
    map: &VariableMap,
) -> Result<(FirstStageDecision, Vec<PrintPlan>)> {
    let values = result
        .values
        .as_ref()
        .ok_or_else(|| Error::Solver("solve produced no incumbent".into()))?;
    if map.items.len() != map.num_items || map.num_items != instance.num_items() {
        return Err(Error::Dimension(format!(
            "map covers {} items, instance has {}",
            map.items.len(),
            instance.num_items()
        )));
    }
    let ints = round_values(values, map.num_vars)?;
    let get = |j: usize| {
        ints.get(j)
            .copied()
            .ok_or_else(|| Error::Dimension(format!("variable {j} outside the solution vector")))
    };
    let items = map.items.iter().map(|&j| get(j)).collect::<Result<Vec<_>>>()?;
    let material = match map.material {
        Some(j) => get(j)?,
        None => 0,
    };
    let mut slot = vec![None; map.printer_slots];
    let mut packed = 0usize;
    for (j, &y) in map.printers.iter().enumerate() {
        if get(y)? > 0 {
            slot[j] = Some(packed);
            packed += 1;
        }
    }
    let decision = FirstStageDecision {
        items,
        printers: packed as u64,
        material,
    };
    let violations = check_first_stage(instance, &decision);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let mut plans = Vec::new();
    for block in 0..map.scenarios.len() {
        let plan = plan_from(map, block, &ints, |j| slot[j])?;
        let violations = check_plan_feasible(instance, &decision, &plan);
        if !violations.is_empty() {
            return Err(Error::Infeasible(violations));
        }
        plans.push(plan);
    }
    Ok((decision, plans))
}

/// Solver vector of a full model for a packing and its plans, with the
/// packed printers in the first slots.
pub fn solution_vector(map: &VariableMap, decision: &FirstStageDecision, plans: &[PrintPlan]) -> Result<Vec<f64>> {
    let printers = usize::try_from(decision.printers).unwrap_or(usize::MAX);
    if decision.items.len() != map.items.len() || plans.len() != map.scenarios.len() || printers > map.printers.len() {
        return Err(Error::Dimension("packing or plans do not fit the model".into()));
    }
    let mut x = vec![0.0; map.num_vars];
    for (&j, &a) in map.items.iter().zip(&decision.items) {
        x[j] = a as f64;
    }
    match map.material {
        Some(b) => x[b] = decision.material as f64,
        None if decision.material > 0 => return Err(Error::Dimension("model has no material variable".into())),
        None => {}
    }
    for &y in &map.printers[..printers] {
        x[y] = 1.0;
    }
    for (block, plan) in plans.iter().enumerate() {
        if plan.matched.len() != map.num_items || plan.prints.len() != map.num_items {
            return Err(Error::Dimension(format!("plan {} has the wrong item count", block + 1)));
        }
        for i in 0..map.num_items {
            x[map.matched[block][i]] = plan.matched[i] as f64;
            for (k, &count) in plan.prints[i].iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let var = map.prints[block][i]
                    .as_ref()
                    .and_then(|row| row.get(k))
                    .ok_or_else(|| Error::Dimension(format!("no variable for item {} on printer {}", i + 1, k + 1)))?;
                x[*var] = count as f64;
            }
        }
    }
    Ok(x)
}

/// Search help for the deterministic equivalent.
///
/// - Branching fixes every `a_i` and `y_j` before any recourse variable.
/// - Once they are fixed the subtree splits by scenario: `a_b` takes all
///   leftover capacity (more material never hurts) and each scenario's
///   recourse program is solved on its own.
/// - At fractional nodes the packing is rounded down and completed the
///   same way, with a node cap on the recourse solves.
pub struct DetEquivHook<'a> {
    instance: &'a Instance,
    map: &'a VariableMap,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    exact: HashMap<FirstStageDecision, Option<Vec<Option<PrintPlan>>>>,
    proposed: HashSet<FirstStageDecision>,
    budget: usize,
}

/// Distinct rounded packings completed per solve at fractional nodes.
pub const HEURISTIC_BUDGET: usize = 200;

const RECOURSE_HEURISTIC_NODES: u64 = 2000;
/// Node cap for the recourse solves that close a node; past it the node is
/// left to the ordinary search.
const RECOURSE_CLOSE_NODES: u64 = 20_000;

impl<'a> DetEquivHook<'a> {
    pub fn new(instance: &'a Instance, problem: &MipProblem, map: &'a VariableMap) -> Self {
        let bound = |r: &Rational| r.to_f64().unwrap_or(f64::NAN);
        DetEquivHook {
            instance,
            map,
            root_lower: problem.lp.lower.iter().map(bound).collect(),
            root_upper: problem
                .lp
                .upper
                .iter()
                .map(|u| u.as_ref().map_or(f64::INFINITY, bound))
                .collect(),
            exact: HashMap::new(),
            proposed: HashSet::new(),
            budget: HEURISTIC_BUDGET,
        }
    }

    fn usable(&self, node: &NodeView<'_>) -> bool {
        node.values.len() == self.map.num_vars
            && node.lower.len() >= self.map.num_vars
            && self.map.items.len() == self.instance.num_items()
            && self.root_lower.len() == self.map.num_vars
    }

    fn first_stage(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.printers.iter().chain(&self.map.items).copied()
    }

    fn is_first_stage(&self, j: usize) -> bool {
        self.map.items.contains(&j) || self.map.printers.contains(&j) || self.map.material == Some(j)
    }

    /// Packs `items` and the printers in `slots`, then adds as much material
    /// as fits in `[lower, upper]`.
    fn fill(&self, items: Vec<u64>, slots: &[usize], material: (u64, u64)) -> Option<FirstStageDecision> {
        let inst = self.instance;
        let printers = slots.len() as u64;
        let mut w = printers * inst.printer.weight;
        let mut v = printers * inst.printer.volume;
        for (item, &a) in inst.items.iter().zip(&items) {
            w += item.weight * a;
            v += item.volume * a;
        }
        if w > inst.capacity.weight || v > inst.capacity.volume {
            return None;
        }
        let (lo, hi) = material;
        let amount = if printers == 0 {
            0
        } else {
            let room = [
                (inst.capacity.weight - w, inst.material.weight),
                (inst.capacity.volume - v, inst.material.volume),
            ];
            room.iter()
                .filter(|(_, size)| *size > 0)
                .map(|(left, size)| left / size)
                .fold(hi.min(big_m(inst).ok()?), u64::min)
        };
        (amount >= lo).then_some(FirstStageDecision {
            items,
            printers,
            material: amount,
        })
    }

    /// Recourse plan of every scenario for a packing, each solve capped at
    /// `node_limit` nodes. With `exact` set, `None` is returned unless every
    /// solve is proven optimal; otherwise a scenario may come back empty.
    fn plans(&self, decision: &FirstStageDecision, node_limit: u64, exact: bool) -> Option<Vec<Option<PrintPlan>>> {
        let params = MipParams {
            relative_gap: 0.0,
            node_limit: Some(node_limit),
            time_limit: None,
        };
        let mut plans = Vec::with_capacity(self.map.scenarios.len());
        for &s in &self.map.scenarios {
            let (status, found) = recourse(self.instance, decision, s, &params).ok()?;
            if exact && (status != MipStatus::OptimalWithinGap || found.is_none()) {
                return None;
            }
            plans.push(found.map(|(_, plan)| plan));
        }
        Some(plans)
    }

    /// Full solution vector for a packing and its plans, the printers placed
    /// in `slots`. A missing plan matches what it can physically.
    fn embed(&self, decision: &FirstStageDecision, slots: &[usize], plans: &[Option<PrintPlan>]) -> Vec<f64> {
        let map = self.map;
        let mut x = vec![0.0; map.num_vars];
        for (&j, &a) in map.items.iter().zip(&decision.items) {
            x[j] = a as f64;
        }
        if let Some(b) = map.material {
            x[b] = decision.material as f64;
        }
        for &k in slots {
            x[map.printers[k]] = 1.0;
        }
        for (block, (&s, plan)) in map.scenarios.iter().zip(plans).enumerate() {
            let demand = &self.instance.scenarios[s].demand;
            for i in 0..map.num_items {
                match plan {
                    Some(plan) => {
                        x[map.matched[block][i]] = plan.matched[i] as f64;
                        if let Some(full) = &map.prints[block][i] {
                            for (&k, &p) in slots.iter().zip(&plan.prints[i]) {
                                x[full[k]] = p as f64;
                            }
                        }
                    }
                    None => x[map.matched[block][i]] = decision.items[i].min(demand[i]) as f64,
                }
            }
        }
        x
    }

    fn material_range(&self, node: &NodeView<'_>) -> (u64, u64) {
        match self.map.material {
            Some(b) => (
                (node.lower[b] - INTEGRALITY_TOL).ceil().max(0.0) as u64,
                (node.upper[b] + INTEGRALITY_TOL).floor().max(0.0) as u64,
            ),
            None => (0, 0),
        }
    }
}

impl DetEquivHook<'_> {
    /// Item variable passing `keep` with the largest share of the capacity;
    /// the lowest index wins ties.
    fn largest_item(&self, keep: impl Fn(usize) -> bool) -> Option<usize> {
        let inst = self.instance;
        let share = |i: usize| {
            inst.items[i].weight as f64 / inst.capacity.weight.max(1) as f64
                + inst.items[i].volume as f64 / inst.capacity.volume.max(1) as f64
        };
        let mut best: Option<usize> = None;
        for (i, &j) in self.map.items.iter().enumerate() {
            if keep(j) && best.is_none_or(|b| share(i) > share(b)) {
                best = Some(i);
            }
        }
        best.map(|i| self.map.items[i])
    }
}

fn fixed(node: &NodeView<'_>, j: usize) -> bool {
    node.upper[j] - node.lower[j] < 0.5
}

impl NodeHook for DetEquivHook<'_> {
    fn close(&mut self, node: &NodeView<'_>) -> Option<Closure> {
        if !self.usable(node) || !self.first_stage().all(|j| fixed(node, j)) {
            return None;
        }
        let untouched = (0..self.map.num_vars)
            .filter(|&j| !self.is_first_stage(j))
            .all(|j| node.lower[j] == self.root_lower[j] && node.upper[j] == self.root_upper[j]);
        if !untouched {
            return None;
        }
        let items: Vec<u64> = self.map.items.iter().map(|&j| node.lower[j].round() as u64).collect();
        let slots: Vec<usize> = (0..self.map.printers.len())
            .filter(|&k| node.lower[self.map.printers[k]] > 0.5)
            .collect();
        let Some(decision) = self.fill(items, &slots, self.material_range(node)) else {
            return Some(Closure::Empty);
        };
        if !self.exact.contains_key(&decision) {
            let plans = self.plans(&decision, RECOURSE_CLOSE_NODES, true);
            self.exact.insert(decision.clone(), plans);
        }
        let plans = self.exact[&decision].as_deref()?;
        Some(Closure::Solved(self.embed(&decision, &slots, plans)))
    }

    fn propose(&mut self, node: &NodeView<'_>) -> Vec<Vec<f64>> {
        if !self.usable(node) {
            return Vec::new();
        }
        let x = node.values;
        let floor = |v: f64| (v + INTEGRALITY_TOL).floor().max(0.0) as u64;
        let items: Vec<u64> = self.map.items.iter().map(|&j| floor(x[j])).collect();
        let used: f64 = self.map.printers.iter().map(|&j| x[j]).sum();
        let slots = self.map.printers.len();
        let low = (floor(used) as usize).min(slots);
        let mut counts = vec![low];
        if low < slots && used > low as f64 + INTEGRALITY_TOL {
            counts.push(low + 1);
        }
        let mut out = Vec::new();
        for count in counts {
            if self.proposed.len() >= self.budget {
                break;
            }
            let prefix: Vec<usize> = (0..count).collect();
            let Some(decision) = self.fill(items.clone(), &prefix, (0, u64::MAX)) else { continue };
            if !self.proposed.insert(decision.clone()) {
                continue;
            }
            if let Some(plans) = self.plans(&decision, RECOURSE_HEURISTIC_NODES, false) {
                out.push(self.embed(&decision, &prefix, &plans));
            }
        }
        out
    }

    fn branch(&mut self, node: &NodeView<'_>) -> Option<(usize, f64)> {
        if !self.usable(node) {
            return None;
        }
        let fractional = |j: usize| {
            let v = node.values[j];
            (v - v.round()).abs() > INTEGRALITY_TOL
        };
        if let Some(j) = self.map.printers.iter().copied().find(|&j| fractional(j)) {
            return Some((j, node.values[j]));
        }
        if let Some(j) = self.largest_item(fractional) {
            return Some((j, node.values[j]));
        }
        let j = match self.map.printers.iter().copied().find(|&j| !fixed(node, j)) {
            Some(j) => j,
            None => self.largest_item(|j| !fixed(node, j))?,
        };
        let v = node.values[j].round();
        Some(if v < node.upper[j] - 0.5 { (j, v) } else { (j, v - 1.0) })
    }
}

/// Solves a model from [`build_det_equiv`] with [`DetEquivHook`],
/// optionally seeded with a feasible vector.
pub fn solve_det_equiv(
    instance: &Instance,
    problem: &MipProblem,
    map: &VariableMap,
    params: &MipParams,
    start: Option<&[f64]>,
) -> Result<MipResult> {
    let mut hook = DetEquivHook::new(instance, problem, map);
    solve_mip_with(problem, params, start, Some(&mut hook))
}
