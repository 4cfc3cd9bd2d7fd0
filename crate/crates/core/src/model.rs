//! Domain types for the two-stage 3D-printing knapsack, together with the
//! feasibility checks and exact reward accounting every solver path shares.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Material and time needed to print one copy of an item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrintSpec {
    pub material: u64,
    pub time: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Item {
    pub weight: u64,
    pub volume: u64,
    pub reward: u64,
    /// `Some` exactly when the item can be printed.
    pub print: Option<PrintSpec>,
}

impl Item {
    pub fn physical(weight: u64, volume: u64, reward: u64) -> Self {
        Item {
            weight,
            volume,
            reward,
            print: None,
        }
    }

    pub fn printable(weight: u64, volume: u64, reward: u64, material: u64, time: u64) -> Self {
        Item {
            weight,
            volume,
            reward,
            print: Some(PrintSpec { material, time }),
        }
    }

    pub fn is_printable(&self) -> bool {
        self.print.is_some()
    }

    /// Whether a single copy fits in a printer's time budget. Items that do
    /// not are never printed by any solver path.
    pub fn printable_within(&self, time_budget: u64) -> bool {
        matches!(self.print, Some(spec) if spec.time <= time_budget)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrinterSpec {
    pub weight: u64,
    pub volume: u64,
    pub time_budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MaterialSpec {
    pub weight: u64,
    pub volume: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Capacity {
    pub weight: u64,
    pub volume: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub probability: Rational,
    pub demand: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Instance {
    pub items: Vec<Item>,
    pub printer: PrinterSpec,
    pub material: MaterialSpec,
    pub capacity: Capacity,
    /// Reward multiplier for printed copies.
    pub alpha: Rational,
    pub scenarios: Vec<Scenario>,
}

impl Instance {
    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn printable_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.items
            .iter()
            .enumerate()
            .filter(|(_, item)| item.is_printable())
            .map(|(i, _)| i)
    }

    /// Largest demand for item `i` over all scenarios.
    pub fn max_demand(&self, i: usize) -> u64 {
        self.scenarios
            .iter()
            .map(|s| s.demand.get(i).copied().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// Errors with every violation when the instance is not valid.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_instance(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(violations))
        }
    }
}

/// The packing vector: item copies, printers and material units.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FirstStageDecision {
    pub items: Vec<u64>,
    pub printers: u64,
    pub material: u64,
}

impl FirstStageDecision {
    pub fn empty(num_items: usize) -> Self {
        FirstStageDecision {
            items: vec![0; num_items],
            printers: 0,
            material: 0,
        }
    }
}

/// Recourse for one scenario. `prints[i][j]` is the number of copies of
/// item `i` printed on printer `j`; every row has one entry per packed printer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrintPlan {
    pub scenario: usize,
    pub matched: Vec<u64>,
    pub prints: Vec<Vec<u64>>,
}

impl PrintPlan {
    pub fn empty(scenario: usize, num_items: usize, printers: u64) -> Self {
        PrintPlan {
            scenario,
            matched: vec![0; num_items],
            prints: vec![vec![0; printers as usize]; num_items],
        }
    }

    pub fn printed(&self, item: usize) -> u64 {
        self.prints.get(item).map(|row| row.iter().sum()).unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    NoScenarios,
    ProbabilityRange,
    ProbabilitySum,
    AlphaRange,
    DemandLength,
    MaterialSize,
    MissingPrintFields,
    UnexpectedPrintFields,
    DecisionLength,
    WeightCapacity,
    VolumeCapacity,
    MaterialWithoutPrinter,
    PlanShape,
    MatchedExceedsPacked,
    DemandExceeded,
    PrintsNonPrintable,
    MaterialExceeded,
    TimeExceeded,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NoScenarios => "no_scenarios",
            ViolationCode::ProbabilityRange => "probability_range",
            ViolationCode::ProbabilitySum => "probability_sum",
            ViolationCode::AlphaRange => "alpha_range",
            ViolationCode::DemandLength => "demand_length",
            ViolationCode::MaterialSize => "material_size",
            ViolationCode::MissingPrintFields => "missing_print_fields",
            ViolationCode::UnexpectedPrintFields => "unexpected_print_fields",
            ViolationCode::DecisionLength => "decision_length",
            ViolationCode::WeightCapacity => "weight_capacity",
            ViolationCode::VolumeCapacity => "volume_capacity",
            ViolationCode::MaterialWithoutPrinter => "material_without_printer",
            ViolationCode::PlanShape => "plan_shape",
            ViolationCode::MatchedExceedsPacked => "matched_exceeds_packed",
            ViolationCode::DemandExceeded => "demand_exceeded",
            ViolationCode::PrintsNonPrintable => "prints_non_printable",
            ViolationCode::MaterialExceeded => "material_exceeded",
            ViolationCode::TimeExceeded => "time_exceeded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    pub fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Violation {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code.as_str(), self.message)
    }
}

pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.num_items();

    if instance.scenarios.is_empty() {
        out.push(Violation::new(ViolationCode::NoScenarios, "at least one scenario is required"));
    }
    let mut total = Rational::zero();
    for (s, scenario) in instance.scenarios.iter().enumerate() {
        if scenario.probability.is_negative() || scenario.probability > Rational::one() {
            out.push(Violation::new(
                ViolationCode::ProbabilityRange,
                format!("scenario {s} probability {} outside [0, 1]", scenario.probability),
            ));
        }
        if scenario.demand.len() != n {
            out.push(Violation::new(
                ViolationCode::DemandLength,
                format!("scenario {s} has {} demands for {n} items", scenario.demand.len()),
            ));
        }
        total += &scenario.probability;
    }
    if !instance.scenarios.is_empty() && !total.is_one() {
        out.push(Violation::new(
            ViolationCode::ProbabilitySum,
            format!("probabilities sum to {total}, expected 1"),
        ));
    }
    if instance.alpha.is_negative() || instance.alpha > Rational::one() {
        out.push(Violation::new(
            ViolationCode::AlphaRange,
            format!("alpha {} outside [0, 1]", instance.alpha),
        ));
    }
    if instance.material.weight == 0 || instance.material.volume == 0 {
        out.push(Violation::new(
            ViolationCode::MaterialSize,
            "material weight and volume must both be at least 1",
        ));
    }
    out
}

/// Capacity and printer-linking checks on a packing.
pub fn check_first_stage(instance: &Instance, decision: &FirstStageDecision) -> Vec<Violation> {
    let mut out = Vec::new();
    if decision.items.len() != instance.num_items() {
        out.push(Violation::new(
            ViolationCode::DecisionLength,
            format!("{} item counts for {} items", decision.items.len(), instance.num_items()),
        ));
        return out;
    }
    let weight: u128 = decision
        .items
        .iter()
        .zip(&instance.items)
        .map(|(&a, item)| a as u128 * item.weight as u128)
        .sum::<u128>()
        + decision.printers as u128 * instance.printer.weight as u128
        + decision.material as u128 * instance.material.weight as u128;
    let volume: u128 = decision
        .items
        .iter()
        .zip(&instance.items)
        .map(|(&a, item)| a as u128 * item.volume as u128)
        .sum::<u128>()
        + decision.printers as u128 * instance.printer.volume as u128
        + decision.material as u128 * instance.material.volume as u128;
    if weight > instance.capacity.weight as u128 {
        out.push(Violation::new(
            ViolationCode::WeightCapacity,
            format!("packed weight {weight} exceeds {}", instance.capacity.weight),
        ));
    }
    if volume > instance.capacity.volume as u128 {
        out.push(Violation::new(
            ViolationCode::VolumeCapacity,
            format!("packed volume {volume} exceeds {}", instance.capacity.volume),
        ));
    }
    if decision.material > 0 && decision.printers == 0 {
        out.push(Violation::new(
            ViolationCode::MaterialWithoutPrinter,
            "material packed without a printer",
        ));
    }
    out
}

pub fn matched_quantities(decision: &FirstStageDecision, scenario: &Scenario) -> Result<Vec<u64>> {
    if decision.items.len() != scenario.demand.len() {
        return Err(Error::Dimension(format!(
            "decision has {} items, scenario demand has {}",
            decision.items.len(),
            scenario.demand.len()
        )));
    }
    Ok(decision
        .items
        .iter()
        .zip(&scenario.demand)
        .map(|(&a, &d)| a.min(d))
        .collect())
}

/// Checks every recourse constraint of `plan` under `decision`.
pub fn check_plan_feasible(
    instance: &Instance,
    decision: &FirstStageDecision,
    plan: &PrintPlan,
) -> Vec<Violation> {
    let mut out = plan_shape(instance, plan, Some(decision.printers));
    if !out.is_empty() {
        return out;
    }
    if decision.items.len() != instance.num_items() {
        out.push(Violation::new(
            ViolationCode::DecisionLength,
            format!("{} item counts for {} items", decision.items.len(), instance.num_items()),
        ));
        return out;
    }
    for (i, (&matched, &packed)) in plan.matched.iter().zip(&decision.items).enumerate() {
        if matched > packed {
            out.push(Violation::new(
                ViolationCode::MatchedExceedsPacked,
                format!("item {i}: matched {matched} exceeds packed {packed}"),
            ));
        }
    }
    out.extend(demand_and_time(instance, plan));
    let material: u128 = instance
        .items
        .iter()
        .enumerate()
        .filter_map(|(i, item)| item.print.map(|spec| plan.printed(i) as u128 * spec.material as u128))
        .sum();
    if material > decision.material as u128 {
        out.push(Violation::new(
            ViolationCode::MaterialExceeded,
            format!(
                "scenario {}: prints use {material} material, {} packed",
                plan.scenario, decision.material
            ),
        ));
    }
    out
}

fn plan_shape(instance: &Instance, plan: &PrintPlan, printers: Option<u64>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = instance.num_items();
    if plan.scenario >= instance.num_scenarios() {
        out.push(Violation::new(
            ViolationCode::PlanShape,
            format!("plan refers to unknown scenario {}", plan.scenario),
        ));
    }
    if plan.matched.len() != n || plan.prints.len() != n {
        out.push(Violation::new(
            ViolationCode::PlanShape,
            format!(
                "plan has {} matched and {} print rows for {n} items",
                plan.matched.len(),
                plan.prints.len()
            ),
        ));
        return out;
    }
    let width = printers.map(|p| p as usize).unwrap_or_else(|| plan.prints.first().map_or(0, Vec::len));
    if plan.prints.iter().any(|row| row.len() != width) {
        out.push(Violation::new(
            ViolationCode::PlanShape,
            format!("every print row needs {width} printer entries"),
        ));
    }
    out
}

fn demand_and_time(instance: &Instance, plan: &PrintPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let demand = &instance.scenarios[plan.scenario].demand;
    for (i, item) in instance.items.iter().enumerate() {
        let printed = plan.printed(i);
        if !item.is_printable() && printed > 0 {
            out.push(Violation::new(
                ViolationCode::PrintsNonPrintable,
                format!("item {i} is not printable but {printed} copies are printed"),
            ));
        }
        let served = plan.matched[i] as u128 + printed as u128;
        if served > demand[i] as u128 {
            out.push(Violation::new(
                ViolationCode::DemandExceeded,
                format!(
                    "scenario {}: item {i} serves {served} but demand is {}",
                    plan.scenario, demand[i]
                ),
            ));
        }
    }
    let printers = plan.prints.first().map_or(0, Vec::len);
    for j in 0..printers {
        let time: u128 = instance
            .items
            .iter()
            .zip(&plan.prints)
            .filter_map(|(item, row)| item.print.map(|spec| row[j] as u128 * spec.time as u128))
            .sum();
        if time > instance.printer.time_budget as u128 {
            out.push(Violation::new(
                ViolationCode::TimeExceeded,
                format!(
                    "scenario {}: printer {} busy for {time}, budget {}",
                    plan.scenario,
                    j + 1,
                    instance.printer.time_budget
                ),
            ));
        }
    }
    out
}

/// Reward collected by one scenario's plan (not weighted by probability).
///
/// Only the constraints that do not depend on the packing are checked here;
/// use [`check_plan_feasible`] for the full set.
pub fn scenario_reward(instance: &Instance, plan: &PrintPlan) -> Result<Rational> {
    let mut violations = plan_shape(instance, plan, None);
    if violations.is_empty() {
        violations = demand_and_time(instance, plan);
    }
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let mut physical = 0u128;
    let mut printed = 0u128;
    for (i, item) in instance.items.iter().enumerate() {
        physical += plan.matched[i] as u128 * item.reward as u128;
        printed += plan.printed(i) as u128 * item.reward as u128;
    }
    Ok(big(physical) + &instance.alpha * big(printed))
}

/// Probability-weighted reward of one plan per scenario.
pub fn expected_reward(
    instance: &Instance,
    decision: &FirstStageDecision,
    plans: &[PrintPlan],
) -> Result<Rational> {
    let mut total = Rational::zero();
    for (s, scenario) in instance.scenarios.iter().enumerate() {
        let plan = plans.iter().find(|p| p.scenario == s).ok_or(Error::MissingPlan(s))?;
        let violations = check_plan_feasible(instance, decision, plan);
        if !violations.is_empty() {
            return Err(Error::Infeasible(violations));
        }
        total += &scenario.probability * scenario_reward(instance, plan)?;
    }
    Ok(total)
}

/// Expected reward if every demand unit were met by a physical copy.
pub fn perfect_information_reward(instance: &Instance) -> Rational {
    instance
        .scenarios
        .iter()
        .map(|scenario| {
            let total: u128 = scenario
                .demand
                .iter()
                .zip(&instance.items)
                .map(|(&d, item)| d as u128 * item.reward as u128)
                .sum();
            &scenario.probability * big(total)
        })
        .sum()
}

fn big(value: u128) -> Rational {
    Rational::from_integer(value.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example_one;
    use crate::rational::ratio;

    fn strategy_three() -> FirstStageDecision {
        FirstStageDecision {
            items: vec![0, 0],
            printers: 1,
            material: 2,
        }
    }

    fn plan(scenario: usize, matched: Vec<u64>, prints: Vec<Vec<u64>>) -> PrintPlan {
        PrintPlan {
            scenario,
            matched,
            prints,
        }
    }

    #[test]
    fn example_one_is_valid() {
        assert!(validate_instance(&example_one()).is_empty());
    }

    #[test]
    fn probability_sum_violation() {
        let mut instance = example_one();
        instance.scenarios[0].probability = ratio(1, 2);
        instance.scenarios[1].probability = ratio(2, 5);
        let codes: Vec<_> = validate_instance(&instance).iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::ProbabilitySum]);
    }

    #[test]
    fn alpha_range_violation() {
        let mut instance = example_one();
        instance.alpha = ratio(6, 5);
        let codes: Vec<_> = validate_instance(&instance).iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::AlphaRange]);
    }

    #[test]
    fn reports_every_violation_at_once() {
        let mut instance = example_one();
        instance.alpha = ratio(-1, 2);
        instance.material.weight = 0;
        instance.scenarios[0].demand.pop();
        instance.scenarios[1].probability = ratio(3, 2);
        let codes: Vec<_> = validate_instance(&instance).iter().map(|v| v.code).collect();
        assert!(codes.contains(&ViolationCode::AlphaRange));
        assert!(codes.contains(&ViolationCode::MaterialSize));
        assert!(codes.contains(&ViolationCode::DemandLength));
        assert!(codes.contains(&ViolationCode::ProbabilityRange));
        assert!(codes.contains(&ViolationCode::ProbabilitySum));

        instance.scenarios.clear();
        let codes: Vec<_> = validate_instance(&instance).iter().map(|v| v.code).collect();
        assert!(codes.contains(&ViolationCode::NoScenarios));
    }

    #[test]
    fn matched_quantities_examples() {
        let instance = example_one();
        let a = FirstStageDecision {
            items: vec![1, 0],
            printers: 0,
            material: 0,
        };
        assert_eq!(matched_quantities(&a, &instance.scenarios[0]).unwrap(), vec![1, 0]);
        assert_eq!(matched_quantities(&a, &instance.scenarios[1]).unwrap(), vec![0, 0]);
        let zero = FirstStageDecision::empty(2);
        assert_eq!(matched_quantities(&zero, &instance.scenarios[1]).unwrap(), vec![0, 0]);
        let short = FirstStageDecision::empty(1);
        assert!(matches!(
            matched_quantities(&short, &instance.scenarios[0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scenario_reward_examples() {
        let instance = example_one();
        let s1 = plan(0, vec![0, 0], vec![vec![1], vec![0]]);
        assert_eq!(scenario_reward(&instance, &s1).unwrap(), ratio(4, 5));
        let s2 = plan(1, vec![0, 0], vec![vec![0], vec![1]]);
        assert_eq!(scenario_reward(&instance, &s2).unwrap(), ratio(8, 5));
        let empty = PrintPlan::empty(0, 2, 1);
        assert_eq!(scenario_reward(&instance, &empty).unwrap(), Rational::zero());
    }

    #[test]
    fn scenario_reward_rejects_overserved_demand() {
        let instance = example_one();
        let bad = plan(1, vec![0, 0], vec![vec![1], vec![0]]);
        assert!(matches!(scenario_reward(&instance, &bad), Err(Error::Infeasible(_))));
    }

    #[test]
    fn plan_feasibility_examples() {
        let mut instance = example_one();
        let decision = strategy_three();
        let ok = plan(0, vec![0, 0], vec![vec![1], vec![0]]);
        assert!(check_plan_feasible(&instance, &decision, &ok).is_empty());

        instance.scenarios[0].demand[0] = 2;
        instance.printer.time_budget = 2;
        let too_much = plan(0, vec![0, 0], vec![vec![2], vec![0]]);
        let codes: Vec<_> = check_plan_feasible(&instance, &decision, &too_much)
            .iter()
            .map(|v| v.code)
            .collect();
        assert_eq!(codes, vec![ViolationCode::MaterialExceeded]);

        let instance = example_one();
        let decision = FirstStageDecision {
            items: vec![0, 0],
            printers: 1,
            material: 4,
        };
        let slow = plan(0, vec![0, 0], vec![vec![1], vec![1]]);
        let codes: Vec<_> = check_plan_feasible(&instance, &decision, &slow)
            .iter()
            .map(|v| v.code)
            .collect();
        assert!(codes.contains(&ViolationCode::TimeExceeded));
    }

    #[test]
    fn matched_cannot_exceed_packing() {
        let instance = example_one();
        let decision = FirstStageDecision::empty(2);
        let bad = plan(0, vec![1, 0], vec![vec![], vec![]]);
        let codes: Vec<_> = check_plan_feasible(&instance, &decision, &bad)
            .iter()
            .map(|v| v.code)
            .collect();
        assert_eq!(codes, vec![ViolationCode::MatchedExceedsPacked]);
    }

    #[test]
    fn expected_reward_examples() {
        let instance = example_one();
        let plans = vec![
            plan(0, vec![0, 0], vec![vec![1], vec![0]]),
            plan(1, vec![0, 0], vec![vec![0], vec![1]]),
        ];
        assert_eq!(expected_reward(&instance, &strategy_three(), &plans).unwrap(), ratio(26, 25));

        let strategy_one = FirstStageDecision {
            items: vec![1, 0],
            printers: 0,
            material: 0,
        };
        let plans = vec![plan(0, vec![1, 0], vec![vec![], vec![]]), plan(1, vec![0, 0], vec![vec![], vec![]])];
        assert_eq!(expected_reward(&instance, &strategy_one, &plans).unwrap(), ratio(7, 10));

        let empty = FirstStageDecision::empty(2);
        let plans = vec![PrintPlan::empty(0, 2, 0), PrintPlan::empty(1, 2, 0)];
        assert_eq!(expected_reward(&instance, &empty, &plans).unwrap(), Rational::zero());

        assert!(matches!(
            expected_reward(&instance, &empty, &plans[..1]),
            Err(Error::MissingPlan(1))
        ));
    }

    #[test]
    fn first_stage_checks() {
        let instance = example_one();
        assert!(check_first_stage(&instance, &strategy_three()).is_empty());
        let heavy = FirstStageDecision {
            items: vec![1, 0],
            printers: 1,
            material: 0,
        };
        let codes: Vec<_> = check_first_stage(&instance, &heavy).iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::WeightCapacity, ViolationCode::VolumeCapacity]);
        let orphan = FirstStageDecision {
            items: vec![0, 0],
            printers: 0,
            material: 1,
        };
        let codes: Vec<_> = check_first_stage(&instance, &orphan).iter().map(|v| v.code).collect();
        assert_eq!(codes, vec![ViolationCode::MaterialWithoutPrinter]);
    }
}
