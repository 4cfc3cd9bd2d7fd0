//! Exhaustive reference solvers for tiny instances.
//!
//! Both enumerations search the same finite space as the deterministic
//! equivalent: the variable bounds come from the same helpers, and items
//! whose print time exceeds `T` are never printed.

use std::collections::HashMap;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bound::printer_upper_bound;
use crate::det_equiv::{big_m, item_upper, print_upper};
use crate::error::{Error, Result};
use crate::model::{
    check_first_stage, Capacity, FirstStageDecision, Instance, Item, MaterialSpec, PrintPlan, PrinterSpec, Scenario,
};
use crate::rational::{int, ratio, Rational};

pub const DEFAULT_STATE_LIMIT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_states: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_states: DEFAULT_STATE_LIMIT,
        }
    }
}

struct Counter {
    used: u64,
    limit: u64,
}

impl Counter {
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.limit {
            Err(Error::EnumerationLimit { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

struct Recourse<'a> {
    instance: &'a Instance,
    demand: &'a [u64],
    packed: &'a [u64],
    printable: Vec<usize>,
    upper: Vec<u64>,
    printers: usize,
    material: u64,
    prints: Vec<Vec<u64>>,
    time: Vec<u64>,
    material_used: u64,
    best: Option<(Rational, Vec<Vec<u64>>)>,
}

impl Recourse<'_> {
    fn value(&self) -> Rational {
        let mut physical = 0u128;
        let mut printed = 0u128;
        for (i, item) in self.instance.items.iter().enumerate() {
            let made: u64 = self.prints[i].iter().sum();
            let matched = self.packed[i].min(self.demand[i] - made);
            physical += matched as u128 * item.reward as u128;
            printed += made as u128 * item.reward as u128;
        }
        Rational::from_integer(physical.into()) + &self.instance.alpha * Rational::from_integer(printed.into())
    }

    fn search(&mut self, cell: usize, counter: &mut Counter) -> Result<()> {
        counter.tick()?;
        if cell == self.printable.len() * self.printers {
            let value = self.value();
            if self.best.as_ref().is_none_or(|(best, _)| value > *best) {
                self.best = Some((value, self.prints.clone()));
            }
            return Ok(());
        }
        let k = cell / self.printers;
        let j = cell % self.printers;
        let i = self.printable[k];
        let spec = self.instance.items[i].print.expect("printable item");
        let made: u64 = self.prints[i].iter().sum();
        let budget = self.instance.printer.time_budget;
        let mut v = 0;
        loop {
            self.search(cell + 1, counter)?;
            v += 1;
            let fits = v <= self.upper[k]
                && made + v <= self.demand[i]
                && self.time[j] + spec.time <= budget
                && self.material_used + spec.material <= self.material;
            if !fits {
                break;
            }
            self.prints[i][j] = v;
            self.time[j] += spec.time;
            self.material_used += spec.material;
        }
        v -= 1;
        self.prints[i][j] = 0;
        self.time[j] -= v * spec.time;
        self.material_used -= v * spec.material;
        Ok(())
    }
}

fn second_stage(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
    counter: &mut Counter,
) -> Result<(Rational, PrintPlan)> {
    let demand = &instance.scenarios[scenario].demand;
    let printers = decision.printers as usize;
    let printable: Vec<usize> = if printers == 0 {
        Vec::new()
    } else {
        instance.printable_indices().collect()
    };
    let upper = printable
        .iter()
        .map(|&i| print_upper(instance, i, demand[i], decision.material))
        .collect();
    let mut search = Recourse {
        instance,
        demand,
        packed: &decision.items,
        printable,
        upper,
        printers,
        material: decision.material,
        prints: vec![vec![0; printers]; instance.num_items()],
        time: vec![0; printers],
        material_used: 0,
        best: None,
    };
    search.search(0, counter)?;
    let (value, prints) = search.best.expect("the empty plan is always feasible");
    let matched = (0..instance.num_items())
        .map(|i| decision.items[i].min(demand[i] - prints[i].iter().sum::<u64>()))
        .collect();
    Ok((
        value,
        PrintPlan {
            scenario,
            matched,
            prints,
        },
    ))
}

/// Optimal recourse `Q(a, s)` by enumerating every print assignment.
pub fn brute_force_second_stage(
    instance: &Instance,
    decision: &FirstStageDecision,
    scenario: usize,
    limits: OracleLimits,
) -> Result<(Rational, PrintPlan)> {
    instance.ensure_valid()?;
    let violations = check_first_stage(instance, decision);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    if scenario >= instance.num_scenarios() {
        return Err(Error::InvalidArgument(format!("scenario {scenario} out of range")));
    }
    let mut counter = Counter {
        used: 0,
        limit: limits.max_states,
    };
    second_stage(instance, decision, scenario, &mut counter)
}

/// Optimal expected reward over every feasible packing with at most `Z`
/// printers. Ties keep the lexicographically smallest packing.
pub fn brute_force_full(instance: &Instance, limits: OracleLimits) -> Result<(Rational, FirstStageDecision)> {
    instance.ensure_valid()?;
    let n = instance.num_items();
    let z = printer_upper_bound(instance).z;
    let m_cap = big_m(instance)?;
    let upper: Vec<u64> = (0..n).map(|i| item_upper(instance, i)).collect();
    let mut counter = Counter {
        used: 0,
        limit: limits.max_states,
    };
    let mut cache: HashMap<(usize, Vec<u64>, u64, u64), Rational> = HashMap::new();
    let mut best: Option<(Rational, FirstStageDecision)> = None;
    let mut items = vec![0u64; n];
    loop {
        for printers in 0..=z {
            for material in 0..=m_cap {
                counter.tick()?;
                let decision = FirstStageDecision {
                    items: items.clone(),
                    printers,
                    material,
                };
                if !check_first_stage(instance, &decision).is_empty() {
                    continue;
                }
                let mut total = Rational::zero();
                for (s, scenario) in instance.scenarios.iter().enumerate() {
                    let key_items: Vec<u64> = items.iter().zip(&scenario.demand).map(|(&a, &d)| a.min(d)).collect();
                    let key = (s, key_items, printers, material);
                    let value = match cache.get(&key) {
                        Some(v) => v.clone(),
                        None => {
                            let v = second_stage(instance, &decision, s, &mut counter)?.0;
                            cache.insert(key, v.clone());
                            v
                        }
                    };
                    total += &scenario.probability * value;
                }
                if best.as_ref().is_none_or(|(b, _)| total > *b) {
                    best = Some((total, decision));
                }
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best.ok_or_else(|| Error::Internal("no feasible packing enumerated".into()));
            }
            k -= 1;
            if items[k] < upper[k] {
                items[k] += 1;
                for rest in &mut items[k + 1..] {
                    *rest = 0;
                }
                break;
            }
        }
    }
}

/// Shape of the random tiny instances used for oracle cross-checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TinyConfig {
    pub max_items: usize,
    pub max_scenarios: usize,
    pub max_demand: u64,
}

impl Default for TinyConfig {
    fn default() -> Self {
        TinyConfig {
            max_items: 4,
            max_scenarios: 3,
            max_demand: 3,
        }
    }
}

/// A small random instance; every field range is kept tight so the oracle
/// stays cheap.
pub fn tiny_instance(config: TinyConfig, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=config.max_items.max(1));
    let s = rng.gen_range(1..=config.max_scenarios.max(1));
    let items = (0..n)
        .map(|_| {
            let w = rng.gen_range(0..=4);
            let v = rng.gen_range(0..=4);
            let r = rng.gen_range(0..=6);
            if rng.gen_bool(0.75) {
                Item::printable(w, v, r, rng.gen_range(0..=2), rng.gen_range(0..=3))
            } else {
                Item::physical(w, v, r)
            }
        })
        .collect();
    let weights: Vec<i64> = (0..s).map(|_| rng.gen_range(1..=4)).collect();
    let total: i64 = weights.iter().sum();
    let scenarios = weights
        .iter()
        .map(|&w| Scenario {
            probability: ratio(w, total),
            demand: (0..n).map(|_| rng.gen_range(0..=config.max_demand)).collect(),
        })
        .collect();
    let alphas = [ratio(0, 1), ratio(1, 4), ratio(1, 2), ratio(4, 5), ratio(1, 1)];
    let alpha = alphas[rng.gen_range(0..alphas.len())].clone();
    Instance {
        items,
        printer: PrinterSpec {
            weight: rng.gen_range(0..=3),
            volume: rng.gen_range(0..=3),
            time_budget: rng.gen_range(0..=4),
        },
        material: MaterialSpec {
            weight: rng.gen_range(1..=2),
            volume: rng.gen_range(1..=2),
        },
        capacity: Capacity {
            weight: rng.gen_range(0..=8),
            volume: rng.gen_range(0..=8),
        },
        alpha,
        scenarios,
    }
}

/// One instance of the oracle suite together with its exact optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCase {
    pub seed: u64,
    pub instance: Instance,
    pub optimum: Rational,
    pub decision: FirstStageDecision,
}

/// `count` tiny instances whose full enumeration stays within `limits`.
/// Draws that exceed the limit are replaced by the next seed.
pub fn oracle_suite(count: usize, config: TinyConfig, base_seed: u64, limits: OracleLimits) -> Result<Vec<OracleCase>> {
    let mut cases = Vec::with_capacity(count);
    let mut seed = base_seed;
    while cases.len() < count {
        let instance = tiny_instance(config, seed);
        match brute_force_full(&instance, limits) {
            Ok((optimum, decision)) => cases.push(OracleCase {
                seed,
                instance,
                optimum,
                decision,
            }),
            Err(Error::EnumerationLimit { .. }) => {}
            Err(e) => return Err(e),
        }
        seed = seed.wrapping_add(1);
    }
    Ok(cases)
}

/// Total reward if all demand were met physically; an upper bound on any
/// oracle value.
pub fn demand_value(instance: &Instance) -> Rational {
    instance
        .scenarios
        .iter()
        .map(|s| {
            let total: u64 = s.demand.iter().zip(&instance.items).map(|(d, item)| d * item.reward).sum();
            &s.probability * int(total)
        })
        .sum()
}
