//! Seeded random instances from the uncorrelated knapsack class, and the
//! parameter overrides used by the sensitivity sweeps.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`. Each
//! draw category reads its own stream (`set_stream`), so changing the item
//! count or scenario count does not shift unrelated draws. A continuous
//! draw `U[a, b]` is `a + (b - a) * u` with `u` a standard `f64` sample in
//! `[0, 1)`. Rounding to the nearest integer is half away from zero.

use std::fmt;
use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Capacity, Instance, Item, MaterialSpec, PrintSpec, PrinterSpec, Scenario};
use crate::rational::{format_rational, int, parse_rational, ratio, round_half_away, to_f64, Rational};

const STREAM_WEIGHT: u64 = 0;
const STREAM_REWARD: u64 = 1;
const STREAM_VOLUME: u64 = 2;
const STREAM_TIME: u64 = 3;
const STREAM_MATERIAL: u64 = 4;
const STREAM_MAX_DEMAND: u64 = 5;
const STREAM_TIME_BUDGET: u64 = 6;
const STREAM_WEIGHT_CAP: u64 = 7;
const STREAM_VOLUME_CAP: u64 = 8;
const STREAM_PRINTABLE: u64 = 9;
const STREAM_DEMAND_BASE: u64 = 100;

/// Capacities and print time used by the demand-limit sweep.
pub const FIXED_CAPACITY: u64 = 100_000;
pub const FIXED_TIME_BUDGET: u64 = 4000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub items: usize,
    pub demand_limit: u64,
    pub scenarios: usize,
    pub alpha: Rational,
    pub printer_weight: u64,
    pub printer_volume: u64,
    pub pisinger_range: u64,
    pub printable_fraction: Rational,
}

impl GenConfig {
    pub fn new(items: usize, demand_limit: u64, scenarios: usize) -> Self {
        GenConfig {
            items,
            demand_limit,
            scenarios,
            ..GenConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.items == 0 {
            problems.push("item count must be at least 1");
        }
        if self.scenarios == 0 {
            problems.push("scenario count must be at least 1");
        }
        if self.demand_limit == 0 {
            problems.push("demand limit must be at least 1");
        }
        if self.pisinger_range == 0 {
            problems.push("Pisinger range must be at least 1");
        }
        if self.alpha < Rational::zero() || self.alpha > int(1) {
            problems.push("alpha must lie in [0, 1]");
        }
        if self.printable_fraction < Rational::zero() || self.printable_fraction > int(1) {
            problems.push("printable fraction must lie in [0, 1]");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            items: 15,
            demand_limit: 20,
            scenarios: 10,
            alpha: ratio(4, 5),
            printer_weight: 5000,
            printer_volume: 5000,
            pisinger_range: 1000,
            printable_fraction: int(1),
        }
    }
}

/// Intermediate draws needed to audit or replay a generated instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenTrace {
    pub seed: u64,
    pub max_demand: Vec<u64>,
    pub capacity_weight: u64,
    pub capacity_volume: u64,
    pub time_budget: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    low + (high - low) * rng.gen::<f64>()
}

fn round(value: f64) -> u64 {
    value.round().max(0.0) as u64
}

fn draw_demand(seed: u64, items: usize, scenarios: usize, demand_limit: u64) -> (Vec<u64>, Vec<Vec<u64>>) {
    let mut rng = stream(seed, STREAM_MAX_DEMAND);
    let max_demand: Vec<u64> = (0..items)
        .map(|_| round(uniform(&mut rng, 1.0, demand_limit as f64)))
        .collect();
    let demand = (0..scenarios)
        .map(|s| {
            let mut rng = stream(seed, STREAM_DEMAND_BASE + s as u64);
            max_demand
                .iter()
                .map(|&u| round(uniform(&mut rng, 0.0, u as f64)))
                .collect()
        })
        .collect();
    (max_demand, demand)
}

/// Expected total of `per_unit(item) * d_i^s`, skipping items that map to `None`.
fn expected_total(instance: &Instance, per_unit: impl Fn(&Item) -> Option<u64>) -> Rational {
    instance
        .scenarios
        .iter()
        .map(|s| {
            let total: u64 = instance
                .items
                .iter()
                .zip(&s.demand)
                .filter_map(|(item, &d)| per_unit(item).map(|x| x * d))
                .sum();
            &s.probability * int(total)
        })
        .sum()
}

fn expected_print_time(instance: &Instance) -> Rational {
    expected_total(instance, |item| item.print.map(|spec| spec.time))
}

pub fn generate(config: &GenConfig, seed: u64) -> Result<(Instance, GenTrace)> {
    config.validate()?;
    let n = config.items;
    let range = config.pisinger_range;
    let mut weights = stream(seed, STREAM_WEIGHT);
    let mut rewards = stream(seed, STREAM_REWARD);
    let mut volumes = stream(seed, STREAM_VOLUME);
    let mut times = stream(seed, STREAM_TIME);
    let mut materials = stream(seed, STREAM_MATERIAL);
    let mut printable = stream(seed, STREAM_PRINTABLE);
    let fraction = to_f64(&config.printable_fraction);
    let items = (0..n)
        .map(|_| {
            let w = weights.gen_range(1..=range);
            let r = rewards.gen_range(1..=range);
            let v = round(uniform(&mut volumes, 0.2, 5.0) * w as f64);
            let t = round(uniform(&mut times, 0.0, 10.0));
            let m = round(uniform(&mut materials, 0.5, 0.9) * w.min(v) as f64);
            let print = (printable.gen::<f64>() < fraction).then_some(PrintSpec { material: m, time: t });
            Item {
                weight: w,
                volume: v,
                reward: r,
                print,
            }
        })
        .collect();
    let (max_demand, demand) = draw_demand(seed, n, config.scenarios, config.demand_limit);
    let probability = ratio(1, config.scenarios as i64);
    let mut instance = Instance {
        items,
        printer: PrinterSpec {
            weight: config.printer_weight,
            volume: config.printer_volume,
            time_budget: 0,
        },
        material: MaterialSpec { weight: 1, volume: 1 },
        capacity: Capacity { weight: 0, volume: 0 },
        alpha: config.alpha.clone(),
        scenarios: demand
            .into_iter()
            .map(|d| Scenario {
                probability: probability.clone(),
                demand: d,
            })
            .collect(),
    };
    let time = uniform(&mut stream(seed, STREAM_TIME_BUDGET), 0.2, 1.0) * to_f64(&expected_print_time(&instance));
    instance.printer.time_budget = round(time);
    let weight_total = expected_total(&instance, |item| Some(item.weight));
    let w_cap = round(uniform(&mut stream(seed, STREAM_WEIGHT_CAP), 0.5, 1.0) * to_f64(&weight_total));
    let v_cap = round(uniform(&mut stream(seed, STREAM_VOLUME_CAP), 0.5, 2.0) * w_cap as f64);
    instance.capacity = Capacity {
        weight: w_cap,
        volume: v_cap,
    };
    let trace = GenTrace {
        seed,
        max_demand,
        capacity_weight: w_cap,
        capacity_volume: v_cap,
        time_budget: instance.printer.time_budget,
    };
    Ok((instance, trace))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aspect {
    Alpha,
    PrinterSizeK,
    MaterialEfficiencyL,
    PrintTimeM,
    DemandLimitD,
}

impl Aspect {
    pub const ALL: [Aspect; 5] = [
        Aspect::Alpha,
        Aspect::PrinterSizeK,
        Aspect::MaterialEfficiencyL,
        Aspect::PrintTimeM,
        Aspect::DemandLimitD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aspect::Alpha => "alpha",
            Aspect::PrinterSizeK => "k",
            Aspect::MaterialEfficiencyL => "l",
            Aspect::PrintTimeM => "m",
            Aspect::DemandLimitD => "D",
        }
    }

    /// The values studied for this aspect.
    pub fn studied_grid(self) -> Vec<SweepValue> {
        let tenths = |from: i64| (from..=10).map(|k| SweepValue::Finite(ratio(k, 10))).collect::<Vec<_>>();
        match self {
            Aspect::Alpha => tenths(1),
            Aspect::PrinterSizeK => {
                let mut grid: Vec<SweepValue> = [2u64, 3, 5, 10, 20, 30, 40, 50]
                    .iter()
                    .map(|&k| SweepValue::Finite(int(k)))
                    .collect();
                grid.push(SweepValue::Infinite);
                grid
            }
            Aspect::MaterialEfficiencyL => tenths(0),
            Aspect::PrintTimeM => {
                let mut grid = tenths(0);
                grid.push(SweepValue::Infinite);
                grid
            }
            Aspect::DemandLimitD => (0..=17).map(|e| SweepValue::Finite(int(1u64 << e))).collect(),
        }
    }

    pub fn accepts(self, value: &SweepValue) -> bool {
        self.studied_grid().contains(value)
    }
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aspect {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "alpha" => Ok(Aspect::Alpha),
            "k" | "printer_size_k" => Ok(Aspect::PrinterSizeK),
            "l" | "material_efficiency_l" => Ok(Aspect::MaterialEfficiencyL),
            "m" | "print_time_m" => Ok(Aspect::PrintTimeM),
            "D" | "d" | "demand_limit_D" => Ok(Aspect::DemandLimitD),
            other => Err(Error::InvalidArgument(format!("unknown aspect '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SweepValue {
    Finite(Rational),
    Infinite,
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Finite(v) => match crate::rational::exact_decimal(v) {
                Some(text) => f.write_str(&text),
                None => f.write_str(&format_rational(v)),
            },
            SweepValue::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for SweepValue {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        if matches!(text, "inf" | "infinity" | "∞") {
            return Ok(SweepValue::Infinite);
        }
        parse_rational(text)
            .map(SweepValue::Finite)
            .ok_or_else(|| Error::InvalidArgument(format!("bad sweep value '{text}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepOverride {
    pub aspect: Aspect,
    pub value: SweepValue,
}

fn round_rational(value: &Rational) -> u64 {
    round_half_away(value).to_u64().unwrap_or(u64::MAX)
}

/// Applies one sweep setting to an instance made by [`generate`] with the
/// same `config` and `seed`.
pub fn apply_sweep_override(
    config: &GenConfig,
    seed: u64,
    instance: &Instance,
    over: &SweepOverride,
) -> Result<Instance> {
    if !over.aspect.accepts(&over.value) {
        return Err(Error::InvalidArgument(format!(
            "{} is not a studied value of {}",
            over.value, over.aspect
        )));
    }
    let mut out = instance.clone();
    match (over.aspect, &over.value) {
        (Aspect::Alpha, SweepValue::Finite(alpha)) => out.alpha = alpha.clone(),
        (Aspect::PrinterSizeK, SweepValue::Infinite) => {
            out.printer.weight = 0;
            out.printer.volume = 0;
        }
        (Aspect::PrinterSizeK, SweepValue::Finite(k)) => {
            out.printer.weight = round_rational(&(int(out.capacity.weight) / k));
            out.printer.volume = round_rational(&(int(out.capacity.volume) / k));
        }
        (Aspect::MaterialEfficiencyL, SweepValue::Finite(l)) => {
            for item in &mut out.items {
                item.volume = item.weight;
                if let Some(spec) = &mut item.print {
                    spec.material = round_rational(&(l * int(item.weight)));
                }
            }
            out.material = MaterialSpec { weight: 1, volume: 1 };
        }
        (Aspect::PrintTimeM, SweepValue::Finite(m)) => {
            out.printer.time_budget = round_rational(&(m * expected_print_time(&out)));
        }
        (Aspect::PrintTimeM, SweepValue::Infinite) => {
            out.printer.time_budget = out
                .scenarios
                .iter()
                .map(|s| {
                    out.items
                        .iter()
                        .zip(&s.demand)
                        .filter_map(|(item, &d)| item.print.map(|spec| spec.time * d))
                        .sum::<u64>()
                })
                .max()
                .unwrap_or(0);
        }
        (Aspect::DemandLimitD, SweepValue::Finite(d)) => {
            let limit = d
                .to_integer()
                .to_u64()
                .filter(|_| d.is_integer())
                .ok_or_else(|| Error::InvalidArgument(format!("demand limit {d} must be an integer")))?;
            let (_, demand) = draw_demand(seed, config.items, config.scenarios, limit);
            for (scenario, d) in out.scenarios.iter_mut().zip(demand) {
                scenario.demand = d;
            }
            out.capacity = Capacity {
                weight: FIXED_CAPACITY,
                volume: FIXED_CAPACITY,
            };
            out.printer.time_budget = FIXED_TIME_BUDGET;
        }
        (aspect, value) => {
            return Err(Error::InvalidArgument(format!("{value} is not valid for {aspect}")));
        }
    }
    Ok(out)
}

/// Convenience: generate and apply an override in one call.
pub fn generate_with(config: &GenConfig, seed: u64, over: Option<&SweepOverride>) -> Result<Instance> {
    let (instance, _) = generate(config, seed)?;
    match over {
        Some(over) => apply_sweep_override(config, seed, &instance, over),
        None => Ok(instance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    fn small() -> GenConfig {
        GenConfig::new(6, 5, 3)
    }

    #[test]
    fn deterministic() {
        for seed in [0, 1, 99] {
            assert_eq!(generate(&small(), seed).unwrap(), generate(&small(), seed).unwrap());
        }
        assert_ne!(generate(&small(), 1).unwrap(), generate(&small(), 2).unwrap());
    }

    #[test]
    fn generated_instances_follow_the_recipe() {
        for seed in 0..40 {
            let config = GenConfig::new(8, 7, 4);
            let (instance, trace) = generate(&config, seed).unwrap();
            assert!(validate_instance(&instance).is_empty());
            assert_eq!(instance.material, MaterialSpec { weight: 1, volume: 1 });
            assert_eq!(instance.printer.weight, 5000);
            assert_eq!(instance.alpha, ratio(4, 5));
            for item in &instance.items {
                assert!((1..=1000).contains(&item.weight) && (1..=1000).contains(&item.reward));
                let spec = item.print.expect("all items printable by default");
                assert!(spec.time <= 10);
                assert!(spec.material <= item.weight.min(item.volume));
                assert!(item.volume <= 5 * item.weight && 5 * item.volume >= item.weight);
            }
            for s in &instance.scenarios {
                assert_eq!(s.probability, ratio(1, 4));
                for (i, &d) in s.demand.iter().enumerate() {
                    assert!(d <= trace.max_demand[i] && trace.max_demand[i] <= 7);
                }
            }
            assert!(trace.max_demand.iter().all(|&u| u >= 1));
            assert_eq!(instance.capacity.weight, trace.capacity_weight);
            assert!(2 * instance.capacity.volume + 2 >= instance.capacity.weight);
            assert!(instance.capacity.volume <= 2 * instance.capacity.weight + 1);
        }
    }

    #[test]
    fn streams_are_independent_of_scenario_count() {
        let (a, _) = generate(&GenConfig::new(5, 5, 2), 3).unwrap();
        let (b, _) = generate(&GenConfig::new(5, 5, 6), 3).unwrap();
        assert_eq!(a.items, b.items);
        assert_eq!(a.scenarios[1].demand, b.scenarios[1].demand);
    }

    #[test]
    fn printable_fraction_zero_makes_everything_physical() {
        let mut config = small();
        config.printable_fraction = int(0);
        let (instance, _) = generate(&config, 5).unwrap();
        assert!(instance.items.iter().all(|i| !i.is_printable()));
    }

    #[test]
    fn overrides() {
        let config = small();
        let (base, _) = generate(&config, 11).unwrap();
        let set = |aspect, value| {
            apply_sweep_override(&config, 11, &base, &SweepOverride { aspect, value }).unwrap()
        };

        let alpha = set(Aspect::Alpha, SweepValue::Finite(int(1)));
        assert_eq!(alpha.alpha, int(1));
        assert_eq!(Instance { alpha: base.alpha.clone(), ..alpha }, base);

        let mut w100 = base.clone();
        w100.capacity.weight = 100;
        let k2 = apply_sweep_override(
            &config,
            11,
            &w100,
            &SweepOverride {
                aspect: Aspect::PrinterSizeK,
                value: SweepValue::Finite(int(2)),
            },
        )
        .unwrap();
        assert_eq!(k2.printer.weight, 50);
        let inf = set(Aspect::PrinterSizeK, SweepValue::Infinite);
        assert_eq!((inf.printer.weight, inf.printer.volume), (0, 0));

        let l1 = set(Aspect::MaterialEfficiencyL, SweepValue::Finite(int(1)));
        for item in &l1.items {
            assert_eq!(item.volume, item.weight);
            assert_eq!(item.print.unwrap().material, item.weight);
        }

        let m0 = set(Aspect::PrintTimeM, SweepValue::Finite(int(0)));
        assert_eq!(m0.printer.time_budget, 0);
        let m_inf = set(Aspect::PrintTimeM, SweepValue::Infinite);
        for s in &m_inf.scenarios {
            let total: u64 = m_inf.items.iter().zip(&s.demand).map(|(i, d)| i.print.unwrap().time * d).sum();
            assert!(total <= m_inf.printer.time_budget);
        }

        let d4 = set(Aspect::DemandLimitD, SweepValue::Finite(int(4)));
        assert_eq!(d4.capacity, Capacity { weight: 100_000, volume: 100_000 });
        assert_eq!(d4.printer.time_budget, 4000);
        assert!(d4.scenarios.iter().all(|s| s.demand.iter().all(|&d| d <= 4)));
        assert_eq!(d4.items, base.items);
    }

    #[test]
    fn off_grid_values_are_rejected() {
        let config = small();
        let (base, _) = generate(&config, 1).unwrap();
        let bad = SweepOverride {
            aspect: Aspect::PrinterSizeK,
            value: SweepValue::Finite(int(7)),
        };
        assert!(apply_sweep_override(&config, 1, &base, &bad).is_err());
        let bad = SweepOverride {
            aspect: Aspect::Alpha,
            value: SweepValue::Infinite,
        };
        assert!(apply_sweep_override(&config, 1, &base, &bad).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(Aspect::Alpha.studied_grid().len(), 10);
        assert_eq!(Aspect::PrinterSizeK.studied_grid().len(), 9);
        assert_eq!(Aspect::MaterialEfficiencyL.studied_grid().len(), 11);
        assert_eq!(Aspect::PrintTimeM.studied_grid().len(), 12);
        assert_eq!(Aspect::DemandLimitD.studied_grid().last(), Some(&SweepValue::Finite(int(131072))));
        assert_eq!("inf".parse::<SweepValue>().unwrap(), SweepValue::Infinite);
        assert_eq!("0.5".parse::<SweepValue>().unwrap().to_string(), "0.5");
        assert_eq!("k".parse::<Aspect>().unwrap(), Aspect::PrinterSizeK);
    }
}
