//! Upper bound on the number of printers worth packing.
//!
//! Per scenario, printable demand is assigned unit by unit, in item order, to
//! the current printer; a new printer is opened once the next copy no longer
//! fits in the time budget. The largest count over scenarios is `U`, and the
//! capacity caps `floor(W / w_p)` and `floor(V / v_p)` clip it to `Z`.

use log::info;

use crate::model::{Instance, Scenario};

/// A nonnegative count that may be unbounded (division by a zero size).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cap {
    Finite(u64),
    Infinite,
}

impl Cap {
    pub fn of_ratio(capacity: u64, size: u64) -> Cap {
        capacity.checked_div(size).map_or(Cap::Infinite, Cap::Finite)
    }
}

impl std::fmt::Display for Cap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cap::Finite(v) => write!(f, "{v}"),
            Cap::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundResult {
    pub per_scenario: Vec<u64>,
    pub max_needed: u64,
    pub cap_weight: Cap,
    pub cap_volume: Cap,
    pub z: u64,
}

pub fn printers_needed(instance: &Instance, scenario: &Scenario) -> u64 {
    let budget = instance.printer.time_budget;
    let mut printers = 0u64;
    let mut used = 0u64;
    let mut skipped = 0u64;
    for (item, &demand) in instance.items.iter().zip(&scenario.demand) {
        let Some(spec) = item.print else { continue };
        if demand == 0 {
            continue;
        }
        if spec.time > budget {
            skipped += demand;
            continue;
        }
        if printers == 0 {
            printers = 1;
            used = 0;
        }
        if spec.time == 0 {
            continue;
        }
        // Fill the open printer, then whole printers, then the remainder.
        let per_printer = budget / spec.time;
        let room = (budget - used) / spec.time;
        if demand <= room {
            used += demand * spec.time;
            continue;
        }
        let rest = demand - room;
        let full = (rest - 1) / per_printer;
        let last = rest - full * per_printer;
        printers += full + 1;
        used = last * spec.time;
    }
    if skipped > 0 {
        info!("{skipped} demand units need more than the printer time budget {budget} and are ignored");
    }
    printers
}

pub fn printer_upper_bound(instance: &Instance) -> BoundResult {
    let per_scenario: Vec<u64> = instance
        .scenarios
        .iter()
        .map(|s| printers_needed(instance, s))
        .collect();
    let max_needed = per_scenario.iter().copied().max().unwrap_or(0);
    let cap_weight = Cap::of_ratio(instance.capacity.weight, instance.printer.weight);
    let cap_volume = Cap::of_ratio(instance.capacity.volume, instance.printer.volume);
    let z = [cap_weight, cap_volume, Cap::Finite(max_needed)]
        .into_iter()
        .min()
        .map(|c| match c {
            Cap::Finite(v) => v,
            Cap::Infinite => unreachable!("U is finite"),
        })
        .unwrap_or(0);
    BoundResult {
        per_scenario,
        max_needed,
        cap_weight,
        cap_volume,
        z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example_one, example_two};
    use crate::model::Item;

    /// Literal unit-by-unit greedy used as a cross-check for the batched loop.
    fn unit_greedy(instance: &Instance, scenario: &Scenario) -> u64 {
        let budget = instance.printer.time_budget;
        let mut printers = 0;
        let mut used = 0;
        for (item, &demand) in instance.items.iter().zip(&scenario.demand) {
            let Some(spec) = item.print else { continue };
            if spec.time > budget {
                continue;
            }
            for _ in 0..demand {
                if printers == 0 {
                    printers = 1;
                }
                if used + spec.time > budget {
                    printers += 1;
                    used = 0;
                }
                used += spec.time;
            }
        }
        printers
    }

    #[test]
    fn example_two_counts() {
        let instance = example_two();
        assert_eq!(printers_needed(&instance, &instance.scenarios[0]), 2);
        assert_eq!(printers_needed(&instance, &instance.scenarios[1]), 3);
        let bound = printer_upper_bound(&instance);
        assert_eq!(bound.per_scenario, vec![2, 3]);
        assert_eq!(bound.max_needed, 3);
        assert_eq!(bound.cap_weight, Cap::Finite(2));
        assert_eq!(bound.cap_volume, Cap::Finite(4));
        assert_eq!(bound.z, 2);
    }

    #[test]
    fn zero_demand_needs_no_printer() {
        let mut instance = example_two();
        instance.scenarios[0].demand = vec![0, 0];
        assert_eq!(printers_needed(&instance, &instance.scenarios[0]), 0);
    }

    #[test]
    fn free_printers_leave_only_greedy_bound() {
        let mut instance = example_two();
        instance.printer.weight = 0;
        instance.printer.volume = 0;
        let bound = printer_upper_bound(&instance);
        assert_eq!(bound.cap_weight, Cap::Infinite);
        assert_eq!(bound.cap_volume, Cap::Infinite);
        assert_eq!(bound.z, bound.max_needed);
        assert_eq!(bound.z, 3);
    }

    #[test]
    fn no_printable_items_gives_zero() {
        let mut instance = example_one();
        for item in &mut instance.items {
            item.print = None;
        }
        assert_eq!(printer_upper_bound(&instance).z, 0);
    }

    #[test]
    fn too_slow_items_are_skipped() {
        let mut instance = example_two();
        instance.items[1] = Item::printable(1, 1, 1, 1, 6);
        instance.scenarios[0].demand = vec![0, 4];
        assert_eq!(printers_needed(&instance, &instance.scenarios[0]), 0);
        instance.scenarios[0].demand = vec![1, 4];
        assert_eq!(printers_needed(&instance, &instance.scenarios[0]), 1);
    }

    #[test]
    fn zero_time_items_still_need_a_printer() {
        let mut instance = example_two();
        instance.items[0] = Item::printable(1, 1, 1, 1, 0);
        instance.printer.time_budget = 0;
        instance.scenarios[0].demand = vec![5, 0];
        assert_eq!(printers_needed(&instance, &instance.scenarios[0]), 1);
    }

    #[test]
    fn batched_greedy_matches_unit_greedy() {
        let mut instance = example_two();
        for budget in 0..12 {
            instance.printer.time_budget = budget;
            for t0 in 0..5 {
                for t1 in 0..5 {
                    instance.items[0] = Item::printable(1, 1, 1, 1, t0);
                    instance.items[1] = Item::printable(1, 1, 1, 1, t1);
                    for d0 in 0..6 {
                        for d1 in 0..6 {
                            let scenario = Scenario {
                                probability: crate::rational::ratio(1, 1),
                                demand: vec![d0, d1],
                            };
                            assert_eq!(
                                printers_needed(&instance, &scenario),
                                unit_greedy(&instance, &scenario),
                                "T={budget} t=({t0},{t1}) d=({d0},{d1})"
                            );
                        }
                    }
                }
            }
        }
    }
}
