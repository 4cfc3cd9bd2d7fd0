//! Small hand-made instances used in documentation, tests and the CLI.

use crate::model::{Capacity, Instance, Item, MaterialSpec, PrinterSpec, Scenario};
use crate::rational::ratio;

/// Two printable items, one printer option, two demand scenarios.
/// The optimum packs one printer with two material units (expected reward 1.04).
pub fn example_one() -> Instance {
    Instance {
        items: vec![Item::printable(4, 4, 1, 2, 1), Item::printable(4, 4, 2, 2, 1)],
        printer: PrinterSpec {
            weight: 2,
            volume: 2,
            time_budget: 1,
        },
        material: MaterialSpec { weight: 1, volume: 1 },
        capacity: Capacity { weight: 4, volume: 4 },
        alpha: ratio(4, 5),
        scenarios: vec![
            Scenario {
                probability: ratio(7, 10),
                demand: vec![1, 0],
            },
            Scenario {
                probability: ratio(3, 10),
                demand: vec![0, 1],
            },
        ],
    }
}

/// Printer-bound illustration: greedy needs 2 and 3 printers in the two
/// scenarios, the weight capacity caps the bound at 2. Fields the bound does
/// not use (rewards, item sizes, material) are filled with unit values.
///
/// The second scenario demands three copies of item 2, which is what the
/// allocation 1+1 / 1 / 1 over three printers requires.
pub fn example_two() -> Instance {
    Instance {
        items: vec![Item::printable(1, 1, 1, 1, 2), Item::printable(1, 1, 1, 1, 3)],
        printer: PrinterSpec {
            weight: 5,
            volume: 3,
            time_budget: 5,
        },
        material: MaterialSpec { weight: 1, volume: 1 },
        capacity: Capacity {
            weight: 10,
            volume: 12,
        },
        alpha: ratio(4, 5),
        scenarios: vec![
            Scenario {
                probability: ratio(1, 2),
                demand: vec![3, 1],
            },
            Scenario {
                probability: ratio(1, 2),
                demand: vec![1, 3],
            },
        ],
    }
}
