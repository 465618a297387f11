//! Small reference networks used across tests, benches and the CLI docs.

use crate::model::MassActionSystem;
use crate::parse::parse;

pub const FIVE_CYCLE: &str = include_str!("../../../networks/five_cycle.crn");
pub const THREE_SPECIES: &str = include_str!("../../../networks/three_species.crn");
pub const THREE_CLASSES: &str = include_str!("../../../networks/three_classes.crn");

fn must(text: &str) -> MassActionSystem {
    parse(text).expect("built-in network parses")
}

/// `A -> A+B -> A+C -> C -> 2B -> A` with unit rate constants.
pub fn five_cycle() -> MassActionSystem {
    must(FIVE_CYCLE)
}

/// The five-cycle with rate constants in cycle order.
pub fn five_cycle_with(kappa: [f64; 5]) -> MassActionSystem {
    let [k1, k2, k3, k4, k5] = kappa;
    must(&format!(
        "species: A, B, C\n\
         A -> A + B ; k={k1:?}\n\
         A + B -> A + C ; k={k2:?}\n\
         A + C -> C ; k={k3:?}\n\
         C -> 2 B ; k={k4:?}\n\
         2 B -> A ; k={k5:?}\n"
    ))
}

/// Binary, weakly reversible single-class network on A, B, C with complexes
/// A, B, 2C, B+C and 0.
pub fn three_species() -> MassActionSystem {
    must(THREE_SPECIES)
}

/// Network with three linkage classes, only one of them strongly connected.
pub fn three_classes() -> MassActionSystem {
    must(THREE_CLASSES)
}

/// `0 <-> S` with birth rate `birth` and per-capita death rate `death`.
pub fn birth_death(birth: f64, death: f64) -> MassActionSystem {
    must(&format!("species: S\n0 <-> S ; k={birth:?}, {death:?}\n"))
}

/// `A <-> B`.
pub fn isomerization(forward: f64, backward: f64) -> MassActionSystem {
    must(&format!("species: A, B\nA <-> B ; k={forward:?}, {backward:?}\n"))
}

/// `0 -> S` only.
pub fn pure_birth(rate: f64) -> MassActionSystem {
    must(&format!("species: S\n0 -> S ; k={rate:?}\n"))
}
