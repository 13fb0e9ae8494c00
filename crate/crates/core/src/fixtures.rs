//! Bundled model documents for the three oil and gas field examples.

use crate::document::{parse_model, ModelDocument};

pub const ARKTICHESKOE_JSON: &str = include_str!("../fixtures/arkticheskoe.json");
pub const KRUZENSTERNSKOE_JSON: &str = include_str!("../fixtures/kruzensternskoe.json");
pub const YAMAL_JSON: &str = include_str!("../fixtures/yamal.json");

/// Field with two composite parts (upper strata `W`, lower strata `D`) and a
/// leaf `B`; root `A2`.
pub fn arkticheskoe() -> ModelDocument {
    parse_model(ARKTICHESKOE_JSON).expect("bundled fixture is valid")
}

/// Field with composite parts `B` and `H`; root `A4`.
pub fn kruzensternskoe() -> ModelDocument {
    parse_model(KRUZENSTERNSKOE_JSON).expect("bundled fixture is valid")
}

/// Region over five fields with their retained strategies, plus the
/// knapsack instance used for kernel extension.
pub fn yamal() -> ModelDocument {
    parse_model(YAMAL_JSON).expect("bundled fixture is valid")
}

/// Looks a bundled fixture up by file stem.
pub fn by_name(name: &str) -> Option<&'static str> {
    match name {
        "arkticheskoe" => Some(ARKTICHESKOE_JSON),
        "kruzensternskoe" => Some(KRUZENSTERNSKOE_JSON),
        "yamal" => Some(YAMAL_JSON),
        _ => None,
    }
}
