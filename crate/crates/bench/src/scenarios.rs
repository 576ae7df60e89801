//! The eight benchmark scenarios.

use stowage_core::{EnvKind, GridSpec, ScenarioSpec};

use crate::error::{BenchError, Result};

pub const SCENARIO_IDS: std::ops::RangeInclusive<u8> = 1..=8;

const SMALL: GridSpec = GridSpec {
    bays: 3,
    rows: 5,
    tiers: 3,
};
const LARGE: GridSpec = GridSpec {
    bays: 8,
    rows: 5,
    tiers: 5,
};

/// `(vessel, yard, containers, groups, cranes)` per scenario id.
const ROWS: [(GridSpec, GridSpec, usize, usize, usize); 8] = [
    (SMALL, SMALL, 45, 3, 1),
    (SMALL, SMALL, 45, 8, 1),
    (SMALL, LARGE, 45, 8, 1),
    (LARGE, SMALL, 45, 8, 1),
    (LARGE, LARGE, 200, 8, 1),
    (SMALL, LARGE, 45, 8, 3),
    (LARGE, LARGE, 200, 8, 3),
    (LARGE, LARGE, 200, 8, 5),
];

fn unknown(id: u8) -> BenchError {
    BenchError::Config(format!(
        "unknown scenario id {id}; valid ids are {}-{}",
        SCENARIO_IDS.start(),
        SCENARIO_IDS.end()
    ))
}

/// Scenario `id` with base seed 0.
pub fn scenario(id: u8) -> Result<ScenarioSpec> {
    if !SCENARIO_IDS.contains(&id) {
        return Err(unknown(id));
    }
    let (vessel, yard, num_containers, num_groups, num_cranes) = ROWS[usize::from(id - 1)];
    Ok(ScenarioSpec {
        vessel,
        yard,
        num_containers,
        num_groups,
        num_cranes,
        seed: 0,
        pre_occupancy: 0.0,
    })
}

/// Variants a scenario may run under: the single-crane one for 1-5, the multi-crane
/// ones for 6-8.
pub fn allowed_variants(id: u8) -> Result<&'static [EnvKind]> {
    match id {
        1..=5 => Ok(&[EnvKind::Spge]),
        6..=8 => Ok(&[EnvKind::SpgeMc, EnvKind::Spaec]),
        _ => Err(unknown(id)),
    }
}

/// Evaluation interval used for a scenario when none is configured.
pub fn default_eval_every(id: Option<u8>) -> usize {
    match id {
        Some(6) => 200,
        Some(7) | Some(8) => 500,
        _ => 1_000,
    }
}
