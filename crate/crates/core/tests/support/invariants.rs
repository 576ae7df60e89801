//! Episode-level invariant audit shared by the core property tests and the acceptance
//! suite. Uses only the public environment interface.

use rand::seq::IndexedRandom;
use rand::Rng;
use stowage_core::{
    generate_instance, EnvConfig, EnvKind, GridSpec, GridState, ProblemInstance, ScenarioSpec,
};

/// Random scenario within 3x5x3 grids and at most 45 containers, plus a variant that
/// fits its crane count.
pub fn random_case<R: Rng>(rng: &mut R) -> (ScenarioSpec, EnvKind) {
    let grid = |rng: &mut R| {
        if rng.random_bool(0.3) {
            GridSpec::new(3, 5, 3)
        } else {
            GridSpec::new(
                rng.random_range(1..=3),
                rng.random_range(1..=5),
                rng.random_range(1..=3),
            )
        }
    };
    let vessel = grid(rng);
    let yard = grid(rng);
    let max_m = vessel.capacity().min(yard.capacity()).min(45);
    // Mostly near-full instances; an occasional empty one.
    let m = if rng.random_bool(0.02) { 0 } else { rng.random_range(max_m.div_ceil(2)..=max_m) };
    let num_groups = rng.random_range(1..=m.clamp(1, 4));
    let num_cranes = rng.random_range(1..=m.clamp(1, 3));
    let pre_occupancy = *[0.0, 0.0, 0.5, 1.0].choose(rng).unwrap();
    let spec = ScenarioSpec {
        vessel,
        yard,
        num_containers: m,
        num_groups,
        num_cranes,
        seed: rng.random(),
        pre_occupancy,
    };
    let kind = if num_cranes == 1 {
        *EnvKind::ALL.choose(rng).unwrap()
    } else {
        *[EnvKind::SpgeMc, EnvKind::Spaec].choose(rng).unwrap()
    };
    (spec, kind)
}

fn loaded_groups(vessel: &GridState, initial: &GridState, groups: usize) -> Vec<usize> {
    let now = vessel.group_counts(groups);
    let before = initial.group_counts(groups);
    now.iter().zip(&before).map(|(a, b)| a - b).collect()
}

fn audit_state(
    env: &dyn stowage_core::Environment,
    inst: &ProblemInstance,
) -> Result<(), String> {
    let groups = inst.spec.num_groups;
    if !env.yard().satisfies_gravity() {
        return Err("yard violates gravity".into());
    }
    if !env.vessel().satisfies_gravity() {
        return Err("vessel violates gravity".into());
    }
    let loaded = loaded_groups(env.vessel(), &inst.vessel, groups);
    let yard = env.yard().group_counts(groups);
    let start = inst.yard.group_counts(groups);
    for g in 0..groups {
        if loaded[g] + yard[g] != start[g] {
            return Err(format!(
                "group {g}: {} in yard + {} loaded != {} at start",
                yard[g], loaded[g], start[g]
            ));
        }
    }
    // Vessel slots never change their required group.
    for (now, before) in env.vessel().slots.iter().zip(&inst.vessel.slots) {
        if now.group != before.group {
            return Err(format!("vessel slot {:?} changed group", now.coord));
        }
    }
    Ok(())
}

/// Plays one episode with mostly valid random actions and an occasional masked one,
/// auditing gravity, conservation and mask semantics after every step. Returns the
/// number of steps taken.
pub fn audited_episode<R: Rng>(
    spec: &ScenarioSpec,
    kind: EnvKind,
    rng: &mut R,
) -> Result<usize, String> {
    let inst = generate_instance(spec).map_err(|e| format!("generation failed: {e}"))?;
    let mut env = kind
        .make(inst.clone(), EnvConfig::default())
        .map_err(|e| format!("construction failed: {e}"))?;
    let (obs, mask) = env.reset();
    if obs.len() != kind.observation_len(spec) || mask.len() != kind.action_count(spec) {
        return Err("observation or mask length disagrees with the variant".into());
    }
    audit_state(env.as_ref(), &inst)?;
    let m = spec.num_containers;
    let mut steps = 0;
    let mut total_shifters = 0;
    while !env.is_done() {
        if steps > 20 * m + 20 {
            return Err("episode does not terminate".into());
        }
        let mask = env.action_mask();
        let valid: Vec<usize> = (0..mask.len()).filter(|&a| mask[a]).collect();
        let invalid: Vec<usize> = (0..mask.len()).filter(|&a| !mask[a]).collect();
        if valid.is_empty() {
            return Err("running episode has no valid action".into());
        }
        let pick_invalid = !invalid.is_empty() && rng.random_bool(0.1);
        let action = if pick_invalid {
            *invalid.choose(rng).unwrap()
        } else {
            *valid.choose(rng).unwrap()
        };
        let predicted = env.action_shifters(action);
        let yard_before = env.yard().clone();
        let vessel_before = env.vessel().clone();
        let out = env
            .act(action)
            .map_err(|e| format!("action {action} raised {e}"))?;
        steps += 1;
        if pick_invalid {
            if !out.info.invalid || out.done {
                return Err(format!("masked action {action} was not treated as invalid"));
            }
            if *env.yard() != yard_before || *env.vessel() != vessel_before {
                return Err(format!("masked action {action} changed the grids"));
            }
        } else {
            if out.info.invalid {
                return Err(format!("unmasked action {action} reported invalid"));
            }
            if predicted != Some(out.info.shifters) {
                return Err(format!(
                    "action {action}: predicted {predicted:?} shifters, got {}",
                    out.info.shifters
                ));
            }
            total_shifters += out.info.shifters;
            let moved = yard_before.occupied_count() - env.yard().occupied_count();
            let placed = env.vessel().occupied_count() - vessel_before.occupied_count();
            if moved > 1 || moved != placed {
                return Err(format!("action {action} moved {moved} and placed {placed}"));
            }
        }
        audit_state(env.as_ref(), &inst)?;
    }
    if env.yard().occupied_count() != inst.yard.occupied_count() - m {
        return Err("finished episode left containers unloaded".into());
    }
    let kpis = env.kpis().map_err(|e| format!("kpis: {e}"))?;
    if kpis.shifters != total_shifters {
        return Err(format!(
            "episode reports {} shifters, steps sum to {total_shifters}",
            kpis.shifters
        ));
    }
    Ok(steps)
}
