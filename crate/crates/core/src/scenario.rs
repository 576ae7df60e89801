//! Scenario specifications and seeded instance generation.
//!
//! Instances are generated with [`ChaCha8Rng`] seeded through `seed_from_u64`, so the
//! same `(ScenarioSpec, seed)` pair always yields the same instance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::grid::{GridSpec, GridState, NO_GROUP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub vessel: GridSpec,
    pub yard: GridSpec,
    pub num_containers: usize,
    pub num_groups: usize,
    pub num_cranes: usize,
    pub seed: u64,
    /// Fraction of the vessel slots not used as targets that start out filled.
    #[serde(default)]
    pub pre_occupancy: f64,
}

impl ScenarioSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.vessel.validate()?;
        self.yard.validate()?;
        let m = self.num_containers;
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        if m > self.vessel.capacity() {
            return bad(format!(
                "{m} containers exceed vessel capacity {}",
                self.vessel.capacity()
            ));
        }
        if m > self.yard.capacity() {
            return bad(format!(
                "{m} containers exceed yard capacity {}",
                self.yard.capacity()
            ));
        }
        if self.num_groups == 0 {
            return bad("at least one container group is required".into());
        }
        if m > 0 && self.num_groups > m {
            return bad(format!("{} groups for only {m} containers", self.num_groups));
        }
        if self.num_cranes == 0 {
            return bad("at least one crane is required".into());
        }
        if m > 0 && self.num_cranes > m {
            return bad(format!("{} cranes for only {m} containers", self.num_cranes));
        }
        if !(0.0..=1.0).contains(&self.pre_occupancy) {
            return bad(format!("pre-occupancy {} outside [0, 1]", self.pre_occupancy));
        }
        Ok(())
    }
}

/// A generated scenario. Immutable once built; environments copy the grids on reset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub spec: ScenarioSpec,
    pub vessel: GridState,
    pub yard: GridState,
    /// Vessel slot ids in sequencer order.
    pub targets: Vec<usize>,
    /// One contiguous slice of `targets` per crane, in bay order.
    pub crane_partition: Vec<Vec<usize>>,
}

impl ProblemInstance {
    pub fn num_containers(&self) -> usize {
        self.targets.len()
    }

    pub fn num_cranes(&self) -> usize {
        self.crane_partition.len()
    }

    /// Required group of each target, in sequencer order.
    pub fn target_groups(&self) -> Vec<i32> {
        self.targets.iter().map(|&t| self.vessel.slots[t].group).collect()
    }

    /// Builds an instance from an explicit layout: required groups for the first
    /// `target_groups.len()` sequencer slots of an empty vessel, and yard stacks listed
    /// bottom-up in stack order. The result is validated.
    pub fn from_layout(
        vessel: GridSpec,
        target_groups: &[i32],
        yard: GridSpec,
        stacks: &[Vec<i32>],
        num_cranes: usize,
    ) -> Result<Self> {
        let num_groups = target_groups
            .iter()
            .chain(stacks.iter().flatten())
            .copied()
            .max()
            .map_or(1, |g| g.max(0) as usize + 1);
        let spec = ScenarioSpec {
            vessel,
            yard,
            num_containers: target_groups.len(),
            num_groups,
            num_cranes,
            seed: 0,
            pre_occupancy: 0.0,
        };
        vessel.validate()?;
        yard.validate()?;
        let mut v = GridState::empty(vessel);
        let targets = build_sequencer(&v, target_groups.len())?;
        for (&t, &g) in targets.iter().zip(target_groups) {
            v.slots[t].group = g;
        }
        if stacks.len() > yard.stacks() {
            return Err(ModelError::InvalidInstance(format!(
                "{} stacks for a yard with {}",
                stacks.len(),
                yard.stacks()
            )));
        }
        let mut y = GridState::empty(yard);
        for (stack, groups) in stacks.iter().enumerate() {
            if groups.len() > yard.tiers {
                return Err(ModelError::InvalidInstance(format!(
                    "stack {stack} holds {} containers, yard has {} tiers",
                    groups.len(),
                    yard.tiers
                )));
            }
            for &g in groups {
                y.push_on_stack(stack, g);
            }
        }
        let inst = Self {
            spec,
            vessel: v,
            yard: y,
            crane_partition: partition_targets(&targets, num_cranes)?,
            targets,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)
            .map_err(|e| ModelError::InvalidInstance(format!("malformed JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// Checks every structural invariant. Generated instances always pass; this guards
    /// instances read from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::InvalidInstance(msg));
        self.spec.validate()?;
        if self.vessel.spec != self.spec.vessel || self.yard.spec != self.spec.yard {
            return bad("grid shapes disagree with the scenario spec".into());
        }
        for grid in [&self.vessel, &self.yard] {
            if grid.slots.len() != grid.spec.capacity() {
                return bad("slot array length differs from grid capacity".into());
            }
            for (id, s) in grid.slots.iter().enumerate() {
                if grid.spec.decode(id)? != s.coord {
                    return bad(format!("slot {id} carries coordinate {:?}", s.coord));
                }
                if s.occupancy > 1 {
                    return bad(format!("slot {id} has occupancy {}", s.occupancy));
                }
            }
            if !grid.satisfies_gravity() {
                return bad("grid violates gravity".into());
            }
        }
        if self
            .yard
            .slots
            .iter()
            .any(|s| !s.is_occupied() && s.group != NO_GROUP)
        {
            return bad("empty yard slot carries a group".into());
        }
        let m = self.spec.num_containers;
        if self.targets.len() != m || self.yard.occupied_count() != m {
            return bad(format!(
                "expected {m} targets and yard containers, found {} and {}",
                self.targets.len(),
                self.yard.occupied_count()
            ));
        }
        let mut seen = vec![false; self.vessel.capacity()];
        for &t in &self.targets {
            self.vessel.spec.check_id(t)?;
            if seen[t] {
                return bad(format!("target {t} listed twice"));
            }
            seen[t] = true;
            let slot = self.vessel.slots[t];
            if slot.is_occupied() {
                return bad(format!("target {t} is already occupied"));
            }
            let g = slot.group;
            if g < 0 || g as usize >= self.spec.num_groups {
                return bad(format!("target {t} requires unknown group {g}"));
            }
            // The slot below must be filled already or be an earlier target.
            if self.vessel.spec.tier_index(t) > 0
                && !self.vessel.is_occupied(t - 1)
                && !seen[t - 1]
            {
                return bad(format!("target {t} precedes the slot below it"));
            }
        }
        let mut demand = vec![0usize; self.spec.num_groups];
        for g in self.target_groups() {
            demand[g as usize] += 1;
        }
        if self.yard.group_counts(self.spec.num_groups) != demand
            || self.yard.slots.iter().any(|s| {
                s.is_occupied() && (s.group < 0 || s.group as usize >= self.spec.num_groups)
            })
        {
            return bad("yard group counts differ from target demand".into());
        }
        if self.crane_partition.len() != self.spec.num_cranes {
            return bad("crane partition size differs from crane count".into());
        }
        let flat: Vec<usize> = self.crane_partition.concat();
        if flat != self.targets {
            return bad("crane partition does not concatenate to the target list".into());
        }
        Ok(())
    }
}

/// First `m` empty vessel slots in flat-id order: ascending bay, row, then tier.
pub fn build_sequencer(vessel: &GridState, m: usize) -> Result<Vec<usize>> {
    let targets: Vec<usize> = vessel
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_occupied())
        .map(|(id, _)| id)
        .take(m)
        .collect();
    if targets.len() < m {
        return Err(ModelError::InvalidScenario(format!(
            "vessel has {} empty slots, {m} requested",
            targets.len()
        )));
    }
    Ok(targets)
}

/// Splits the sequencer into `k` contiguous runs whose sizes differ by at most one,
/// the larger runs going to the first cranes.
pub fn partition_targets(targets: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if k == 0 || (k > targets.len() && !targets.is_empty()) {
        return Err(ModelError::TooManyCranes {
            cranes: k,
            targets: targets.len(),
        });
    }
    let base = targets.len() / k;
    let extra = targets.len() % k;
    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for crane in 0..k {
        let len = base + usize::from(crane < extra);
        out.push(targets[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

fn random_non_full_stack(grid: &GridState, rng: &mut ChaCha8Rng) -> usize {
    let open: Vec<usize> = (0..grid.spec.stacks())
        .filter(|&s| grid.stack_height(s) < grid.spec.tiers)
        .collect();
    open[rng.random_range(0..open.len())]
}

pub fn generate_instance(spec: &ScenarioSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.num_containers;
    let groups = spec.num_groups;

    let mut vessel = GridState::empty(spec.vessel);
    let spare = spec.vessel.capacity() - m;
    let pre = (spec.pre_occupancy * spare as f64).floor() as usize;
    for _ in 0..pre {
        let stack = random_non_full_stack(&vessel, &mut rng);
        let g = rng.random_range(0..groups) as i32;
        vessel.push_on_stack(stack, g);
    }

    let targets = build_sequencer(&vessel, m)?;
    let mut demand: Vec<i32> = Vec::with_capacity(m);
    for &t in &targets {
        let g = rng.random_range(0..groups) as i32;
        vessel.slots[t].group = g;
        demand.push(g);
    }

    demand.shuffle(&mut rng);
    let mut yard = GridState::empty(spec.yard);
    for g in demand {
        let stack = random_non_full_stack(&yard, &mut rng);
        yard.push_on_stack(stack, g);
    }

    let crane_partition = partition_targets(&targets, spec.num_cranes)?;
    Ok(ProblemInstance {
        spec: *spec,
        vessel,
        yard,
        targets,
        crane_partition,
    })
}
