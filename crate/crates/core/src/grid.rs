//! Slot grids for vessels and yards.
//!
//! A grid is a `bays x rows x tiers` cube of slots. Slots are addressed either by a
//! [`SlotCoord`] (1-based, tier 1 at the bottom) or by a flat id in `0..capacity`,
//! ordered bay-major, then row, then tier.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Group value carried by slots for which the group attribute does not apply.
pub const NO_GROUP: i32 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub bays: usize,
    pub rows: usize,
    pub tiers: usize,
}

impl GridSpec {
    pub const fn new(bays: usize, rows: usize, tiers: usize) -> Self {
        Self { bays, rows, tiers }
    }

    #[inline]
    pub const fn capacity(&self) -> usize {
        self.bays * self.rows * self.tiers
    }

    #[inline]
    pub const fn stacks(&self) -> usize {
        self.bays * self.rows
    }

    pub fn validate(&self) -> Result<()> {
        if self.bays == 0 || self.rows == 0 || self.tiers == 0 {
            return Err(ModelError::InvalidScenario(format!(
                "grid {}x{}x{} has a zero dimension",
                self.bays, self.rows, self.tiers
            )));
        }
        Ok(())
    }

    pub fn encode(&self, coord: SlotCoord) -> Result<usize> {
        let SlotCoord { bay, row, tier } = coord;
        if bay == 0 || row == 0 || tier == 0 || bay > self.bays || row > self.rows || tier > self.tiers
        {
            return Err(ModelError::CoordOutOfRange {
                bay,
                row,
                tier,
                bays: self.bays,
                rows: self.rows,
                tiers: self.tiers,
            });
        }
        Ok((bay - 1) * self.rows * self.tiers + (row - 1) * self.tiers + (tier - 1))
    }

    pub fn decode(&self, id: usize) -> Result<SlotCoord> {
        self.check_id(id)?;
        let tier = id % self.tiers + 1;
        let row = (id / self.tiers) % self.rows + 1;
        let bay = id / (self.tiers * self.rows) + 1;
        Ok(SlotCoord { bay, row, tier })
    }

    #[inline]
    pub fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.capacity() {
            Err(ModelError::SlotOutOfRange {
                id,
                capacity: self.capacity(),
            })
        } else {
            Ok(())
        }
    }

    /// Index of the (bay, row) stack containing `id`.
    #[inline]
    pub fn stack_of(&self, id: usize) -> usize {
        id / self.tiers
    }

    /// Flat id of the bottom slot of stack `stack`.
    #[inline]
    pub fn stack_base(&self, stack: usize) -> usize {
        stack * self.tiers
    }

    /// Zero-based tier index of `id` inside its stack.
    #[inline]
    pub fn tier_index(&self, id: usize) -> usize {
        id % self.tiers
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotCoord {
    pub bay: usize,
    pub row: usize,
    pub tier: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub coord: SlotCoord,
    pub occupancy: u8,
    pub group: i32,
}

impl SlotRecord {
    #[inline]
    pub fn is_occupied(&self) -> bool {
        self.occupancy == 1
    }
}

/// A vessel or yard cube. Vessel slots carry their required group whether filled or
/// not; yard slots carry the group of the container they hold, or [`NO_GROUP`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridState {
    pub spec: GridSpec,
    pub slots: Vec<SlotRecord>,
}

impl GridState {
    pub fn empty(spec: GridSpec) -> Self {
        let slots = (0..spec.capacity())
            .map(|id| SlotRecord {
                coord: spec.decode(id).expect("id within capacity"),
                occupancy: 0,
                group: NO_GROUP,
            })
            .collect();
        Self { spec, slots }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, id: usize) -> Result<&SlotRecord> {
        self.spec.check_id(id)?;
        Ok(&self.slots[id])
    }

    #[inline]
    pub fn is_occupied(&self, id: usize) -> bool {
        self.slots.get(id).is_some_and(SlotRecord::is_occupied)
    }

    pub fn occupied_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_occupied()).count()
    }

    /// Number of occupied slots in the stack of `id`.
    pub fn stack_height(&self, stack: usize) -> usize {
        let base = self.spec.stack_base(stack);
        self.slots[base..base + self.spec.tiers]
            .iter()
            .take_while(|s| s.is_occupied())
            .count()
    }

    /// True when no occupied slot sits above an empty one.
    pub fn satisfies_gravity(&self) -> bool {
        self.slots
            .chunks(self.spec.tiers)
            .all(|stack| stack.windows(2).all(|w| w[0].is_occupied() || !w[1].is_occupied()))
    }

    /// Per-group counts of occupied slots. Index = group.
    pub fn group_counts(&self, num_groups: usize) -> Vec<usize> {
        let mut counts = vec![0; num_groups];
        for s in self.slots.iter().filter(|s| s.is_occupied()) {
            if let Ok(g) = usize::try_from(s.group) {
                if g < num_groups {
                    counts[g] += 1;
                }
            }
        }
        counts
    }

    /// Appends a container on top of stack `stack`. Used by generators.
    pub(crate) fn push_on_stack(&mut self, stack: usize, group: i32) -> usize {
        let height = self.stack_height(stack);
        let id = self.spec.stack_base(stack) + height;
        self.slots[id].occupancy = 1;
        self.slots[id].group = group;
        id
    }
}

/// Number of occupied slots strictly above `slot_id` in its stack.
pub fn count_shifters(yard: &GridState, slot_id: usize) -> Result<usize> {
    yard.spec.check_id(slot_id)?;
    if !yard.slots[slot_id].is_occupied() {
        return Err(ModelError::EmptySlot(slot_id));
    }
    let top = yard.spec.stack_base(yard.spec.stack_of(slot_id)) + yard.spec.tiers;
    Ok(yard.slots[slot_id + 1..top]
        .iter()
        .filter(|s| s.is_occupied())
        .count())
}

/// Container removed from the yard by [`extract_container`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extraction {
    pub group: i32,
    pub shifters: usize,
}

/// Removes the container at `slot_id`. Blocking containers above it are restacked on
/// the same stack in their original order, each dropping one tier.
pub fn extract_container(yard: &mut GridState, slot_id: usize) -> Result<Extraction> {
    let shifters = count_shifters(yard, slot_id)?;
    let group = yard.slots[slot_id].group;
    let top = yard.spec.stack_base(yard.spec.stack_of(slot_id)) + yard.spec.tiers;
    for id in slot_id..top - 1 {
        let above = yard.slots[id + 1];
        yard.slots[id].occupancy = above.occupancy;
        yard.slots[id].group = above.group;
    }
    yard.slots[top - 1].occupancy = 0;
    yard.slots[top - 1].group = NO_GROUP;
    Ok(Extraction { group, shifters })
}

/// Fills vessel slot `slot_id` with a container of `group`.
pub fn place_container(vessel: &mut GridState, slot_id: usize, group: i32) -> Result<()> {
    vessel.spec.check_id(slot_id)?;
    let slot = vessel.slots[slot_id];
    if slot.is_occupied() {
        return Err(ModelError::OccupiedSlot(slot_id));
    }
    if slot.group != group {
        return Err(ModelError::GroupMismatch {
            slot: slot_id,
            required: slot.group,
            given: group,
        });
    }
    if vessel.spec.tier_index(slot_id) > 0 && !vessel.slots[slot_id - 1].is_occupied() {
        return Err(ModelError::Floating(slot_id));
    }
    vessel.slots[slot_id].occupancy = 1;
    Ok(())
}
