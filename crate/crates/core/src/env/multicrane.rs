//! Clocked multi-crane formulations.
//!
//! Both environments share [`ClockedState`]: a global clock, one [`CraneState`] per
//! crane and the grids. Assigning a container to a crane makes it busy until
//! `clock + duration(shifters)`. After every assignment the clock jumps forward to
//! the next crane release until some crane with remaining targets is idle, so every
//! decision point has at least one actionable crane.
//!
//! [`SpgeMcEnv`] lets a single agent pick a (container, crane) pair. [`SpaecEnv`]
//! activates the idle crane with the lowest index and the shared policy only picks
//! the container.

use serde::{Deserialize, Serialize};

use super::{
    matching_containers, push_grid, push_target, EnvConfig, EnvKind, EpisodeKpis, Environment,
    FeatureBounds, Outcome, StepInfo, TraceRecord,
};
use crate::error::{ModelError, Result};
use crate::grid::{count_shifters, extract_container, place_container, GridState};
use crate::scenario::ProblemInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CraneState {
    /// Time at which the crane finishes its current lift.
    pub free_at: f64,
    /// Yard slot the current container came from, or -1 when idle.
    pub operating: i64,
    /// Targets this crane has filled.
    pub cursor: usize,
}

impl CraneState {
    const IDLE: CraneState = CraneState {
        free_at: 0.0,
        operating: -1,
        cursor: 0,
    };
}

/// A (container, crane) pair flattened as `crane * yard_capacity + container`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompositeAction {
    pub container: usize,
    pub crane: usize,
}

impl CompositeAction {
    pub fn decode(action: usize, yard_capacity: usize) -> Self {
        Self {
            container: action % yard_capacity,
            crane: action / yard_capacity,
        }
    }

    pub fn encode(self, yard_capacity: usize) -> usize {
        self.crane * yard_capacity + self.container
    }
}

#[derive(Debug, Clone)]
pub struct ClockedState {
    instance: ProblemInstance,
    config: EnvConfig,
    clock: f64,
    cranes: Vec<CraneState>,
    vessel: GridState,
    yard: GridState,
    steps: usize,
    shifters: usize,
    trace: Vec<TraceRecord>,
}

impl ClockedState {
    pub fn new(instance: ProblemInstance, config: EnvConfig) -> Result<Self> {
        config.time_model.validate()?;
        if instance.crane_partition.is_empty() {
            return Err(ModelError::InvalidInstance("instance has no cranes".into()));
        }
        let mut state = Self {
            cranes: vec![CraneState::IDLE; instance.crane_partition.len()],
            vessel: instance.vessel.clone(),
            yard: instance.yard.clone(),
            instance,
            config,
            clock: 0.0,
            steps: 0,
            shifters: 0,
            trace: Vec::new(),
        };
        state.reset();
        Ok(state)
    }

    pub fn reset(&mut self) {
        self.clock = 0.0;
        self.cranes.fill(CraneState::IDLE);
        self.vessel = self.instance.vessel.clone();
        self.yard = self.instance.yard.clone();
        self.steps = 0;
        self.shifters = 0;
        self.trace.clear();
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn cranes(&self) -> &[CraneState] {
        &self.cranes
    }

    pub fn num_cranes(&self) -> usize {
        self.cranes.len()
    }

    pub fn total_shifters(&self) -> usize {
        self.shifters
    }

    #[inline]
    pub fn is_idle(&self, crane: usize) -> bool {
        self.cranes[crane].free_at <= self.clock
    }

    #[inline]
    pub fn is_exhausted(&self, crane: usize) -> bool {
        self.cranes[crane].cursor >= self.instance.crane_partition[crane].len()
    }

    /// Idle and holding a fillable target.
    #[inline]
    pub fn can_act(&self, crane: usize) -> bool {
        self.is_idle(crane) && self.crane_target(crane).is_some()
    }

    /// First unfilled slot in the crane's sequencer that rests on tier 0 or an
    /// occupied slot. A stack can straddle two cranes' ranges, and the upper crane
    /// skips its share of that stack until the lower crane has filled the slots
    /// beneath; `None` when the crane is done or everything left is unsupported.
    pub fn crane_target(&self, crane: usize) -> Option<usize> {
        let v = &self.vessel;
        self.instance.crane_partition[crane].iter().copied().find(|&t| {
            !v.slots[t].is_occupied() && (v.spec.tier_index(t) == 0 || v.slots[t - 1].is_occupied())
        })
    }

    /// Lowest-index crane that can act.
    pub fn active_crane(&self) -> Option<usize> {
        (0..self.cranes.len()).find(|&c| self.can_act(c))
    }

    pub fn is_valid(&self, container: usize, crane: usize) -> bool {
        if crane >= self.cranes.len() || !self.can_act(crane) {
            return false;
        }
        let Some(target) = self.crane_target(crane) else {
            return false;
        };
        self.yard
            .slots
            .get(container)
            .is_some_and(|s| s.is_occupied() && s.group == self.vessel.slots[target].group)
    }

    /// Largest release time over all cranes.
    pub fn makespan_so_far(&self) -> f64 {
        self.cranes.iter().map(|c| c.free_at).fold(0.0, f64::max)
    }

    pub fn is_done(&self) -> bool {
        (0..self.cranes.len()).all(|c| self.is_exhausted(c) && self.is_idle(c))
    }

    pub fn makespan(&self) -> Result<f64> {
        if self.is_done() {
            Ok(self.makespan_so_far())
        } else {
            Err(ModelError::EpisodeRunning)
        }
    }

    /// Cranes currently carrying a container.
    pub fn in_flight(&self) -> usize {
        (0..self.cranes.len()).filter(|&c| !self.is_idle(c)).count()
    }

    /// Number of targets each crane has filled so far.
    pub fn placements(&self) -> Vec<usize> {
        self.cranes.iter().map(|c| c.cursor).collect()
    }

    pub fn vessel(&self) -> &GridState {
        &self.vessel
    }

    pub fn yard(&self) -> &GridState {
        &self.yard
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Assigns `container` to `crane`. Invalid pairs are penalized and leave the state
    /// untouched.
    pub fn assign(&mut self, container: usize, crane: usize, action: usize) -> Result<Outcome> {
        if self.is_done() {
            return Err(ModelError::EpisodeFinished);
        }
        let decided_at = self.clock;
        let out = if self.is_valid(container, crane) {
            let target = self.crane_target(crane).expect("valid pair has a target");
            let before = self.makespan_so_far();
            let taken = extract_container(&mut self.yard, container)?;
            place_container(&mut self.vessel, target, taken.group)?;
            let state = &mut self.cranes[crane];
            state.free_at = self.clock + self.config.time_model.duration(taken.shifters);
            state.operating = container as i64;
            state.cursor += 1;
            self.shifters += taken.shifters;
            let grown = self.makespan_so_far() - before;
            self.auto_advance();
            Outcome {
                reward: -(taken.shifters as f64)
                    - self.config.lambda_time * grown / self.config.time_model.load,
                done: self.is_done(),
                info: StepInfo {
                    shifters: taken.shifters,
                    invalid: false,
                    makespan: Some(self.makespan_so_far()),
                },
            }
        } else {
            Outcome {
                reward: -self.config.invalid_penalty,
                done: false,
                info: StepInfo {
                    shifters: 0,
                    invalid: true,
                    makespan: Some(self.makespan_so_far()),
                },
            }
        };
        if self.config.trace {
            self.trace.push(TraceRecord {
                step: self.steps,
                action,
                shifters: out.info.shifters,
                reward: out.reward,
                invalid: out.info.invalid,
                crane: Some(crane),
                t: Some(decided_at),
                tau: self.cranes.get(crane).map(|c| c.free_at),
                makespan: out.info.makespan,
            });
        }
        self.steps += 1;
        Ok(out)
    }

    fn auto_advance(&mut self) {
        while !(0..self.cranes.len()).any(|c| self.can_act(c)) {
            let next = self
                .cranes
                .iter()
                .map(|c| c.free_at)
                .filter(|&t| t > self.clock)
                .fold(f64::INFINITY, f64::min);
            if !next.is_finite() {
                break;
            }
            self.clock = next;
            let clock = self.clock;
            for c in self.cranes.iter_mut().filter(|c| c.free_at <= clock) {
                c.operating = -1;
            }
        }
    }

    fn push_observation(&self, out: &mut Vec<f64>) {
        push_grid(out, &self.vessel);
        push_grid(out, &self.yard);
        push_target(out, &self.vessel, self.active_crane().and_then(|c| self.crane_target(c)));
        out.extend(self.cranes.iter().map(|c| (c.free_at - self.clock).max(0.0)));
        out.extend(self.cranes.iter().map(|c| c.operating as f64));
        out.extend(
            (0..self.cranes.len()).map(|c| self.crane_target(c).map_or(-1.0, |t| t as f64)),
        );
    }

    fn kpis(&self) -> Result<EpisodeKpis> {
        Ok(EpisodeKpis {
            operation_time: self.makespan()?,
            shifters: self.shifters,
        })
    }

    /// Shifters the container at `container` would cost right now.
    pub fn container_shifters(&self, container: usize) -> Option<usize> {
        count_shifters(&self.yard, container).ok()
    }
}

/// Single agent choosing (container, crane) pairs.
#[derive(Debug, Clone)]
pub struct SpgeMcEnv {
    state: ClockedState,
    bounds: Option<FeatureBounds>,
}

impl SpgeMcEnv {
    pub fn new(instance: ProblemInstance, config: EnvConfig) -> Result<Self> {
        let bounds = config
            .normalize
            .then(|| FeatureBounds::new(EnvKind::SpgeMc, &instance.spec, &config.time_model));
        Ok(Self {
            state: ClockedState::new(instance, config)?,
            bounds,
        })
    }

    pub fn state(&self) -> &ClockedState {
        &self.state
    }

    pub fn makespan(&self) -> Result<f64> {
        self.state.makespan()
    }

    fn yard_capacity(&self) -> usize {
        self.state.yard.capacity()
    }
}

impl Environment for SpgeMcEnv {
    fn observation_len(&self) -> usize {
        EnvKind::SpgeMc.observation_len(&self.state.instance.spec)
    }

    fn action_count(&self) -> usize {
        self.yard_capacity() * self.state.num_cranes()
    }

    fn reset(&mut self) -> (Vec<f64>, Vec<bool>) {
        self.state.reset();
        (self.observe(), self.action_mask())
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.observation_len());
        self.state.push_observation(&mut obs);
        if let Some(b) = &self.bounds {
            b.apply(&mut obs);
        }
        obs
    }

    fn action_mask(&self) -> Vec<bool> {
        let cap = self.yard_capacity();
        let mut mask = vec![false; self.action_count()];
        for crane in 0..self.state.num_cranes() {
            if let Some(target) = self.state.crane_target(crane).filter(|_| self.state.can_act(crane)) {
                let group = self.state.vessel.slots[target].group;
                for container in matching_containers(&self.state.yard, group) {
                    mask[crane * cap + container] = true;
                }
            }
        }
        mask
    }

    fn act(&mut self, action: usize) -> Result<Outcome> {
        if action >= self.action_count() {
            return Err(ModelError::ActionOutOfRange {
                action,
                size: self.action_count(),
            });
        }
        let pair = CompositeAction::decode(action, self.yard_capacity());
        self.state.assign(pair.container, pair.crane, action)
    }

    fn is_done(&self) -> bool {
        self.state.is_done()
    }

    fn kpis(&self) -> Result<EpisodeKpis> {
        self.state.kpis()
    }

    fn action_shifters(&self, action: usize) -> Option<usize> {
        self.state
            .container_shifters(CompositeAction::decode(action, self.yard_capacity()).container)
    }

    fn yard(&self) -> &GridState {
        &self.state.yard
    }

    fn vessel(&self) -> &GridState {
        &self.state.vessel
    }

    fn trace(&self) -> &[TraceRecord] {
        &self.state.trace
    }
}

/// One agent per crane sharing a policy; cranes act in index order when several are
/// idle at once.
#[derive(Debug, Clone)]
pub struct SpaecEnv {
    state: ClockedState,
    bounds: Option<FeatureBounds>,
}

impl SpaecEnv {
    pub fn new(instance: ProblemInstance, config: EnvConfig) -> Result<Self> {
        let bounds = config
            .normalize
            .then(|| FeatureBounds::new(EnvKind::Spaec, &instance.spec, &config.time_model));
        Ok(Self {
            state: ClockedState::new(instance, config)?,
            bounds,
        })
    }

    pub fn state(&self) -> &ClockedState {
        &self.state
    }

    /// The crane that acts next, or `None` once the episode is over.
    pub fn agent_cycle(&self) -> Option<usize> {
        self.state.active_crane()
    }

    pub fn makespan(&self) -> Result<f64> {
        self.state.makespan()
    }
}

impl Environment for SpaecEnv {
    fn observation_len(&self) -> usize {
        EnvKind::Spaec.observation_len(&self.state.instance.spec)
    }

    fn action_count(&self) -> usize {
        self.state.yard.capacity()
    }

    fn reset(&mut self) -> (Vec<f64>, Vec<bool>) {
        self.state.reset();
        (self.observe(), self.action_mask())
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = Vec::with_capacity(self.observation_len());
        self.state.push_observation(&mut obs);
        let active = self.agent_cycle();
        obs.extend((0..self.state.num_cranes()).map(|c| if Some(c) == active { 1.0 } else { 0.0 }));
        if let Some(b) = &self.bounds {
            b.apply(&mut obs);
        }
        obs
    }

    fn action_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.action_count()];
        if let Some(target) = self.agent_cycle().and_then(|c| self.state.crane_target(c)) {
            for container in matching_containers(&self.state.yard, self.state.vessel.slots[target].group) {
                mask[container] = true;
            }
        }
        mask
    }

    fn act(&mut self, action: usize) -> Result<Outcome> {
        if action >= self.action_count() {
            return Err(ModelError::ActionOutOfRange {
                action,
                size: self.action_count(),
            });
        }
        let crane = self.agent_cycle().ok_or(ModelError::EpisodeFinished)?;
        self.state.assign(action, crane, action)
    }

    fn is_done(&self) -> bool {
        self.state.is_done()
    }

    fn kpis(&self) -> Result<EpisodeKpis> {
        self.state.kpis()
    }

    fn action_shifters(&self, action: usize) -> Option<usize> {
        self.state.container_shifters(action)
    }

    fn yard(&self) -> &GridState {
        &self.state.yard
    }

    fn vessel(&self) -> &GridState {
        &self.state.vessel
    }

    fn trace(&self) -> &[TraceRecord] {
        &self.state.trace
    }
}
