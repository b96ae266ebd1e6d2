//! Episodic environment: reset/step lifecycle, observations, action masks,
//! rewards and composite termination.
//!
//! Action indices per agent:
//!
//! | index | meaning |
//! |-------|---------|
//! | 0 | no-op (only for dead agents) |
//! | 1 | stop |
//! | 2..=5 | move north, south, east, west |
//! | 6.. | target slot `k`: attack enemy `k`, or for medivacs heal agent `k` |

mod obs;
mod reward;

pub use obs::{
    compute_visibility, encode_observation, encode_state, observation_size, state_size,
    ENTITY_FEATURES, OWN_FEATURES, STATE_FEATURES,
};
pub use reward::{compute_reward, reward_normalizer, RewardDeltas};

use std::sync::Arc;

use crate::catalog::{generate_layout, CompositeTaskSpec};
use crate::config::EngineConfig;
use crate::engine::{Allegiance, Command, EnemyControllerKind, SubtaskSite, UnitState, World};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const ACTION_NOOP: usize = 0;
pub const ACTION_STOP: usize = 1;
pub const ACTION_NORTH: usize = 2;
pub const ACTION_SOUTH: usize = 3;
pub const ACTION_EAST: usize = 4;
pub const ACTION_WEST: usize = 5;
pub const FIRST_TARGET_ACTION: usize = 6;

/// Per-step counters reported alongside the reward.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    pub step: u32,
    pub enemy_damage: u32,
    pub enemy_healing: u32,
    pub ally_damage: u32,
    pub enemy_kills: u32,
    pub ally_kills: u32,
    /// Agent actions that failed the availability mask and became stop/no-op.
    pub invalid_actions: u32,
    /// Commands the engine refused (cooldown, target moved away, ...).
    pub rejected_commands: u32,
    pub pursuit_damage: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub terminated: bool,
    pub won: bool,
    /// Index of the subtask whose base was occupied.
    pub failed_subtask: Option<usize>,
    pub timed_out: bool,
    pub info: StepInfo,
}

/// One episode of a composite task. Single caller; run several instances for
/// parallel rollouts.
#[derive(Clone, Debug)]
pub struct Env {
    spec: Arc<CompositeTaskSpec>,
    config: Arc<EngineConfig>,
    world: World,
    n_agents: usize,
    n_enemies: usize,
    n_actions: usize,
    step_count: u32,
    terminated: bool,
    normalizer: f64,
    seed: u64,
    commands: Vec<Command>,
    applied_actions: Vec<usize>,
}

impl Env {
    /// Build an environment and reset it with seed 0.
    ///
    /// Only hard requirements are enforced here (at least one subtask and
    /// agent, non-empty enemy groups, positive episode limit, feasible
    /// layout). Full catalog invariants live in
    /// [`validate_spec`](crate::catalog::validate_spec).
    pub fn new(
        spec: impl Into<Arc<CompositeTaskSpec>>,
        config: impl Into<Arc<EngineConfig>>,
    ) -> Result<Self> {
        let spec = spec.into();
        let config = config.into();
        if spec.subtasks.is_empty()
            || spec.agents.is_empty()
            || spec.episode_limit == 0
            || spec.subtasks.iter().any(|s| s.enemies.is_empty())
        {
            return Err(Error::InvalidArgument(format!(
                "task `{}` needs agents, a positive episode limit and non-empty enemy groups",
                spec.name
            )));
        }
        let n_agents = spec.n_agents();
        let n_enemies = spec.n_enemies();
        let normalizer = reward_normalizer(&spec, &config);
        let world = Self::build_world(&spec, &config, 0)?;
        Ok(Self {
            n_actions: FIRST_TARGET_ACTION + n_agents.max(n_enemies),
            commands: vec![Command::NoOp; n_agents + n_enemies],
            applied_actions: vec![ACTION_STOP; n_agents],
            spec,
            config,
            world,
            n_agents,
            n_enemies,
            step_count: 0,
            terminated: false,
            normalizer,
            seed: 0,
        })
    }

    fn build_world(spec: &CompositeTaskSpec, config: &EngineConfig, seed: u64) -> Result<World> {
        let layout = generate_layout(spec, config, seed)?;
        let stats = &config.units;
        let mut units = Vec::with_capacity(layout.allies.len() + layout.enemies.len());
        for s in &layout.allies {
            units.push(UnitState::spawn(
                units.len(),
                s.archetype,
                Allegiance::Ally,
                None,
                s.subtask_index,
                s.position,
                stats,
            ));
        }
        for s in &layout.enemies {
            let kind = spec.subtasks[s.subtask_index].kind;
            units.push(UnitState::spawn(
                units.len(),
                s.archetype,
                Allegiance::Enemy,
                Some(kind),
                s.subtask_index,
                s.position,
                stats,
            ));
        }
        Ok(World::new(
            units,
            stats.clone(),
            spec.map,
            layout.sites,
            config.defense_enemy_mode,
        ))
    }

    /// Start a new episode. Same spec, config and seed give bitwise-identical
    /// observations.
    pub fn reset(&mut self, seed: u64) -> Result<(Vec<Vec<f32>>, Vec<f32>)> {
        self.world = Self::build_world(&self.spec, &self.config, seed)?;
        self.seed = seed;
        self.step_count = 0;
        self.terminated = false;
        Ok((self.observations(), self.state()))
    }

    /// Advance one step with one action index per agent.
    ///
    /// Actions failing the availability mask are replaced by stop (no-op for
    /// dead agents) and counted in [`StepInfo::invalid_actions`].
    pub fn step(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        if self.terminated {
            return Err(Error::EpisodeTerminated);
        }
        if actions.len() != self.n_agents {
            return Err(Error::ActionArity {
                expected: self.n_agents,
                found: actions.len(),
            });
        }

        let mut info = StepInfo::default();
        self.commands.fill(Command::NoOp);
        for (agent, &action) in actions.iter().enumerate() {
            let action = if self.is_available(agent, action) {
                action
            } else {
                info.invalid_actions += 1;
                let fallback = if self.world.unit(agent).alive {
                    ACTION_STOP
                } else {
                    ACTION_NOOP
                };
                log::debug!(
                    "agent {agent}: action {action} unavailable at step {}, using {fallback}",
                    self.step_count
                );
                fallback
            };
            self.applied_actions[agent] = action;
            self.commands[agent] = self.decode(agent, action);
        }
        self.world.enemy_commands(&mut self.commands);
        let events = self.world.resolve(&self.commands);
        self.step_count += 1;

        info.step = self.step_count;
        info.enemy_damage = events.damage_to_enemies;
        info.enemy_healing = events.healing_to_enemies;
        info.ally_damage = events.damage_to_allies;
        info.enemy_kills = events.enemy_kills;
        info.ally_kills = events.ally_kills;
        info.rejected_commands = events.rejections.len() as u32;
        info.pursuit_damage = events.pursuit_damage;

        let failed_subtask = self.occupied_subtask();
        let won = failed_subtask.is_none() && self.enemies().iter().all(|u| !u.alive);
        let timed_out =
            failed_subtask.is_none() && !won && self.step_count >= self.spec.episode_limit;
        self.terminated = failed_subtask.is_some() || won || timed_out;

        let deltas = RewardDeltas {
            enemy_health_loss: i64::from(events.damage_to_enemies)
                - i64::from(events.healing_to_enemies),
            enemy_kills: events.enemy_kills,
            won,
        };
        let reward = compute_reward(&deltas, &self.config.reward, self.normalizer);
        Ok(StepOutcome {
            reward,
            terminated: self.terminated,
            won,
            failed_subtask,
            timed_out,
            info,
        })
    }

    /// Lowest subtask index with a living enemy inside its base's
    /// occupation radius.
    fn occupied_subtask(&self) -> Option<usize> {
        let radius = self.config.occupation_radius;
        let sites = self.world.sites();
        self.enemies()
            .iter()
            .filter(|u| u.alive && u.position.distance(sites[u.subtask_index].base) <= radius)
            .map(|u| u.subtask_index)
            .min()
    }

    fn decode(&self, agent: usize, action: usize) -> Command {
        match action {
            ACTION_NOOP => Command::NoOp,
            ACTION_STOP => Command::Stop,
            ACTION_NORTH => Command::Move(Vec2::new(0.0, 1.0)),
            ACTION_SOUTH => Command::Move(Vec2::new(0.0, -1.0)),
            ACTION_EAST => Command::Move(Vec2::new(1.0, 0.0)),
            ACTION_WEST => Command::Move(Vec2::new(-1.0, 0.0)),
            target => {
                let slot = target - FIRST_TARGET_ACTION;
                if self.world.unit(agent).archetype.is_healer() {
                    Command::Heal(slot)
                } else {
                    Command::Attack(self.n_agents + slot)
                }
            }
        }
    }

    /// Whether `action` passes agent `agent`'s availability mask.
    pub fn is_available(&self, agent: usize, action: usize) -> bool {
        let me = self.world.unit(agent);
        if !me.alive {
            return action == ACTION_NOOP;
        }
        match action {
            ACTION_NOOP => false,
            ACTION_STOP..=ACTION_WEST => true,
            a if a < self.n_actions => {
                let slot = a - FIRST_TARGET_ACTION;
                let stats = self.world.stats().get(me.archetype);
                if me.archetype.is_healer() {
                    slot < self.n_agents
                        && slot != agent
                        && self.world.unit(slot).alive
                        && me.distance(self.world.unit(slot)) <= stats.heal_range
                } else {
                    slot < self.n_enemies && {
                        let target = self.world.unit(self.n_agents + slot);
                        target.alive && me.distance(target) <= stats.attack_range
                    }
                }
            }
            _ => false,
        }
    }

    pub fn avail_actions(&self, agent: usize) -> Vec<bool> {
        (0..self.n_actions)
            .map(|a| self.is_available(agent, a))
            .collect()
    }

    pub fn observe_into(&self, agent: usize, out: &mut [f32]) {
        encode_observation(
            self.world.units(),
            self.n_agents,
            agent,
            self.world.stats(),
            self.world.bounds(),
            out,
        );
    }

    pub fn observations(&self) -> Vec<Vec<f32>> {
        (0..self.n_agents)
            .map(|agent| {
                let mut out = vec![0.0; self.obs_size()];
                self.observe_into(agent, &mut out);
                out
            })
            .collect()
    }

    /// All agents' observations in one contiguous agent-major buffer.
    pub fn observations_flat(&self) -> Vec<f32> {
        let size = self.obs_size();
        let mut out = vec![0.0; size * self.n_agents];
        for (agent, chunk) in out.chunks_exact_mut(size).enumerate() {
            self.observe_into(agent, chunk);
        }
        out
    }

    pub fn state(&self) -> Vec<f32> {
        let mut out = vec![0.0; self.state_size()];
        encode_state(
            self.world.units(),
            self.world.stats(),
            self.world.bounds(),
            &mut out,
        );
        out
    }

    pub fn obs_size(&self) -> usize {
        observation_size(self.n_agents, self.n_enemies)
    }

    pub fn state_size(&self) -> usize {
        state_size(self.n_agents + self.n_enemies)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_enemies(&self) -> usize {
        self.n_enemies
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn step_count(&self) -> u32 {
        self.step_count
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn spec(&self) -> &CompositeTaskSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> &Arc<CompositeTaskSpec> {
        &self.spec
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn config_arc(&self) -> &Arc<EngineConfig> {
        &self.config
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Scenario hook: direct access to the world between steps.
    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn sites(&self) -> &[SubtaskSite] {
        self.world.sites()
    }

    pub fn agents(&self) -> &[UnitState] {
        &self.world.units()[..self.n_agents]
    }

    pub fn enemies(&self) -> &[UnitState] {
        &self.world.units()[self.n_agents..]
    }

    /// Actions as applied in the last step, after mask coercion.
    pub fn applied_actions(&self) -> &[usize] {
        &self.applied_actions
    }

    pub fn subtask_kind(&self, index: usize) -> EnemyControllerKind {
        self.world.sites()[index].kind
    }
}
