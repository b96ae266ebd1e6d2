//! Deterministic discrete-time combat core.
//!
//! Every step collects one [`Command`] per unit and resolves them in
//! ascending `unit_id` order. A unit killed earlier in the step loses its
//! command. Cooldowns tick down once at the end of the step.

mod controllers;
mod unit;

pub use controllers::{defense_controller_step, medivac_controller_step, pursuit_controller_step};
pub use unit::{
    Allegiance, Archetype, ArchetypeStats, ArchetypeTable, EnemyControllerKind, UnitId, UnitState,
};

use crate::config::DefenseEnemyMode;
use crate::geometry::{MapBounds, Vec2};
use std::fmt;

/// One unit's order for a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Command {
    /// The only order a dead unit may carry.
    NoOp,
    Stop,
    /// Displace by `move_speed * direction`; `direction` should be a unit vector.
    Move(Vec2),
    /// Close in on a point, never overshooting it.
    MoveToward(Vec2),
    Attack(UnitId),
    Heal(UnitId),
}

/// Why the engine refused a command. Refused commands leave state untouched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    ActorDead,
    TargetDead,
    UnknownTarget,
    OutOfRange,
    OnCooldown,
    CannotAttack,
    CannotHeal,
    PursuitNeverAttacks,
    SameAllegiance,
    DifferentAllegiance,
    SelfTarget,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Rejection::ActorDead => "actor is dead",
            Rejection::TargetDead => "target is dead",
            Rejection::UnknownTarget => "target does not exist",
            Rejection::OutOfRange => "target out of range",
            Rejection::OnCooldown => "weapon on cooldown",
            Rejection::CannotAttack => "archetype has no attack",
            Rejection::CannotHeal => "archetype cannot heal",
            Rejection::PursuitNeverAttacks => "pursuit units never attack",
            Rejection::SameAllegiance => "cannot attack a friendly unit",
            Rejection::DifferentAllegiance => "cannot heal an opposing unit",
            Rejection::SelfTarget => "cannot target self",
        };
        f.write_str(text)
    }
}

/// Apply one attack. Pure: the inputs are not modified.
pub fn resolve_attack(
    stats: &ArchetypeTable,
    attacker: &UnitState,
    target: &UnitState,
) -> Result<(UnitState, UnitState), Rejection> {
    if !attacker.alive {
        return Err(Rejection::ActorDead);
    }
    if attacker.controller == Some(EnemyControllerKind::PursuitGroup) {
        return Err(Rejection::PursuitNeverAttacks);
    }
    let attacker_stats = stats.get(attacker.archetype);
    if attacker_stats.attack_damage == 0 {
        return Err(Rejection::CannotAttack);
    }
    if attacker.unit_id == target.unit_id {
        return Err(Rejection::SelfTarget);
    }
    if !target.alive {
        return Err(Rejection::TargetDead);
    }
    if !attacker.is_opponent_of(target) {
        return Err(Rejection::SameAllegiance);
    }
    if attacker.distance(target) > attacker_stats.attack_range {
        return Err(Rejection::OutOfRange);
    }
    if attacker.cooldown_remaining > 0 {
        return Err(Rejection::OnCooldown);
    }

    let mut attacker = attacker.clone();
    let mut target = target.clone();
    target.health = target.health.saturating_sub(attacker_stats.attack_damage);
    target.was_attacked = true;
    if target.health == 0 {
        target.alive = false;
    }
    attacker.cooldown_remaining = attacker_stats.cooldown_steps;
    Ok((attacker, target))
}

/// Apply one heal. Healing a unit already at full health is allowed and
/// changes nothing but the healer's cooldown.
pub fn resolve_heal(
    stats: &ArchetypeTable,
    healer: &UnitState,
    target: &UnitState,
) -> Result<(UnitState, UnitState), Rejection> {
    if !healer.alive {
        return Err(Rejection::ActorDead);
    }
    let healer_stats = stats.get(healer.archetype);
    if healer_stats.heal_amount == 0 {
        return Err(Rejection::CannotHeal);
    }
    if healer.unit_id == target.unit_id {
        return Err(Rejection::SelfTarget);
    }
    if !target.alive {
        return Err(Rejection::TargetDead);
    }
    if healer.is_opponent_of(target) {
        return Err(Rejection::DifferentAllegiance);
    }
    if healer.distance(target) > healer_stats.heal_range {
        return Err(Rejection::OutOfRange);
    }
    if healer.cooldown_remaining > 0 {
        return Err(Rejection::OnCooldown);
    }

    let mut healer = healer.clone();
    let mut target = target.clone();
    let max = stats.get(target.archetype).max_health;
    target.health = (target.health + healer_stats.heal_amount).min(max);
    healer.cooldown_remaining = healer_stats.cooldown_steps;
    Ok((healer, target))
}

/// Displace a unit by `move_speed * direction`, clamped to the map. A zero
/// direction is a no-op.
pub fn move_unit(
    stats: &ArchetypeTable,
    bounds: &MapBounds,
    unit: &UnitState,
    direction: Vec2,
) -> Result<UnitState, Rejection> {
    if !unit.alive {
        return Err(Rejection::ActorDead);
    }
    let mut moved = unit.clone();
    if direction == Vec2::ZERO {
        return Ok(moved);
    }
    let speed = stats.get(unit.archetype).move_speed;
    moved.position = bounds.clamp(unit.position + direction * speed);
    Ok(moved)
}

/// Move straight toward `point` by at most `move_speed`.
pub fn move_toward(
    stats: &ArchetypeTable,
    bounds: &MapBounds,
    unit: &UnitState,
    point: Vec2,
) -> Result<UnitState, Rejection> {
    if !unit.alive {
        return Err(Rejection::ActorDead);
    }
    let mut moved = unit.clone();
    let delta = point - unit.position;
    let dist = delta.length();
    let speed = stats.get(unit.archetype).move_speed;
    moved.position = if dist <= speed {
        bounds.clamp(point)
    } else {
        bounds.clamp(unit.position + delta * (speed / dist))
    };
    Ok(moved)
}

/// Runtime data for one subtask: who the enemies are and where they go.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtaskSite {
    pub kind: EnemyControllerKind,
    /// Allied base for defense groups, the group's own base for pursuit.
    pub base: Vec2,
    /// Centre of the enemy spawn cluster.
    pub region_center: Vec2,
    /// Centre of the assigned agents' spawn cluster.
    pub ally_center: Vec2,
}

/// What happened during one resolved step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepEvents {
    pub damage_to_enemies: u32,
    pub healing_to_enemies: u32,
    pub damage_to_allies: u32,
    pub healing_to_allies: u32,
    pub enemy_kills: u32,
    pub ally_kills: u32,
    /// Damage dealt by units of pursuit groups; always zero.
    pub pursuit_damage: u32,
    pub rejections: Vec<(UnitId, Rejection)>,
}

/// Complete simulation state of one episode.
#[derive(Clone, Debug)]
pub struct World {
    units: Vec<UnitState>,
    stats: ArchetypeTable,
    bounds: MapBounds,
    sites: Vec<SubtaskSite>,
    defense_mode: DefenseEnemyMode,
}

impl World {
    /// `units[i].unit_id` must equal `i`.
    pub fn new(
        units: Vec<UnitState>,
        stats: ArchetypeTable,
        bounds: MapBounds,
        sites: Vec<SubtaskSite>,
        defense_mode: DefenseEnemyMode,
    ) -> Self {
        debug_assert!(units.iter().enumerate().all(|(i, u)| u.unit_id == i));
        Self {
            units,
            stats,
            bounds,
            sites,
            defense_mode,
        }
    }

    pub fn units(&self) -> &[UnitState] {
        &self.units
    }

    pub fn unit(&self, id: UnitId) -> &UnitState {
        &self.units[id]
    }

    pub fn stats(&self) -> &ArchetypeTable {
        &self.stats
    }

    pub fn bounds(&self) -> &MapBounds {
        &self.bounds
    }

    pub fn sites(&self) -> &[SubtaskSite] {
        &self.sites
    }

    pub fn defense_mode(&self) -> DefenseEnemyMode {
        self.defense_mode
    }

    /// Test hook for building scripted scenarios.
    pub fn units_mut(&mut self) -> &mut [UnitState] {
        &mut self.units
    }

    /// Fill `out[id]` with the scripted command of every enemy unit.
    pub fn enemy_commands(&self, out: &mut [Command]) {
        let opponents: Vec<&UnitState> = self
            .units
            .iter()
            .filter(|u| u.alive && u.allegiance == Allegiance::Ally)
            .collect();
        let mut group: Vec<&UnitState> = Vec::new();
        for (index, site) in self.sites.iter().enumerate() {
            group.clear();
            group.extend(self.units.iter().filter(|u| {
                u.alive && u.allegiance == Allegiance::Enemy && u.subtask_index == index
            }));
            if group.is_empty() {
                continue;
            }
            let commands = match site.kind {
                EnemyControllerKind::DefenseGroup => defense_controller_step(
                    &group,
                    site.base,
                    &opponents,
                    &self.stats,
                    self.defense_mode,
                ),
                EnemyControllerKind::PursuitGroup => {
                    pursuit_controller_step(&group, site.base, &self.stats)
                }
            };
            for (id, command) in commands {
                out[id] = command;
            }
        }
    }

    /// Resolve one command per unit in ascending id order, then tick
    /// cooldowns. `commands[id]` is the order for unit `id`.
    pub fn resolve(&mut self, commands: &[Command]) -> StepEvents {
        assert_eq!(commands.len(), self.units.len(), "one command per unit");
        let mut events = StepEvents::default();
        for (id, &command) in commands.iter().enumerate() {
            if !self.units[id].alive {
                continue;
            }
            if let Err(rejection) = self.apply(id, command, &mut events) {
                events.rejections.push((id, rejection));
            }
        }
        for unit in self.units.iter_mut().filter(|u| u.alive) {
            unit.cooldown_remaining = unit.cooldown_remaining.saturating_sub(1);
        }
        events
    }

    fn target(&self, id: UnitId) -> Result<&UnitState, Rejection> {
        self.units.get(id).ok_or(Rejection::UnknownTarget)
    }

    fn apply(
        &mut self,
        id: UnitId,
        command: Command,
        events: &mut StepEvents,
    ) -> Result<(), Rejection> {
        match command {
            Command::NoOp | Command::Stop => Ok(()),
            Command::Move(direction) => {
                self.units[id] = move_unit(&self.stats, &self.bounds, &self.units[id], direction)?;
                Ok(())
            }
            Command::MoveToward(point) => {
                self.units[id] = move_toward(&self.stats, &self.bounds, &self.units[id], point)?;
                Ok(())
            }
            Command::Attack(target_id) => {
                let target = self.target(target_id)?;
                let before = target.health;
                let (attacker, target) = resolve_attack(&self.stats, &self.units[id], target)?;
                let dealt = before - target.health;
                match target.allegiance {
                    Allegiance::Enemy => events.damage_to_enemies += dealt,
                    Allegiance::Ally => events.damage_to_allies += dealt,
                }
                if attacker.controller == Some(EnemyControllerKind::PursuitGroup) {
                    events.pursuit_damage += dealt;
                }
                if !target.alive {
                    match target.allegiance {
                        Allegiance::Enemy => events.enemy_kills += 1,
                        Allegiance::Ally => events.ally_kills += 1,
                    }
                }
                self.units[id] = attacker;
                self.units[target_id] = target;
                Ok(())
            }
            Command::Heal(target_id) => {
                let target = self.target(target_id)?;
                let before = target.health;
                let (healer, target) = resolve_heal(&self.stats, &self.units[id], target)?;
                let healed = target.health - before;
                match target.allegiance {
                    Allegiance::Enemy => events.healing_to_enemies += healed,
                    Allegiance::Ally => events.healing_to_allies += healed,
                }
                self.units[id] = healer;
                self.units[target_id] = target;
                Ok(())
            }
        }
    }
}

/// Nearest unit to `from`, ties broken by lowest id.
pub(crate) fn nearest<'a, I>(from: Vec2, candidates: I) -> Option<&'a UnitState>
where
    I: IntoIterator<Item = &'a UnitState>,
{
    candidates.into_iter().min_by(|a, b| {
        from.distance(a.position)
            .total_cmp(&from.distance(b.position))
            .then(a.unit_id.cmp(&b.unit_id))
    })
}
