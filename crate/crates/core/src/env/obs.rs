//! Observation, state and action-mask encoding.
//!
//! Agent observation layout (entity-major, feature-minor):
//! one [`ENTITY_FEATURES`]-wide block per enemy in id order, then one per
//! other agent in id order, then [`OWN_FEATURES`] describing the observer.
//! Entity block: visible, distance / sight, dx / sight, dy / sight,
//! health fraction, archetype one-hot (marine, marauder, medivac). Blocks of
//! dead or out-of-sight entities are all zero. A dead agent's observation is
//! all zero.

use crate::engine::{Archetype, ArchetypeTable, UnitState};
use crate::geometry::MapBounds;

pub const ENTITY_FEATURES: usize = 8;
/// health fraction, archetype one-hot, x / width, y / height
pub const OWN_FEATURES: usize = 6;
/// alive, health fraction, x / width, y / height, cooldown fraction, archetype one-hot
pub const STATE_FEATURES: usize = 8;

/// True iff `entity` is alive and within the observer's sight range.
pub fn compute_visibility(
    observer: &UnitState,
    entity: &UnitState,
    stats: &ArchetypeTable,
) -> bool {
    observer.alive
        && entity.alive
        && observer.distance(entity) <= stats.get(observer.archetype).sight_range
}

pub fn observation_size(n_agents: usize, n_enemies: usize) -> usize {
    (n_enemies + n_agents.saturating_sub(1)) * ENTITY_FEATURES + OWN_FEATURES
}

pub fn state_size(n_units: usize) -> usize {
    n_units * STATE_FEATURES
}

fn one_hot(archetype: Archetype, out: &mut [f32]) {
    out[..3].fill(0.0);
    out[archetype.index()] = 1.0;
}

fn health_fraction(unit: &UnitState, stats: &ArchetypeTable) -> f32 {
    (f64::from(unit.health) / f64::from(stats.get(unit.archetype).max_health)) as f32
}

/// Write agent `agent`'s observation into `out` (length [`observation_size`]).
/// Units must be ordered agents first, then enemies.
pub fn encode_observation(
    units: &[UnitState],
    n_agents: usize,
    agent: usize,
    stats: &ArchetypeTable,
    bounds: &MapBounds,
    out: &mut [f32],
) {
    out.fill(0.0);
    let me = &units[agent];
    if !me.alive {
        return;
    }
    let sight = stats.get(me.archetype).sight_range;
    let enemies = &units[n_agents..];
    let others = units[..n_agents].iter().filter(|u| u.unit_id != agent);
    for (slot, entity) in enemies.iter().chain(others).enumerate() {
        if !compute_visibility(me, entity, stats) {
            continue;
        }
        let block = &mut out[slot * ENTITY_FEATURES..(slot + 1) * ENTITY_FEATURES];
        let delta = entity.position - me.position;
        block[0] = 1.0;
        block[1] = (delta.length() / sight) as f32;
        block[2] = (delta.x / sight) as f32;
        block[3] = (delta.y / sight) as f32;
        block[4] = health_fraction(entity, stats);
        one_hot(entity.archetype, &mut block[5..8]);
    }
    let own_start = out.len() - OWN_FEATURES;
    let own = &mut out[own_start..];
    own[0] = health_fraction(me, stats);
    one_hot(me.archetype, &mut own[1..4]);
    own[4] = (me.position.x / bounds.width) as f32;
    own[5] = (me.position.y / bounds.height) as f32;
}

/// Unmasked global state for centralised critics.
pub fn encode_state(
    units: &[UnitState],
    stats: &ArchetypeTable,
    bounds: &MapBounds,
    out: &mut [f32],
) {
    out.fill(0.0);
    for (unit, block) in units.iter().zip(out.chunks_exact_mut(STATE_FEATURES)) {
        if !unit.alive {
            continue;
        }
        let unit_stats = stats.get(unit.archetype);
        block[0] = 1.0;
        block[1] = health_fraction(unit, stats);
        block[2] = (unit.position.x / bounds.width) as f32;
        block[3] = (unit.position.y / bounds.height) as f32;
        block[4] = if unit_stats.cooldown_steps == 0 {
            0.0
        } else {
            (f64::from(unit.cooldown_remaining) / f64::from(unit_stats.cooldown_steps)).min(1.0)
                as f32
        };
        one_hot(unit.archetype, &mut block[5..8]);
    }
}
