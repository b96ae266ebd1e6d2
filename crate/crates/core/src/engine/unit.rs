use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::geometry::Vec2;

pub type UnitId = usize;

/// The three unit archetypes of the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Marine,
    Marauder,
    Medivac,
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Marine, Archetype::Marauder, Archetype::Medivac];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_healer(self) -> bool {
        matches!(self, Archetype::Medivac)
    }

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Marine => "marine",
            Archetype::Marauder => "marauder",
            Archetype::Medivac => "medivac",
        }
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "marine" => Ok(Archetype::Marine),
            "marauder" => Ok(Archetype::Marauder),
            "medivac" => Ok(Archetype::Medivac),
            other => Err(format!("unknown archetype `{other}`")),
        }
    }
}

/// Balance values for one archetype.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeStats {
    pub max_health: u32,
    pub attack_damage: u32,
    pub heal_amount: u32,
    pub attack_range: f64,
    pub heal_range: f64,
    pub sight_range: f64,
    pub move_speed: f64,
    pub cooldown_steps: u32,
}

impl ArchetypeStats {
    pub fn check(&self, archetype: Archetype) -> Result<(), String> {
        if self.max_health == 0 {
            return Err(format!("{archetype}: max_health must be positive"));
        }
        if self.move_speed.is_nan() || self.move_speed <= 0.0 {
            return Err(format!("{archetype}: move_speed must be positive"));
        }
        if self.sight_range < self.attack_range || self.sight_range < self.heal_range {
            return Err(format!(
                "{archetype}: sight_range must cover attack and heal range"
            ));
        }
        if (self.attack_damage > 0) == (self.heal_amount > 0) {
            return Err(format!(
                "{archetype}: exactly one of attack_damage and heal_amount must be nonzero"
            ));
        }
        if archetype.is_healer() != (self.heal_amount > 0) {
            return Err(format!("{archetype}: only the medivac heals"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeTable {
    pub marine: ArchetypeStats,
    pub marauder: ArchetypeStats,
    pub medivac: ArchetypeStats,
}

impl ArchetypeTable {
    #[inline]
    pub fn get(&self, archetype: Archetype) -> &ArchetypeStats {
        match archetype {
            Archetype::Marine => &self.marine,
            Archetype::Marauder => &self.marauder,
            Archetype::Medivac => &self.medivac,
        }
    }

    pub fn max_move_speed(&self) -> f64 {
        Archetype::ALL
            .iter()
            .map(|a| self.get(*a).move_speed)
            .fold(0.0, f64::max)
    }

    pub fn max_sight_range(&self) -> f64 {
        Archetype::ALL
            .iter()
            .map(|a| self.get(*a).sight_range)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Allegiance {
    Ally,
    Enemy,
}

/// Scripted behaviour of an enemy subtask group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnemyControllerKind {
    /// Contest the allied base and fight back when engaged.
    #[serde(rename = "defense")]
    DefenseGroup,
    /// Flee toward the group's own base and never retaliate.
    #[serde(rename = "pursuit")]
    PursuitGroup,
}

/// Per-unit simulation state.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitState {
    pub unit_id: UnitId,
    pub archetype: Archetype,
    pub allegiance: Allegiance,
    /// `None` for agents.
    pub controller: Option<EnemyControllerKind>,
    /// Enemy group membership, or spawn assignment for agents.
    pub subtask_index: usize,
    pub position: Vec2,
    pub health: u32,
    pub cooldown_remaining: u32,
    pub alive: bool,
    /// Sticky for the rest of the episode once the unit takes damage.
    pub was_attacked: bool,
}

impl UnitState {
    pub fn spawn(
        unit_id: UnitId,
        archetype: Archetype,
        allegiance: Allegiance,
        controller: Option<EnemyControllerKind>,
        subtask_index: usize,
        position: Vec2,
        stats: &ArchetypeTable,
    ) -> Self {
        Self {
            unit_id,
            archetype,
            allegiance,
            controller,
            subtask_index,
            position,
            health: stats.get(archetype).max_health,
            cooldown_remaining: 0,
            alive: true,
            was_attacked: false,
        }
    }

    pub fn distance(&self, other: &UnitState) -> f64 {
        self.position.distance(other.position)
    }

    pub fn is_opponent_of(&self, other: &UnitState) -> bool {
        self.allegiance != other.allegiance
    }
}
