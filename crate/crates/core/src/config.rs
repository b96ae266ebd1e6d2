//! Engine configuration: unit balance, enemy behaviour, reward shaping and
//! spawn geometry, loaded from TOML.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;
use std::str::FromStr;

use crate::engine::{Archetype, ArchetypeTable};
use crate::error::{Error, Result};

/// Default configuration shipped with the library.
pub const DEFAULT_ENGINE_TOML: &str = include_str!("../data/engine.toml");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseEnemyMode {
    #[default]
    Advance,
    Stationary,
}

impl FromStr for DefenseEnemyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advance" => Ok(Self::Advance),
            "stationary" => Ok(Self::Stationary),
            other => Err(Error::InvalidArgument(format!(
                "unknown defense enemy mode `{other}` (expected advance or stationary)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Shaped,
    Sparse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub mode: RewardMode,
    pub kill_bonus: f64,
    pub win_bonus: f64,
    /// Best achievable episode return after normalisation.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutConfig {
    pub enemy_row_offset: f64,
    pub ally_offset: f64,
    pub defense_base_offset: f64,
    pub pursuit_base_offset: f64,
    pub spawn_jitter: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub version: u32,
    pub defense_enemy_mode: DefenseEnemyMode,
    pub occupation_radius: f64,
    pub independence_slack_steps: f64,
    pub units: ArchetypeTable,
    pub reward: RewardConfig,
    pub layout: LayoutConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_ENGINE_TOML).expect("bundled engine config is valid")
    }
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: EngineConfig = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: EngineConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn check(&self) -> Result<()> {
        for archetype in Archetype::ALL {
            self.units
                .get(archetype)
                .check(archetype)
                .map_err(Error::Config)?;
        }
        if self.occupation_radius.is_nan() || self.occupation_radius <= 0.0 {
            return Err(Error::Config("occupation_radius must be positive".into()));
        }
        if self.independence_slack_steps < 0.0 {
            return Err(Error::Config(
                "independence_slack_steps must be non-negative".into(),
            ));
        }
        if self.reward.scale.is_nan() || self.reward.scale <= 0.0 {
            return Err(Error::Config("reward.scale must be positive".into()));
        }
        if self.layout.spawn_jitter < 0.0 {
            return Err(Error::Config(
                "layout.spawn_jitter must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML serialisation.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("engine config serialises");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Minimum region separation that keeps non-interference subtasks out of
    /// each other's sight.
    pub fn independence_radius(&self) -> f64 {
        self.units.max_sight_range()
            + 2.0 * self.units.max_move_speed() * self.independence_slack_steps
    }
}
