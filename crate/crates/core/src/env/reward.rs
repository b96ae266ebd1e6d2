use crate::catalog::CompositeTaskSpec;
use crate::config::{EngineConfig, RewardConfig, RewardMode};

/// Enemy-side changes during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardDeltas {
    /// Damage dealt to enemies minus healing they received. Can be negative.
    pub enemy_health_loss: i64,
    pub enemy_kills: u32,
    pub won: bool,
}

/// Divisor that maps the best possible shaped return onto `reward.scale`.
pub fn reward_normalizer(spec: &CompositeTaskSpec, config: &EngineConfig) -> f64 {
    let enemies = spec.enemy_roster();
    let total_health: u64 = enemies
        .units()
        .map(|a| u64::from(config.units.get(a).max_health))
        .sum();
    let best = total_health as f64
        + config.reward.kill_bonus * f64::from(enemies.total())
        + config.reward.win_bonus;
    best / config.reward.scale
}

/// Team reward for one step. Health loss is net of enemy healing so the
/// undiscounted return can never exceed `reward.scale`.
pub fn compute_reward(deltas: &RewardDeltas, reward: &RewardConfig, normalizer: f64) -> f64 {
    match reward.mode {
        RewardMode::Sparse => {
            if deltas.won {
                reward.scale
            } else {
                0.0
            }
        }
        RewardMode::Shaped => {
            let win = if deltas.won { reward.win_bonus } else { 0.0 };
            (deltas.enemy_health_loss as f64
                + reward.kill_bonus * f64::from(deltas.enemy_kills)
                + win)
                / normalizer
        }
    }
}
