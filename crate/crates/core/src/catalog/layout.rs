//! Spawn geometry.
//!
//! Regions sit on one horizontal row, centred on the map, with consecutive
//! separations taken from the spec's distance pair. Inside each region the
//! assigned agents spawn `ally_offset` below the enemy cluster and the base
//! lies further below, so every entity of a region shares its column.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{spawn_assignment, CompositeTaskSpec};
use crate::config::EngineConfig;
use crate::engine::{Archetype, EnemyControllerKind, SubtaskSite};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Clone, Debug, PartialEq)]
pub struct Spawn {
    pub archetype: Archetype,
    pub subtask_index: usize,
    pub position: Vec2,
}

/// Concrete positions for every unit and base of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub sites: Vec<SubtaskSite>,
    /// Agents in id order: grouped by spawn subtask, canonical archetype order.
    pub allies: Vec<Spawn>,
    /// Enemies in id order: grouped by subtask, canonical archetype order.
    pub enemies: Vec<Spawn>,
}

/// Deterministic cluster centres and bases, or why they do not fit the map.
pub fn site_plan(
    spec: &CompositeTaskSpec,
    config: &EngineConfig,
) -> std::result::Result<Vec<SubtaskSite>, String> {
    let geo = &config.layout;
    let map = spec.map;
    let n = spec.subtasks.len();
    let span: f64 = (0..n.saturating_sub(1)).map(|k| spec.gap(k)).sum();
    let x0 = (map.width - span) / 2.0;
    let enemy_y = map.height / 2.0 + geo.enemy_row_offset;
    let ally_y = enemy_y - geo.ally_offset;

    let mut x = x0;
    let mut sites = Vec::with_capacity(n);
    for (k, subtask) in spec.subtasks.iter().enumerate() {
        if k > 0 {
            x += spec.gap(k - 1);
        }
        let base_offset = match subtask.kind {
            EnemyControllerKind::DefenseGroup => geo.defense_base_offset,
            EnemyControllerKind::PursuitGroup => geo.pursuit_base_offset,
        };
        let site = SubtaskSite {
            kind: subtask.kind,
            base: Vec2::new(x, enemy_y - base_offset),
            region_center: Vec2::new(x, enemy_y),
            ally_center: Vec2::new(x, ally_y),
        };
        let jitter = geo.spawn_jitter;
        if !map.contains_disc(site.region_center, jitter)
            || !map.contains_disc(site.ally_center, jitter)
            || !map.contains(site.base)
        {
            return Err(format!(
                "region {k} at x = {x} does not fit a {}x{} map (total separation {span})",
                map.width, map.height
            ));
        }
        sites.push(site);
    }
    Ok(sites)
}

/// Place every unit: cluster centres from [`site_plan`], each unit jittered
/// uniformly within `spawn_jitter` of its centre. Same spec and seed give
/// the same layout.
pub fn generate_layout(
    spec: &CompositeTaskSpec,
    config: &EngineConfig,
    seed: u64,
) -> Result<Layout> {
    let sites = site_plan(spec, config).map_err(Error::Layout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = config.layout.spawn_jitter;

    let assignment = spawn_assignment(spec);
    let mut allies = Vec::with_capacity(spec.n_agents());
    for (index, roster) in assignment.iter().enumerate() {
        for archetype in roster.units() {
            let position = jitter(&mut rng, sites[index].ally_center, radius);
            allies.push(Spawn {
                archetype,
                subtask_index: index,
                position,
            });
        }
    }
    let mut enemies = Vec::with_capacity(spec.n_enemies());
    for (index, subtask) in spec.subtasks.iter().enumerate() {
        for archetype in subtask.enemies.units() {
            let position = jitter(&mut rng, sites[index].region_center, radius);
            enemies.push(Spawn {
                archetype,
                subtask_index: index,
                position,
            });
        }
    }
    Ok(Layout {
        sites,
        allies,
        enemies,
    })
}

/// Uniform point in the disc, by rejection from the bounding square.
fn jitter(rng: &mut ChaCha8Rng, center: Vec2, radius: f64) -> Vec2 {
    if radius == 0.0 {
        return center;
    }
    loop {
        let dx = rng.gen_range(-1.0..=1.0);
        let dy = rng.gen_range(-1.0..=1.0);
        if dx * dx + dy * dy <= 1.0 {
            return center + Vec2::new(dx, dy) * radius;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;
    use crate::geometry::MapBounds;

    #[test]
    fn p2g_d3_regions_are_fourteen_apart() {
        let spec = Catalog::builtin()
            .lookup_task("HeA_P2G-D3")
            .unwrap()
            .clone();
        let layout = generate_layout(&spec, &EngineConfig::default(), 3).unwrap();
        let d = layout.sites[0]
            .region_center
            .distance(layout.sites[1].region_center);
        assert_eq!(d, 14.0);
    }

    #[test]
    fn same_seed_same_layout() {
        let spec = Catalog::builtin().lookup_task("HeA_M3G").unwrap().clone();
        let cfg = EngineConfig::default();
        assert_eq!(
            generate_layout(&spec, &cfg, 42).unwrap(),
            generate_layout(&spec, &cfg, 42).unwrap()
        );
        assert_ne!(
            generate_layout(&spec, &cfg, 42).unwrap(),
            generate_layout(&spec, &cfg, 43).unwrap()
        );
    }

    #[test]
    fn infeasible_map_is_an_error() {
        let mut spec = Catalog::builtin()
            .lookup_task("HeA_P2G-D3")
            .unwrap()
            .clone();
        spec.map = MapBounds {
            width: 10.0,
            height: 10.0,
        };
        let err = generate_layout(&spec, &EngineConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Layout(_)));
    }

    #[test]
    fn units_stay_within_jitter_radius() {
        let cfg = EngineConfig::default();
        for spec in Catalog::builtin().iter() {
            for seed in 0..20 {
                let layout = generate_layout(spec, &cfg, seed).unwrap();
                for s in &layout.allies {
                    assert!(
                        s.position
                            .distance(layout.sites[s.subtask_index].ally_center)
                            <= 1.5 + 1e-12
                    );
                }
                for s in &layout.enemies {
                    assert!(
                        s.position
                            .distance(layout.sites[s.subtask_index].region_center)
                            <= 1.5 + 1e-12
                    );
                }
                assert_eq!(layout.allies.len(), spec.n_agents());
                assert_eq!(layout.enemies.len(), spec.n_enemies());
            }
        }
    }
}
