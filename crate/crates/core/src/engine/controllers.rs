//! Scripted enemy behaviour.

use super::{nearest, ArchetypeTable, Command, UnitId, UnitState};
use crate::config::DefenseEnemyMode;
use crate::geometry::Vec2;

/// Orders for one defense group.
///
/// A unit that has never been hit and sees no opponent advances on the
/// allied base (or holds, in stationary mode). Once engaged it attacks the
/// nearest opponent in range, preferring non-medivacs, and otherwise closes
/// on the nearest visible opponent. Medivacs follow
/// [`medivac_controller_step`].
pub fn defense_controller_step(
    group: &[&UnitState],
    allied_base: Vec2,
    opponents: &[&UnitState],
    stats: &ArchetypeTable,
    mode: DefenseEnemyMode,
) -> Vec<(UnitId, Command)> {
    let mut commands = Vec::with_capacity(group.len());
    for unit in group.iter().filter(|u| u.alive) {
        if unit.archetype.is_healer() {
            let mates = living_groupmates(group, unit);
            commands.push((
                unit.unit_id,
                medivac_controller_step(unit, &mates, allied_base, stats),
            ));
            continue;
        }
        let unit_stats = stats.get(unit.archetype);
        let visible: Vec<&UnitState> = opponents
            .iter()
            .copied()
            .filter(|o| o.alive && unit.distance(o) <= unit_stats.sight_range)
            .collect();

        let idle = match mode {
            DefenseEnemyMode::Advance => Command::MoveToward(allied_base),
            DefenseEnemyMode::Stationary => Command::Stop,
        };
        if !unit.was_attacked && visible.is_empty() {
            commands.push((unit.unit_id, idle));
            continue;
        }

        let in_range = |o: &UnitState| unit.distance(o) <= unit_stats.attack_range;
        let target = nearest(
            unit.position,
            visible
                .iter()
                .copied()
                .filter(|o| !o.archetype.is_healer() && in_range(o)),
        )
        .or_else(|| {
            nearest(
                unit.position,
                visible.iter().copied().filter(|o| in_range(o)),
            )
        });

        let command = match target {
            Some(t) if unit.cooldown_remaining == 0 => Command::Attack(t.unit_id),
            Some(_) => Command::Stop,
            None => match nearest(unit.position, visible.iter().copied()) {
                Some(t) => Command::MoveToward(t.position),
                None => idle,
            },
        };
        commands.push((unit.unit_id, command));
    }
    commands
}

/// Orders for one pursuit group: everyone heads for `target_base`
/// regardless of damage taken. Medivacs follow [`medivac_controller_step`],
/// which never attacks either.
pub fn pursuit_controller_step(
    group: &[&UnitState],
    target_base: Vec2,
    stats: &ArchetypeTable,
) -> Vec<(UnitId, Command)> {
    group
        .iter()
        .filter(|u| u.alive)
        .map(|unit| {
            let command = if unit.archetype.is_healer() {
                let mates = living_groupmates(group, unit);
                medivac_controller_step(unit, &mates, target_base, stats)
            } else {
                Command::MoveToward(target_base)
            };
            (unit.unit_id, command)
        })
        .collect()
}

/// Enemy medivac behaviour.
///
/// Alone, it keeps flying toward `target` even under fire. With living
/// groupmates it holds position until attacked, then stops to heal the most
/// damaged groupmate, closing in first if that unit is out of heal range.
pub fn medivac_controller_step(
    medivac: &UnitState,
    living_groupmates: &[&UnitState],
    target: Vec2,
    stats: &ArchetypeTable,
) -> Command {
    if living_groupmates.is_empty() {
        return Command::MoveToward(target);
    }
    if !medivac.was_attacked {
        return Command::Stop;
    }
    let health_fraction =
        |u: &UnitState| f64::from(u.health) / f64::from(stats.get(u.archetype).max_health);
    let patient = living_groupmates
        .iter()
        .min_by(|a, b| {
            health_fraction(a)
                .total_cmp(&health_fraction(b))
                .then(a.unit_id.cmp(&b.unit_id))
        })
        .expect("non-empty");
    let heal_range = stats.get(medivac.archetype).heal_range;
    if medivac.distance(patient) > heal_range {
        Command::MoveToward(patient.position)
    } else if medivac.cooldown_remaining == 0 {
        Command::Heal(patient.unit_id)
    } else {
        Command::Stop
    }
}

fn living_groupmates<'a>(group: &[&'a UnitState], unit: &UnitState) -> Vec<&'a UnitState> {
    group
        .iter()
        .copied()
        .filter(|m| m.alive && m.unit_id != unit.unit_id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EngineConfig;
    use crate::engine::{Allegiance, Archetype, EnemyControllerKind};

    fn stats() -> ArchetypeTable {
        EngineConfig::default().units
    }

    fn enemy(id: UnitId, archetype: Archetype, kind: EnemyControllerKind, at: Vec2) -> UnitState {
        UnitState::spawn(
            id,
            archetype,
            Allegiance::Enemy,
            Some(kind),
            0,
            at,
            &stats(),
        )
    }

    fn ally(id: UnitId, archetype: Archetype, at: Vec2) -> UnitState {
        UnitState::spawn(id, archetype, Allegiance::Ally, None, 0, at, &stats())
    }

    #[test]
    fn unprovoked_defense_advances_or_holds() {
        let table = stats();
        let a = enemy(
            1,
            Archetype::Marine,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(10.0, 20.0),
        );
        let b = enemy(
            2,
            Archetype::Marauder,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(11.0, 20.0),
        );
        let base = Vec2::new(10.0, 5.0);
        let far_ally = ally(0, Archetype::Marine, Vec2::new(30.0, 2.0));
        let cmds = defense_controller_step(
            &[&a, &b],
            base,
            &[&far_ally],
            &table,
            DefenseEnemyMode::Advance,
        );
        assert_eq!(
            cmds,
            vec![
                (1, Command::MoveToward(base)),
                (2, Command::MoveToward(base))
            ]
        );
        let cmds = defense_controller_step(
            &[&a, &b],
            base,
            &[&far_ally],
            &table,
            DefenseEnemyMode::Stationary,
        );
        assert_eq!(cmds, vec![(1, Command::Stop), (2, Command::Stop)]);
    }

    #[test]
    fn attacked_defender_engages_nearest_in_range() {
        let table = stats();
        let mut a = enemy(
            3,
            Archetype::Marine,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(10.0, 10.0),
        );
        a.was_attacked = true;
        let near = ally(1, Archetype::Marine, Vec2::new(14.0, 10.0));
        let nearer_medivac = ally(0, Archetype::Medivac, Vec2::new(12.0, 10.0));
        let far = ally(2, Archetype::Marine, Vec2::new(10.0, 15.5));
        let cmds = defense_controller_step(
            &[&a],
            Vec2::ZERO,
            &[&nearer_medivac, &near, &far],
            &table,
            DefenseEnemyMode::Stationary,
        );
        assert_eq!(cmds, vec![(3, Command::Attack(1))]);
    }

    #[test]
    fn engaged_defender_closes_on_visible_opponent() {
        let table = stats();
        let a = enemy(
            3,
            Archetype::Marine,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(10.0, 10.0),
        );
        let seen = ally(0, Archetype::Marine, Vec2::new(18.0, 10.0));
        let cmds = defense_controller_step(
            &[&a],
            Vec2::ZERO,
            &[&seen],
            &table,
            DefenseEnemyMode::Advance,
        );
        assert_eq!(cmds, vec![(3, Command::MoveToward(seen.position))]);
    }

    #[test]
    fn empty_group_yields_nothing() {
        let table = stats();
        let mut dead = enemy(
            1,
            Archetype::Marine,
            EnemyControllerKind::DefenseGroup,
            Vec2::ZERO,
        );
        dead.alive = false;
        dead.health = 0;
        assert!(defense_controller_step(
            &[&dead],
            Vec2::ZERO,
            &[],
            &table,
            DefenseEnemyMode::Advance
        )
        .is_empty());
        assert!(pursuit_controller_step(&[&dead], Vec2::ZERO, &table).is_empty());
    }

    #[test]
    fn pursuit_ignores_damage() {
        let table = stats();
        let base = Vec2::new(0.0, 0.0);
        let mut m = enemy(
            1,
            Archetype::Marine,
            EnemyControllerKind::PursuitGroup,
            Vec2::new(3.0, 4.0),
        );
        let calm = pursuit_controller_step(&[&m], base, &table);
        m.was_attacked = true;
        m.health = 10;
        assert_eq!(pursuit_controller_step(&[&m], base, &table), calm);
        assert_eq!(calm, vec![(1, Command::MoveToward(base))]);
    }

    #[test]
    fn solo_medivac_keeps_flying_under_fire() {
        let table = stats();
        let target = Vec2::new(5.0, 5.0);
        let mut m = enemy(
            1,
            Archetype::Medivac,
            EnemyControllerKind::DefenseGroup,
            Vec2::ZERO,
        );
        m.was_attacked = true;
        assert_eq!(
            medivac_controller_step(&m, &[], target, &table),
            Command::MoveToward(target)
        );
    }

    #[test]
    fn grouped_medivac_heals_when_attacked_and_holds_otherwise() {
        let table = stats();
        let target = Vec2::new(5.0, 5.0);
        let mut m = enemy(
            1,
            Archetype::Medivac,
            EnemyControllerKind::DefenseGroup,
            Vec2::ZERO,
        );
        let mut marauder = enemy(
            2,
            Archetype::Marauder,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(2.0, 0.0),
        );
        marauder.health = 60;
        let marine = enemy(
            3,
            Archetype::Marine,
            EnemyControllerKind::DefenseGroup,
            Vec2::new(1.0, 0.0),
        );
        assert_eq!(
            medivac_controller_step(&m, &[&marauder, &marine], target, &table),
            Command::Stop
        );
        m.was_attacked = true;
        assert_eq!(
            medivac_controller_step(&m, &[&marauder, &marine], target, &table),
            Command::Heal(2)
        );
        let mut far = marauder.clone();
        far.position = Vec2::new(8.0, 0.0);
        assert_eq!(
            medivac_controller_step(&m, &[&far], target, &table),
            Command::MoveToward(far.position)
        );
    }
}
