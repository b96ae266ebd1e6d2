use super::{assign_squads, Policy, SquadAssignment};
use crate::engine::{EnemyControllerKind, UnitState};
use crate::env::{
    Env, ACTION_EAST, ACTION_NOOP, ACTION_NORTH, ACTION_SOUTH, ACTION_STOP, ACTION_WEST,
    FIRST_TARGET_ACTION,
};
use crate::geometry::Vec2;

/// Division-of-labour reference policy. Squads are fixed at reset.
#[derive(Clone, Debug, Default)]
pub struct DolOracle {
    assignment: Option<SquadAssignment>,
}

impl Policy for DolOracle {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn reset(&mut self, env: &Env, _seed: u64) {
        self.assignment = Some(assign_squads(env.spec()));
    }

    fn act(&mut self, env: &Env, actions: &mut [usize]) {
        let assignment = self
            .assignment
            .get_or_insert_with(|| assign_squads(env.spec()));
        squad_actions(env, assignment, actions);
    }
}

/// Every agent works subtask 0 and ignores the others.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoDol;

impl Policy for NoDol {
    fn name(&self) -> &'static str {
        "no_dol"
    }

    fn reset(&mut self, _env: &Env, _seed: u64) {}

    fn act(&mut self, env: &Env, actions: &mut [usize]) {
        squad_actions(env, &SquadAssignment::all_to(env.n_agents(), 0), actions);
    }
}

pub fn dol_oracle_policy(env: &Env, assignment: &SquadAssignment) -> Vec<usize> {
    let mut actions = vec![ACTION_STOP; env.n_agents()];
    squad_actions(env, assignment, &mut actions);
    actions
}

pub fn no_dol_policy(env: &Env) -> Vec<usize> {
    dol_oracle_policy(env, &SquadAssignment::all_to(env.n_agents(), 0))
}

fn squad_actions(env: &Env, assignment: &SquadAssignment, actions: &mut [usize]) {
    let focus: Vec<Option<usize>> = (0..env.sites().len())
        .map(|squad| squad_focus(env, assignment, squad))
        .collect();
    for (agent, action) in actions.iter_mut().enumerate() {
        *action = agent_action(env, assignment, &focus, agent);
    }
}

/// The assigned enemy the squad should shoot: reachable enemies first, and
/// among those healers first (they sustain the group and outlive it as
/// runners), then fewest volleys to kill, lowest health, lowest id. Only
/// enemies seen by some squad member count.
fn squad_focus(env: &Env, assignment: &SquadAssignment, squad: usize) -> Option<usize> {
    let stats = env.world().stats();
    let shooters: Vec<&UnitState> = env
        .agents()
        .iter()
        .filter(|u| {
            u.alive && !u.archetype.is_healer() && assignment.subtask_of(u.unit_id) == squad
        })
        .collect();
    env.enemies()
        .iter()
        .filter(|e| e.alive && e.subtask_index == squad)
        .filter(|e| {
            shooters
                .iter()
                .any(|s| s.distance(e) <= stats.get(s.archetype).sight_range)
        })
        .min_by_key(|e| {
            let in_range: Vec<&&UnitState> = shooters
                .iter()
                .filter(|s| s.distance(e) <= stats.get(s.archetype).attack_range)
                .collect();
            let volley: u32 = in_range
                .iter()
                .map(|s| stats.get(s.archetype).attack_damage)
                .sum();
            let volleys = if volley == 0 {
                u32::MAX
            } else {
                e.health.div_ceil(volley)
            };
            (
                volley == 0,
                !e.archetype.is_healer(),
                volleys,
                e.health,
                e.unit_id,
            )
        })
        .map(|e| e.unit_id)
}

fn agent_action(
    env: &Env,
    assignment: &SquadAssignment,
    focus: &[Option<usize>],
    agent: usize,
) -> usize {
    let me = &env.agents()[agent];
    if !me.alive {
        return ACTION_NOOP;
    }
    let stats = env.world().stats().get(me.archetype);
    let squad = assignment.subtask_of(agent);
    if me.archetype.is_healer() {
        return medic_action(env, assignment, me, squad);
    }

    let visible: Vec<&UnitState> = env
        .enemies()
        .iter()
        .filter(|e| e.alive && e.subtask_index == squad && me.distance(e) <= stats.sight_range)
        .collect();

    // Squad focus first, else the weakest enemy in range.
    let focus = focus[squad].map(|id| env.world().unit(id));
    let target = focus
        .filter(|f| me.distance(f) <= stats.attack_range)
        .or_else(|| {
            visible
                .iter()
                .copied()
                .filter(|e| me.distance(e) <= stats.attack_range)
                .min_by_key(|e| (e.health, e.unit_id))
        });
    if let Some(target) = target {
        return FIRST_TARGET_ACTION + target.unit_id - env.n_agents();
    }
    if let Some(f) = focus {
        return step_toward(me.position, f.position, stats.move_speed);
    }
    if let Some(closest) = visible.iter().min_by(|a, b| {
        me.distance(a)
            .total_cmp(&me.distance(b))
            .then(a.unit_id.cmp(&b.unit_id))
    }) {
        return step_toward(me.position, closest.position, stats.move_speed);
    }

    let site = &env.sites()[squad];
    let goal = match site.kind {
        EnemyControllerKind::DefenseGroup => site.region_center,
        EnemyControllerKind::PursuitGroup => {
            let runner = env
                .enemies()
                .iter()
                .filter(|e| e.alive && e.subtask_index == squad)
                .min_by(|a, b| {
                    a.position
                        .distance(site.base)
                        .total_cmp(&b.position.distance(site.base))
                        .then(a.unit_id.cmp(&b.unit_id))
                })
                .map_or(site.region_center, |e| e.position);
            squad_centroid(env, assignment, squad)
                .unwrap_or(me.position)
                .closest_on_segment(runner, site.base)
        }
    };
    step_toward(me.position, goal, stats.move_speed)
}

fn medic_action(env: &Env, assignment: &SquadAssignment, me: &UnitState, squad: usize) -> usize {
    let stats = env.world().stats();
    let my_stats = stats.get(me.archetype);
    let fraction =
        |u: &UnitState| f64::from(u.health) / f64::from(stats.get(u.archetype).max_health);
    let squadmates = || {
        env.agents().iter().filter(move |u| {
            u.alive && u.unit_id != me.unit_id && assignment.subtask_of(u.unit_id) == squad
        })
    };

    let patient = squadmates()
        .filter(|u| u.health < stats.get(u.archetype).max_health)
        .min_by(|a, b| {
            fraction(a)
                .total_cmp(&fraction(b))
                .then(a.unit_id.cmp(&b.unit_id))
        });
    if let Some(patient) = patient {
        return if me.distance(patient) <= my_stats.heal_range {
            FIRST_TARGET_ACTION + patient.unit_id
        } else {
            step_toward(me.position, patient.position, my_stats.move_speed)
        };
    }

    // Nobody hurt: stay close behind the squad.
    match squadmates().min_by(|a, b| {
        me.distance(a)
            .total_cmp(&me.distance(b))
            .then(a.unit_id.cmp(&b.unit_id))
    }) {
        Some(mate) if me.distance(mate) > my_stats.heal_range / 2.0 => {
            step_toward(me.position, mate.position, my_stats.move_speed)
        }
        Some(_) => ACTION_STOP,
        None => step_toward(
            me.position,
            env.sites()[squad].ally_center,
            my_stats.move_speed,
        ),
    }
}

fn squad_centroid(env: &Env, assignment: &SquadAssignment, squad: usize) -> Option<Vec2> {
    let (sum, n) = env
        .agents()
        .iter()
        .filter(|u| u.alive && assignment.subtask_of(u.unit_id) == squad)
        .fold((Vec2::ZERO, 0usize), |(sum, n), u| {
            (sum + u.position, n + 1)
        });
    (n > 0).then(|| sum * (1.0 / n as f64))
}

/// Cardinal move that best closes on `to`; stop when already within half a
/// step.
fn step_toward(from: Vec2, to: Vec2, speed: f64) -> usize {
    let d = to - from;
    if d.x.abs().max(d.y.abs()) < speed / 2.0 {
        return ACTION_STOP;
    }
    if d.x.abs() >= d.y.abs() {
        if d.x > 0.0 {
            ACTION_EAST
        } else {
            ACTION_WEST
        }
    } else if d.y > 0.0 {
        ACTION_NORTH
    } else {
        ACTION_SOUTH
    }
}
