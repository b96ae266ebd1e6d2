use std::sync::Arc;

use ctc_core::agents::{dol_oracle_policy, no_dol_policy};
use ctc_core::engine::Archetype;
use ctc_core::env::{ACTION_NOOP, ACTION_STOP, FIRST_TARGET_ACTION};
use ctc_core::eval::{run_episode, run_episodes, run_plan, run_test_batch, EvalPlan};
use ctc_core::geometry::Vec2;
use ctc_core::replay::{parse_records, verify_replay};
use ctc_core::{
    assign_squads, Catalog, CompositeTaskSpec, DefenseEnemyMode, EngineConfig, Env, PolicyKind,
};

fn task(name: &str) -> CompositeTaskSpec {
    Catalog::builtin().lookup_task(name).unwrap().clone()
}

fn env(name: &str, seed: u64, config: EngineConfig) -> Env {
    let mut env = Env::new(task(name), config).unwrap();
    env.reset(seed).unwrap();
    env
}

fn single_subtask(kind: &str, enemies: &str, agents: &str) -> CompositeTaskSpec {
    CompositeTaskSpec::from_toml_str(&format!(
        "name = \"scenario\"\nagents = {{ {agents} }}\ndistances = [14.0, 14.0]\nepisode_limit = 60\n\
         map = {{ width = 32.0, height = 32.0 }}\n\n[[subtasks]]\nkind = \"{kind}\"\nenemies = {{ {enemies} }}\n"
    ))
    .unwrap()
}

fn park_agents_in_corner(env: &mut Env) {
    for agent in 0..env.n_agents() {
        env.world_mut().units_mut()[agent].position = Vec2::new(0.0, 0.0);
    }
}

#[test]
fn unprovoked_defense_advances_like_hand_stepped_oracle() {
    let mut env = env("HoS_D2G", 0, EngineConfig::default());
    park_agents_in_corner(&mut env);
    let speed = env.config().units.marine.move_speed;
    let stop = vec![ACTION_STOP; env.n_agents()];
    for _ in 0..3 {
        let expected: Vec<Vec2> = env
            .enemies()
            .iter()
            .map(|e| {
                let base = env.sites()[e.subtask_index].base;
                let (dx, dy) = (base.x - e.position.x, base.y - e.position.y);
                let len = (dx * dx + dy * dy).sqrt();
                Vec2::new(
                    e.position.x + speed * dx / len,
                    e.position.y + speed * dy / len,
                )
            })
            .collect();
        let outcome = env.step(&stop).unwrap();
        assert_eq!(outcome.reward, 0.0);
        assert!(!outcome.terminated);
        for (e, want) in env.enemies().iter().zip(expected) {
            assert!(
                e.position.distance(want) < 1e-12,
                "{:?} vs {want:?}",
                e.position
            );
        }
    }
}

#[test]
fn stationary_defense_holds_until_provoked() {
    let config = EngineConfig {
        defense_enemy_mode: DefenseEnemyMode::Stationary,
        ..EngineConfig::default()
    };
    let mut env = env("HoS_D2G", 0, config);
    park_agents_in_corner(&mut env);
    let before: Vec<Vec2> = env.enemies().iter().map(|e| e.position).collect();
    for _ in 0..5 {
        env.step(&vec![ACTION_STOP; env.n_agents()]).unwrap();
    }
    let after: Vec<Vec2> = env.enemies().iter().map(|e| e.position).collect();
    assert_eq!(before, after);
}

#[test]
fn six_damage_reward_on_hos_d2g() {
    let mut env = env("HoS_D2G", 0, EngineConfig::default());
    let target = env.n_agents();
    park_agents_in_corner(&mut env);
    let at = env.enemies()[0].position;
    env.world_mut().units_mut()[0].position = at + Vec2::new(0.0, -5.0);
    let mut actions = vec![ACTION_STOP; env.n_agents()];
    actions[0] = FIRST_TARGET_ACTION;
    let outcome = env.step(&actions).unwrap();
    assert_eq!(env.world().unit(target).health, 39);
    // 6 marines: (6 * 45 + 10 * 6 + 200) / 20.
    let normalizer = (6.0 * 45.0 + 10.0 * 6.0 + 200.0) / 20.0;
    assert!((outcome.reward - 6.0 / normalizer).abs() < 1e-12);
}

#[test]
fn killing_the_last_enemy_wins() {
    let mut env = Env::new(
        single_subtask("defense", "marine = 1", "marine = 1"),
        EngineConfig::default(),
    )
    .unwrap();
    env.reset(0).unwrap();
    let e = env.n_agents();
    {
        let units = env.world_mut().units_mut();
        units[e].health = 6;
        units[0].position = units[e].position + Vec2::new(0.0, -3.0);
    }
    let outcome = env.step(&[FIRST_TARGET_ACTION]).unwrap();
    assert!(outcome.won && outcome.terminated && outcome.failed_subtask.is_none());
    let normalizer = (45.0 + 10.0 + 200.0) / 20.0;
    assert!((outcome.reward - (6.0 + 10.0 + 200.0) / normalizer).abs() < 1e-12);
}

#[test]
fn oracle_only_emits_available_actions() {
    let config = Arc::new(EngineConfig::default());
    for spec in Catalog::builtin().iter() {
        let results = run_episodes(
            &Arc::new(spec.clone()),
            &config,
            PolicyKind::Oracle,
            7,
            0,
            1000,
            false,
        )
        .unwrap();
        let invalid: u32 = results.iter().map(|r| r.invalid_actions).sum();
        assert_eq!(invalid, 0, "{}", spec.name);
        assert!(results.iter().all(|r| r.episode_return <= 20.0 + 1e-9));
    }
}

#[test]
fn harness_examples() {
    let config = Arc::new(EngineConfig::default());
    let hos = Arc::new(task("HoS_D2G"));
    assert!(run_test_batch(&hos, &config, PolicyKind::Oracle, 0, 32).unwrap() >= 0.9);
    assert_eq!(
        run_test_batch(&hos, &config, PolicyKind::NoDol, 0, 32).unwrap(),
        0.0
    );

    let mut plan = EvalPlan::new(task("HoA_D2G"), EngineConfig::default(), PolicyKind::Oracle);
    plan.seeds = vec![0, 1, 2];
    plan.checkpoints = 2;
    let report = run_plan(&plan).unwrap().report;
    assert!(report.max_test_win_rate >= 0.9);
    assert_eq!((report.m, report.curves.len()), (2, 3));
}

#[test]
fn no_dol_matches_oracle_on_single_subtask() {
    let mut env = Env::new(
        single_subtask(
            "defense",
            "marine = 2, marauder = 1",
            "marine = 2, marauder = 1",
        ),
        EngineConfig::default(),
    )
    .unwrap();
    env.reset(11).unwrap();
    let squads = assign_squads(env.spec());
    while !env.is_terminated() {
        let a = dol_oracle_policy(&env, &squads);
        assert_eq!(a, no_dol_policy(&env));
        env.step(&a).unwrap();
    }
}

#[test]
fn no_dol_idles_after_clearing_subtask_zero() {
    let mut env = env("HoS_D2G", 3, EngineConfig::default());
    let outcome = loop {
        let o = env.step(&no_dol_policy(&env)).unwrap();
        if o.terminated {
            break o;
        }
    };
    assert!(!outcome.won);
    assert!(env
        .enemies()
        .iter()
        .any(|e| e.alive && e.subtask_index == 1));
}

#[test]
fn pursuit_groups_never_deal_damage() {
    let config = Arc::new(EngineConfig::default());
    for name in ["HeA_M2G", "HeA_M3G"] {
        for policy in PolicyKind::ALL {
            let mut env = Env::new(task(name), Arc::clone(&config)).unwrap();
            let mut p = policy.build();
            for seed in 0..50 {
                env.reset(seed).unwrap();
                p.reset(&env, seed);
                let mut actions = vec![0; env.n_agents()];
                while !env.is_terminated() {
                    p.act(&env, &mut actions);
                    assert_eq!(env.step(&actions).unwrap().info.pursuit_damage, 0);
                }
            }
        }
    }
}

/// Replay scan: dead actors stay inert, and a recorded failure index
/// coincides with an enemy standing on its base.
#[test]
fn replays_are_consistent_and_verifiable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EngineConfig::default();
    for name in ["HeA_D2G", "HeS_D3G", "HeA_M2G", "HoA_D4G"] {
        for policy in PolicyKind::ALL {
            let mut env = Env::new(task(name), cfg.clone()).unwrap();
            let mut p = policy.build();
            for seed in 0..5 {
                let result = run_episode(&mut env, p.as_mut(), seed, true).unwrap();
                let text = result.replay.unwrap();
                let path = dir.path().join(format!("{name}_{policy}_{seed}.replay"));
                std::fs::write(&path, &text).unwrap();
                let report =
                    verify_replay(&std::fs::read_to_string(&path).unwrap(), Some(&cfg)).unwrap();
                assert!(
                    report.is_ok(),
                    "{name}/{policy}/{seed}: {:?}",
                    report.divergence
                );
                assert_eq!(report.steps_checked, result.steps);

                let records = parse_records(&text).unwrap();
                let n_agents = env.n_agents();
                for pair in records.windows(2) {
                    for (was, now) in pair[0].units.iter().zip(&pair[1].units) {
                        if !was.4 {
                            assert!(!now.4 && (now.1, now.2, now.3) == (was.1, was.2, was.3));
                            if was.0 < n_agents {
                                assert_eq!(pair[1].actions[was.0], ACTION_NOOP);
                            }
                        }
                    }
                }
                let last = records.last().unwrap();
                let occupied = (0..env.spec().subtasks.len()).find(|&s| {
                    last.units[n_agents..].iter().any(|u| {
                        let unit = env.world().unit(u.0);
                        u.4 && unit.subtask_index == s
                            && Vec2::new(u.1, u.2).distance(env.sites()[s].base)
                                <= cfg.occupation_radius
                    })
                });
                assert_eq!(last.failed_subtask, occupied);
                assert_eq!(last.won, last.units[n_agents..].iter().all(|u| !u.4));
            }
        }
    }
}

#[test]
fn heal_action_targets_agents() {
    let mut env = env("HeA_D2G", 0, EngineConfig::default());
    let medic = env
        .agents()
        .iter()
        .position(|u| u.archetype == Archetype::Medivac)
        .unwrap();
    let patient = (0..env.n_agents()).find(|&a| a != medic).unwrap();
    park_agents_in_corner(&mut env);
    {
        let units = env.world_mut().units_mut();
        units[patient].health = 10;
        units[medic].position = units[patient].position + Vec2::new(1.0, 0.0);
    }
    let mut actions = vec![ACTION_STOP; env.n_agents()];
    actions[medic] = FIRST_TARGET_ACTION + patient;
    assert!(env.is_available(medic, actions[medic]));
    let outcome = env.step(&actions).unwrap();
    assert_eq!(
        (outcome.info.invalid_actions, outcome.info.rejected_commands),
        (0, 0)
    );
    assert_eq!(env.world().unit(patient).health, 25);
}
