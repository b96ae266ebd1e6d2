//! Test-time evaluation: win rates over episode batches, per-seed win-rate
//! curves, the stability coefficient and report export.
//!
//! Scripted policies do not train, so a "checkpoint" here is simply another
//! independent test batch; its step index is the checkpoint ordinal.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{Policy, PolicyKind};
use crate::catalog::CompositeTaskSpec;
use crate::config::EngineConfig;
use crate::env::Env;
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, with_workers};
use crate::replay::ReplayRecorder;

/// Stride between the derived episode seeds of consecutive base seeds.
pub const SEED_STRIDE: u64 = 1_000_000;

pub fn episode_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_mul(SEED_STRIDE).wrapping_add(index)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub seed: u64,
    pub won: bool,
    pub failed_subtask: Option<usize>,
    pub timed_out: bool,
    pub steps: u32,
    pub episode_return: f64,
    pub invalid_actions: u32,
    #[serde(skip)]
    pub replay: Option<String>,
}

/// Play one episode to termination. With `record` set the replay text is
/// kept in the result.
pub fn run_episode(
    env: &mut Env,
    policy: &mut dyn Policy,
    seed: u64,
    record: bool,
) -> Result<EpisodeResult> {
    env.reset(seed)?;
    policy.reset(env, seed);
    let mut recorder = if record {
        Some(ReplayRecorder::start(env, policy.name())?)
    } else {
        None
    };
    let mut actions = vec![0; env.n_agents()];
    let mut result = EpisodeResult {
        seed,
        won: false,
        failed_subtask: None,
        timed_out: false,
        steps: 0,
        episode_return: 0.0,
        invalid_actions: 0,
        replay: None,
    };
    while !env.is_terminated() {
        policy.act(env, &mut actions);
        let outcome = env.step(&actions)?;
        if let Some(r) = recorder.as_mut() {
            r.record(env, &outcome)?;
        }
        result.episode_return += outcome.reward;
        result.invalid_actions += outcome.info.invalid_actions;
        result.won = outcome.won;
        result.failed_subtask = outcome.failed_subtask;
        result.timed_out = outcome.timed_out;
    }
    result.steps = env.step_count();
    result.replay = recorder.map(ReplayRecorder::finish);
    Ok(result)
}

/// Episodes with seeds `episode_seed(seed, first + i)` for `i < episodes`,
/// in order, spread over the worker pool.
pub fn run_episodes(
    spec: &Arc<CompositeTaskSpec>,
    config: &Arc<EngineConfig>,
    policy: PolicyKind,
    seed: u64,
    first: u64,
    episodes: usize,
    record: bool,
) -> Result<Vec<EpisodeResult>> {
    let template = Env::new(Arc::clone(spec), Arc::clone(config))?;
    map_indexed(episodes, |i| {
        let mut env = template.clone();
        let mut p = policy.build();
        run_episode(
            &mut env,
            p.as_mut(),
            episode_seed(seed, first + i as u64),
            record,
        )
    })
    .into_iter()
    .collect()
}

/// Fraction of `episodes` test episodes won.
pub fn run_test_batch(
    spec: &Arc<CompositeTaskSpec>,
    config: &Arc<EngineConfig>,
    policy: PolicyKind,
    seed: u64,
    episodes: usize,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::InvalidArgument(
            "a test batch needs at least one episode".into(),
        ));
    }
    let results = run_episodes(spec, config, policy, seed, 0, episodes, false)?;
    Ok(win_rate(&results))
}

pub fn win_rate(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.won).count() as f64 / results.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinRateCurve {
    pub seed: u64,
    /// `(step index, win rate)`, strictly increasing in step.
    pub checkpoints: Vec<(u64, f64)>,
}

impl WinRateCurve {
    pub fn new(seed: u64, checkpoints: Vec<(u64, f64)>) -> Self {
        Self { seed, checkpoints }
    }

    /// Curve with checkpoints at steps `0, 1, ...`.
    pub fn from_rates(seed: u64, rates: &[f64]) -> Self {
        Self::new(
            seed,
            rates
                .iter()
                .enumerate()
                .map(|(i, &w)| (i as u64, w))
                .collect(),
        )
    }

    pub fn peak(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMode {
    /// Divide by N. A single seed has variance 0.
    #[default]
    Population,
    /// Divide by N - 1. A single seed is reported as 0.
    Sample,
}

impl std::str::FromStr for VarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "population" => Ok(Self::Population),
            "sample" => Ok(Self::Sample),
            other => Err(Error::InvalidArgument(format!(
                "unknown variance mode `{other}`; expected population or sample"
            ))),
        }
    }
}

/// Mean over checkpoints of the across-seed variance of the win rate.
///
/// Curves must share identical step indices; nothing is interpolated.
pub fn stability_coefficient(curves: &[WinRateCurve], mode: VarianceMode) -> Result<f64> {
    let first = curves
        .first()
        .ok_or_else(|| Error::Alignment("no curves".into()))?;
    let m = first.checkpoints.len();
    if m == 0 {
        return Err(Error::Alignment(format!(
            "seed {} has no checkpoints",
            first.seed
        )));
    }
    for c in &curves[1..] {
        let aligned = c.checkpoints.len() == m
            && c.checkpoints
                .iter()
                .zip(&first.checkpoints)
                .all(|(a, b)| a.0 == b.0);
        if !aligned {
            return Err(Error::Alignment(format!(
                "seed {} checkpoints differ from seed {}",
                c.seed, first.seed
            )));
        }
    }

    let n = curves.len();
    let mut total = 0.0;
    for i in 0..m {
        // Welford's running mean / sum of squared deviations.
        let (mut mean, mut m2) = (0.0_f64, 0.0_f64);
        for (k, c) in curves.iter().enumerate() {
            let w = c.checkpoints[i].1;
            let delta = w - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (w - mean);
        }
        total += match mode {
            VarianceMode::Population => m2 / n as f64,
            VarianceMode::Sample if n > 1 => m2 / (n - 1) as f64,
            VarianceMode::Sample => 0.0,
        };
    }
    Ok((total / m as f64).max(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub policy: String,
    pub curves: Vec<WinRateCurve>,
    pub max_test_win_rate: f64,
    pub stability_v: f64,
    pub variance_mode: VarianceMode,
    /// Number of checkpoints per curve.
    pub m: usize,
}

/// Summarize per-seed curves into a report.
pub fn aggregate_report(
    task: &str,
    policy: &str,
    curves: Vec<WinRateCurve>,
    mode: VarianceMode,
) -> Result<EvalReport> {
    let stability_v = stability_coefficient(&curves, mode)?;
    Ok(EvalReport {
        task: task.to_string(),
        policy: policy.to_string(),
        max_test_win_rate: curves.iter().map(WinRateCurve::peak).fold(0.0, f64::max),
        m: curves[0].checkpoints.len(),
        stability_v,
        variance_mode: mode,
        curves,
    })
}

impl EvalReport {
    /// Structured report text (pretty JSON).
    pub fn to_text(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Flat table: `task,policy,seed,checkpoint,win_rate`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task", "policy", "seed", "checkpoint", "win_rate"])?;
        for c in &self.curves {
            for &(step, rate) in &c.checkpoints {
                w.serialize((&self.task, &self.policy, c.seed, step, rate))?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Write `report.txt` and `report.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), self.to_text()?)?;
        fs::write(dir.join("report.csv"), self.to_csv()?)?;
        Ok(())
    }
}

/// What to run: `checkpoints` test batches of `episodes` episodes for every
/// seed.
#[derive(Clone, Debug)]
pub struct EvalPlan {
    pub spec: Arc<CompositeTaskSpec>,
    pub config: Arc<EngineConfig>,
    pub policy: PolicyKind,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    pub checkpoints: usize,
    pub variance_mode: VarianceMode,
    pub record_replays: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl EvalPlan {
    pub fn new(spec: CompositeTaskSpec, config: EngineConfig, policy: PolicyKind) -> Self {
        Self {
            spec: Arc::new(spec),
            config: Arc::new(config),
            policy,
            seeds: vec![0],
            episodes: 32,
            checkpoints: 1,
            variance_mode: VarianceMode::Population,
            record_replays: false,
            workers: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayFile {
    pub name: String,
    pub text: String,
}

#[derive(Clone, Debug)]
pub struct EvalOutput {
    pub report: EvalReport,
    pub episodes: Vec<EpisodeResult>,
    pub replays: Vec<ReplayFile>,
}

pub fn run_plan(plan: &EvalPlan) -> Result<EvalOutput> {
    if plan.seeds.is_empty() || plan.episodes == 0 || plan.checkpoints == 0 {
        return Err(Error::InvalidArgument(
            "need at least one seed, episode and checkpoint".into(),
        ));
    }
    let per_seed = plan.episodes * plan.checkpoints;
    let total = plan.seeds.len() * per_seed;
    let template = Env::new(Arc::clone(&plan.spec), Arc::clone(&plan.config))?;

    let results: Vec<EpisodeResult> = with_workers(plan.workers, || {
        map_indexed(total, |i| {
            let seed = plan.seeds[i / per_seed];
            let mut env = template.clone();
            let mut policy = plan.policy.build();
            run_episode(
                &mut env,
                policy.as_mut(),
                episode_seed(seed, (i % per_seed) as u64),
                plan.record_replays,
            )
        })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let curves = plan
        .seeds
        .iter()
        .enumerate()
        .map(|(s, &seed)| {
            let rates: Vec<f64> = (0..plan.checkpoints)
                .map(|c| {
                    let start = s * per_seed + c * plan.episodes;
                    win_rate(&results[start..start + plan.episodes])
                })
                .collect();
            WinRateCurve::from_rates(seed, &rates)
        })
        .collect();
    let report = aggregate_report(
        &plan.spec.name,
        plan.policy.name(),
        curves,
        plan.variance_mode,
    )?;

    let mut episodes = results;
    let replays = episodes
        .iter_mut()
        .enumerate()
        .filter_map(|(i, r)| {
            r.replay.take().map(|text| ReplayFile {
                name: format!(
                    "{}_{}_{}_{}.replay",
                    plan.spec.name,
                    plan.policy.name(),
                    plan.seeds[i / per_seed],
                    i % per_seed
                ),
                text,
            })
        })
        .collect();
    Ok(EvalOutput {
        report,
        episodes,
        replays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Catalog;

    fn curves(rates: &[&[f64]]) -> Vec<WinRateCurve> {
        rates
            .iter()
            .enumerate()
            .map(|(i, r)| WinRateCurve::from_rates(i as u64, r))
            .collect()
    }

    #[test]
    fn three_curve_hand_case() {
        let v = stability_coefficient(
            &curves(&[&[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]]),
            VarianceMode::Population,
        )
        .unwrap();
        assert!((v - 1.0 / 6.0).abs() <= 1e-12);
        let s = stability_coefficient(
            &curves(&[&[0.0, 0.0], &[1.0, 1.0], &[0.5, 0.5]]),
            VarianceMode::Sample,
        )
        .unwrap();
        assert!((s - 0.25).abs() <= 1e-12);
    }

    #[test]
    fn degenerate_cases_are_zero() {
        assert_eq!(
            stability_coefficient(
                &curves(&[&[0.3, 0.7], &[0.3, 0.7], &[0.3, 0.7]]),
                VarianceMode::Population
            )
            .unwrap(),
            0.0
        );
        assert_eq!(
            stability_coefficient(&curves(&[&[0.3, 0.9]]), VarianceMode::Population).unwrap(),
            0.0
        );
    }

    #[test]
    fn misaligned_curves_are_rejected() {
        let a = WinRateCurve::new(0, vec![(0, 0.1), (10, 0.2)]);
        let b = WinRateCurve::new(1, vec![(0, 0.1), (11, 0.2)]);
        assert!(matches!(
            stability_coefficient(&[a.clone(), b], VarianceMode::Population),
            Err(Error::Alignment(_))
        ));
        let c = WinRateCurve::new(2, vec![(0, 0.1)]);
        assert!(matches!(
            stability_coefficient(&[a, c], VarianceMode::Population),
            Err(Error::Alignment(_))
        ));
        assert!(stability_coefficient(&[], VarianceMode::Population).is_err());
    }

    #[test]
    fn report_takes_peak_over_seeds() {
        let r = aggregate_report(
            "t",
            "p",
            curves(&[&[0.0], &[0.5], &[1.0]]),
            VarianceMode::Population,
        )
        .unwrap();
        assert_eq!(r.max_test_win_rate, 1.0);
        assert_eq!(r.m, 1);
        let r =
            aggregate_report("t", "p", curves(&[&[0.0, 0.0]]), VarianceMode::Population).unwrap();
        assert_eq!((r.max_test_win_rate, r.stability_v), (0.0, 0.0));
    }

    #[test]
    fn csv_has_one_row_per_checkpoint() {
        let r = aggregate_report(
            "t",
            "p",
            curves(&[&[0.0, 0.5], &[1.0, 0.25]]),
            VarianceMode::Population,
        )
        .unwrap();
        let csv = r.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "task,policy,seed,checkpoint,win_rate");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "t,p,1,1,0.25");
    }

    #[test]
    fn episode_seeds_are_derived() {
        assert_eq!(episode_seed(3, 7), 3_000_007);
    }

    #[test]
    fn random_policy_never_wins_one_episode() {
        let spec = Arc::new(Catalog::builtin().lookup_task("HoS_D2G").unwrap().clone());
        let rate = run_test_batch(
            &spec,
            &Arc::new(EngineConfig::default()),
            PolicyKind::Random,
            0,
            1,
        )
        .unwrap();
        assert_eq!(rate, 0.0);
    }
}
