//! Line-oriented replay log: a JSON header followed by one JSON record per
//! step. Replays embed the task spec and engine config, so they re-simulate
//! without access to the catalog that produced them.

use serde::{Deserialize, Serialize};

use crate::catalog::CompositeTaskSpec;
use crate::config::EngineConfig;
use crate::env::{Env, StepOutcome};
use crate::error::{Error, Result};

pub const REPLAY_FORMAT: &str = "ctc-replay";
pub const REPLAY_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub format: String,
    pub version: u32,
    pub task: String,
    pub seed: u64,
    pub policy: String,
    pub config_hash: String,
    pub config: EngineConfig,
    pub spec: CompositeTaskSpec,
}

impl ReplayHeader {
    pub fn new(env: &Env, policy: &str) -> Self {
        Self {
            format: REPLAY_FORMAT.to_string(),
            version: REPLAY_VERSION,
            task: env.spec().name.clone(),
            seed: env.seed(),
            policy: policy.to_string(),
            config_hash: env.config().hash(),
            config: env.config().clone(),
            spec: env.spec().clone(),
        }
    }
}

/// `(id, x, y, health, alive)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSnapshot(pub usize, pub f64, pub f64, pub u32, pub bool);

/// State after `step` steps. Record 0 is the reset state and has no actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub step: u32,
    /// Actions as applied, after availability coercion.
    pub actions: Vec<usize>,
    pub units: Vec<UnitSnapshot>,
    pub reward: f64,
    pub terminated: bool,
    pub won: bool,
    pub failed_subtask: Option<usize>,
}

impl ReplayRecord {
    fn capture(env: &Env, outcome: Option<&StepOutcome>) -> Self {
        let units = env
            .world()
            .units()
            .iter()
            .map(|u| UnitSnapshot(u.unit_id, u.position.x, u.position.y, u.health, u.alive))
            .collect();
        Self {
            step: env.step_count(),
            actions: outcome.map_or_else(Vec::new, |_| env.applied_actions().to_vec()),
            units,
            reward: outcome.map_or(0.0, |o| o.reward),
            terminated: outcome.is_some_and(|o| o.terminated),
            won: outcome.is_some_and(|o| o.won),
            failed_subtask: outcome.and_then(|o| o.failed_subtask),
        }
    }
}

/// Accumulates the replay text of one episode.
#[derive(Clone, Debug)]
pub struct ReplayRecorder {
    text: String,
}

impl ReplayRecorder {
    /// Start a log for an environment that was just reset.
    pub fn start(env: &Env, policy: &str) -> Result<Self> {
        let mut recorder = Self {
            text: String::new(),
        };
        recorder.push_line(&ReplayHeader::new(env, policy))?;
        recorder.push_line(&ReplayRecord::capture(env, None))?;
        Ok(recorder)
    }

    pub fn record(&mut self, env: &Env, outcome: &StepOutcome) -> Result<()> {
        self.push_line(&ReplayRecord::capture(env, Some(outcome)))
    }

    fn push_line<T: Serialize>(&mut self, value: &T) -> Result<()> {
        self.text.push_str(&serde_json::to_string(value)?);
        self.text.push('\n');
        Ok(())
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn finish(self) -> String {
        self.text
    }
}

pub fn parse_header(text: &str) -> Result<ReplayHeader> {
    let first = text.lines().next().ok_or_else(|| Error::ReplayParse {
        line: 1,
        message: "empty replay".into(),
    })?;
    let header: ReplayHeader = serde_json::from_str(first).map_err(|e| Error::ReplayParse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.format != REPLAY_FORMAT || header.version != REPLAY_VERSION {
        return Err(Error::ReplayParse {
            line: 1,
            message: format!("unsupported format {} v{}", header.format, header.version),
        });
    }
    Ok(header)
}

pub fn parse_records(text: &str) -> Result<Vec<ReplayRecord>> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::ReplayParse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub step: u32,
    pub expected: String,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub steps_checked: u32,
    pub divergence: Option<Divergence>,
    /// Set when the embedded config differs from the one supplied by the
    /// caller. Verification always uses the embedded config.
    pub config_warning: Option<String>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Re-simulate a replay from its header and recorded actions and compare
/// every re-serialized record byte for byte.
pub fn verify_replay(text: &str, current_config: Option<&EngineConfig>) -> Result<VerifyReport> {
    let header = parse_header(text)?;
    let config_warning = current_config.and_then(|c| {
        let hash = c.hash();
        (hash != header.config_hash).then(|| {
            format!(
                "replay was recorded with config {} but the current config is {}",
                header.config_hash, hash
            )
        })
    });
    if header.config.hash() != header.config_hash {
        return Err(Error::ReplayParse {
            line: 1,
            message: "embedded config does not match its hash".into(),
        });
    }

    let mut env = Env::new(header.spec, header.config)?;
    env.reset(header.seed)?;
    let mut steps_checked = 0;
    let mut lines = text
        .lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty());

    let Some((_, first)) = lines.next() else {
        return Err(Error::ReplayParse {
            line: 2,
            message: "missing initial record".into(),
        });
    };
    let initial = serde_json::to_string(&ReplayRecord::capture(&env, None))?;
    if initial != first {
        return Ok(VerifyReport {
            steps_checked,
            divergence: Some(Divergence {
                step: 0,
                expected: first.to_string(),
                found: initial,
            }),
            config_warning,
        });
    }

    for (i, line) in lines {
        let recorded: ReplayRecord =
            serde_json::from_str(line).map_err(|e| Error::ReplayParse {
                line: i + 1,
                message: e.to_string(),
            })?;
        let diverged = |found: String| Divergence {
            step: recorded.step,
            expected: line.to_string(),
            found,
        };
        if env.is_terminated() {
            return Ok(VerifyReport {
                steps_checked,
                divergence: Some(diverged("episode already terminated".into())),
                config_warning,
            });
        }
        let outcome = env.step(&recorded.actions)?;
        let replayed = serde_json::to_string(&ReplayRecord::capture(&env, Some(&outcome)))?;
        steps_checked += 1;
        if replayed != line {
            return Ok(VerifyReport {
                steps_checked,
                divergence: Some(diverged(replayed)),
                config_warning,
            });
        }
    }
    Ok(VerifyReport {
        steps_checked,
        divergence: None,
        config_warning,
    })
}
