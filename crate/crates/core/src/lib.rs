//! Composite-task multi-agent combat environment.
//!
//! Tasks are compositions of defense and pursuit subtasks spread far enough
//! apart that no single group of agents can handle two at once. The crate
//! provides the deterministic combat engine, the task catalog and layouts,
//! the episodic environment, scripted reference policies, the evaluation
//! harness (test win rate and the stability coefficient) and a bit-exact
//! replay log.

pub mod agents;
pub mod catalog;
pub mod config;
pub mod engine;
pub mod env;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod parallel;
pub mod replay;

pub use agents::{assign_squads, Policy, PolicyKind, SquadAssignment};
pub use catalog::{
    classify_variant, validate_spec, Catalog, CompositeTaskSpec, Roster, SubtaskSpec, Variant,
};
pub use config::{DefenseEnemyMode, EngineConfig};
pub use env::{Env, StepOutcome};
pub use error::{Error, Result};
pub use eval::{EpisodeResult, EvalReport, WinRateCurve};
