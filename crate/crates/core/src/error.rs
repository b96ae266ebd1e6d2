use std::path::PathBuf;
use thiserror::Error;

use crate::catalog::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown task `{name}`; valid tasks: {}", valid.join(", "))]
    TaskNotFound { name: String, valid: Vec<String> },

    #[error("unknown policy `{0}`; expected one of oracle, no_dol, random")]
    UnknownPolicy(String),

    #[error("invalid task spec `{name}`: {}", display_violations(violations))]
    InvalidSpec {
        name: String,
        violations: Vec<Violation>,
    },

    #[error("layout infeasible: {0}")]
    Layout(String),

    #[error("invalid engine config: {0}")]
    Config(String),

    #[error("step called on a terminated episode")]
    EpisodeTerminated,

    #[error("joint action has {found} entries, expected {expected}")]
    ActionArity { expected: usize, found: usize },

    #[error("win-rate curves are misaligned: {0}")]
    Alignment(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("replay parse error at line {line}: {message}")]
    ReplayParse { line: usize, message: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

fn display_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
