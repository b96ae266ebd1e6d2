//! Reference policies.
//!
//! * `oracle`: squads split across subtasks by spawn assignment, each
//!   fighting only its own subtask's enemies.
//! * `no_dol`: the same micro tactics with every agent sent to subtask 0.
//! * `random`: uniform over available actions.

mod oracle;
mod random;

pub use oracle::{dol_oracle_policy, no_dol_policy, DolOracle, NoDol};
pub use random::RandomPolicy;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::catalog::{spawn_assignment, CompositeTaskSpec};
use crate::env::Env;
use crate::error::Error;

/// Agent id to subtask index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquadAssignment(Vec<usize>);

impl SquadAssignment {
    pub fn new(subtask_of_agent: Vec<usize>) -> Self {
        Self(subtask_of_agent)
    }

    /// Everyone on one subtask.
    pub fn all_to(n_agents: usize, subtask: usize) -> Self {
        Self(vec![subtask; n_agents])
    }

    pub fn subtask_of(&self, agent: usize) -> usize {
        self.0[agent]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn squad_sizes(&self, n_subtasks: usize) -> Vec<usize> {
        let mut sizes = vec![0; n_subtasks];
        for s in &self.0 {
            sizes[*s] += 1;
        }
        sizes
    }
}

/// Squads mirroring the spawn assignment, in agent id order.
pub fn assign_squads(spec: &CompositeTaskSpec) -> SquadAssignment {
    let subtask_of_agent = spawn_assignment(spec)
        .iter()
        .enumerate()
        .flat_map(|(index, roster)| std::iter::repeat_n(index, roster.total() as usize))
        .collect();
    SquadAssignment(subtask_of_agent)
}

/// A joint policy. Deterministic given the seed passed to `reset`.
pub trait Policy: Send {
    fn name(&self) -> &'static str;
    fn reset(&mut self, env: &Env, seed: u64);
    /// Write one action index per agent into `actions`.
    fn act(&mut self, env: &Env, actions: &mut [usize]);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Oracle,
    NoDol,
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Oracle, PolicyKind::NoDol, PolicyKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::NoDol => "no_dol",
            PolicyKind::Random => "random",
        }
    }

    pub fn build(self) -> Box<dyn Policy> {
        match self {
            PolicyKind::Oracle => Box::new(DolOracle::default()),
            PolicyKind::NoDol => Box::new(NoDol),
            PolicyKind::Random => Box::new(RandomPolicy::default()),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "oracle" => Ok(PolicyKind::Oracle),
            "no_dol" | "no-dol" => Ok(PolicyKind::NoDol),
            "random" => Ok(PolicyKind::Random),
            other => Err(Error::UnknownPolicy(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{Catalog, Roster};

    #[test]
    fn squads_follow_catalog_rosters() {
        let catalog = Catalog::builtin();
        let hea = catalog.lookup_task("HeA_D2G").unwrap();
        assert_eq!(assign_squads(hea).as_slice(), &[0, 0, 1, 1, 1, 1]);
        let hos = catalog.lookup_task("HoS_D2G").unwrap();
        assert_eq!(assign_squads(hos).squad_sizes(2), vec![3, 3]);
    }

    #[test]
    fn pigeonhole_split() {
        let mut spec = Catalog::builtin().lookup_task("HoS_D2G").unwrap().clone();
        spec.agents = Roster::new(2, 0, 0);
        spec.subtasks.iter_mut().for_each(|s| s.allies = None);
        assert_eq!(assign_squads(&spec).as_slice(), &[0, 1]);
    }

    #[test]
    fn policy_names_parse() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("qmix".parse::<PolicyKind>().is_err());
    }
}
