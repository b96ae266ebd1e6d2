//! Task specifications and the built-in catalog.

mod layout;

pub use layout::{generate_layout, site_plan, Layout, Spawn};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::config::EngineConfig;
use crate::engine::{Archetype, EnemyControllerKind};
use crate::error::{Error, Result};
use crate::geometry::MapBounds;

/// Built-in catalog shipped with the library.
pub const BUILTIN_CATALOG_TOML: &str = include_str!("../../data/catalog.toml");

/// Environment variable naming a catalog file that overlays the built-in one.
pub const CATALOG_ENV: &str = "CTC_CATALOG";

pub const CATALOG_VERSION: u32 = 1;

fn is_zero(n: &u32) -> bool {
    *n == 0
}

/// Multiset of unit archetypes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Roster {
    #[serde(skip_serializing_if = "is_zero")]
    pub marine: u32,
    #[serde(skip_serializing_if = "is_zero")]
    pub marauder: u32,
    #[serde(skip_serializing_if = "is_zero")]
    pub medivac: u32,
}

impl Roster {
    pub const fn new(marine: u32, marauder: u32, medivac: u32) -> Self {
        Self {
            marine,
            marauder,
            medivac,
        }
    }

    pub fn count(&self, archetype: Archetype) -> u32 {
        match archetype {
            Archetype::Marine => self.marine,
            Archetype::Marauder => self.marauder,
            Archetype::Medivac => self.medivac,
        }
    }

    pub fn count_mut(&mut self, archetype: Archetype) -> &mut u32 {
        match archetype {
            Archetype::Marine => &mut self.marine,
            Archetype::Marauder => &mut self.marauder,
            Archetype::Medivac => &mut self.medivac,
        }
    }

    pub fn total(&self) -> u32 {
        self.marine + self.marauder + self.medivac
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Number of distinct archetypes present.
    pub fn distinct(&self) -> usize {
        Archetype::ALL
            .iter()
            .filter(|a| self.count(**a) > 0)
            .count()
    }

    /// Units in canonical order: marines, marauders, medivacs.
    pub fn units(&self) -> impl Iterator<Item = Archetype> + '_ {
        Archetype::ALL
            .into_iter()
            .flat_map(move |a| std::iter::repeat_n(a, self.count(a) as usize))
    }

    pub fn sum<'a>(rosters: impl IntoIterator<Item = &'a Roster>) -> Roster {
        rosters
            .into_iter()
            .fold(Roster::default(), |acc, r| Roster {
                marine: acc.marine + r.marine,
                marauder: acc.marauder + r.marauder,
                medivac: acc.medivac + r.medivac,
            })
    }
}

impl fmt::Display for Roster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = Archetype::ALL
            .iter()
            .filter(|a| self.count(**a) > 0)
            .map(|a| format!("{} {}", self.count(*a), a))
            .collect();
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubtaskSpec {
    pub kind: EnemyControllerKind,
    pub enemies: Roster,
    /// Agents spawned at this subtask. Spawn placement only: agents may go
    /// anywhere afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allies: Option<Roster>,
}

/// Information-interference level of a task, set by region separation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InterferenceClass {
    /// Other subtasks' enemies and agents are visible (separation 7).
    #[serde(rename = "d1")]
    SubtaskAndAgentVisible,
    /// Only agents working on other subtasks can come into view (separation 10).
    #[serde(rename = "d2")]
    AgentVisible,
    /// Regions are out of each other's sight (separation 14).
    #[serde(rename = "d3")]
    NoneVisible,
}

impl InterferenceClass {
    pub fn required_distance(self) -> f64 {
        match self {
            InterferenceClass::SubtaskAndAgentVisible => 7.0,
            InterferenceClass::AgentVisible => 10.0,
            InterferenceClass::NoneVisible => 14.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InterferenceClass::SubtaskAndAgentVisible => "D1",
            InterferenceClass::AgentVisible => "D2",
            InterferenceClass::NoneVisible => "D3",
        }
    }
}

/// Declarative description of a composite task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeTaskSpec {
    pub name: String,
    /// Full agent roster.
    pub agents: Roster,
    /// Consecutive region separations alternate between the two entries.
    pub distances: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<InterferenceClass>,
    pub episode_limit: u32,
    #[serde(default)]
    pub map: MapBounds,
    pub subtasks: Vec<SubtaskSpec>,
}

impl CompositeTaskSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn enemy_roster(&self) -> Roster {
        Roster::sum(self.subtasks.iter().map(|s| &s.enemies))
    }

    pub fn n_agents(&self) -> usize {
        self.agents.total() as usize
    }

    pub fn n_enemies(&self) -> usize {
        self.enemy_roster().total() as usize
    }

    /// Separation between region `k` and region `k + 1`.
    pub fn gap(&self, k: usize) -> f64 {
        self.distances[k % 2]
    }
}

/// Task variant classes: heterogeneous/homogeneous agents crossed with
/// asymmetrical/symmetrical subtask enemy rosters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    HeA,
    HeS,
    HoA,
    HoS,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Variant::HeA => "HeA",
            Variant::HeS => "HeS",
            Variant::HoA => "HoA",
            Variant::HoS => "HoS",
        };
        f.write_str(s)
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hea" => Ok(Variant::HeA),
            "hes" => Ok(Variant::HeS),
            "hoa" => Ok(Variant::HoA),
            "hos" => Ok(Variant::HoS),
            _ => Err(Error::InvalidArgument(format!("unknown variant `{s}`"))),
        }
    }
}

/// Homogeneous iff the agents share one archetype; symmetrical iff every
/// subtask has the same enemy multiset.
pub fn classify_variant(spec: &CompositeTaskSpec) -> Variant {
    let homogeneous = spec.agents.distinct() <= 1;
    let symmetrical = spec
        .subtasks
        .windows(2)
        .all(|pair| pair[0].enemies == pair[1].enemies);
    match (homogeneous, symmetrical) {
        (false, false) => Variant::HeA,
        (false, true) => Variant::HeS,
        (true, false) => Variant::HoA,
        (true, true) => Variant::HoS,
    }
}

/// A broken invariant of a task spec.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    TooFewSubtasks(usize),
    EmptyEnemyRoster(usize),
    RosterAsymmetry {
        archetype: Archetype,
        agents: u32,
        enemies: u32,
    },
    AllyAssignmentMismatch {
        assigned: Roster,
        agents: Roster,
    },
    InterferenceDistance {
        class: InterferenceClass,
        expected: f64,
        found: [f64; 2],
    },
    RegionsTooClose {
        separation: f64,
        required: f64,
    },
    MissingAugmentation(usize),
    ZeroEpisodeLimit,
    InvalidDistance(f64),
    Layout(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewSubtasks(n) => {
                write!(f, "composite tasks need at least 2 subtasks, found {n}")
            }
            Violation::EmptyEnemyRoster(i) => write!(f, "subtask {i} has no enemies"),
            Violation::RosterAsymmetry {
                archetype,
                agents,
                enemies,
            } => write!(
                f,
                "roster asymmetry: {agents} allied vs {enemies} enemy {archetype}"
            ),
            Violation::AllyAssignmentMismatch { assigned, agents } => write!(
                f,
                "per-subtask allies sum to {assigned} but the agent roster is {agents}"
            ),
            Violation::InterferenceDistance {
                class,
                expected,
                found,
            } => write!(
                f,
                "interference {} requires distances {expected}/{expected}, found {}/{}",
                class.label(),
                found[0],
                found[1]
            ),
            Violation::RegionsTooClose {
                separation,
                required,
            } => write!(
                f,
                "region separation {separation} does not exceed the independence radius {required}"
            ),
            Violation::MissingAugmentation(i) => write!(
                f,
                "subtask {i} of an interference task has a medivac without escort units"
            ),
            Violation::ZeroEpisodeLimit => f.write_str("episode_limit must be positive"),
            Violation::InvalidDistance(d) => write!(f, "region distance {d} must be positive"),
            Violation::Layout(msg) => write!(f, "layout infeasible: {msg}"),
        }
    }
}

/// Check every task invariant. An empty list means the spec is valid.
pub fn validate_spec(spec: &CompositeTaskSpec, config: &EngineConfig) -> Vec<Violation> {
    let mut violations = Vec::new();
    let n = spec.subtasks.len();
    if n < 2 {
        violations.push(Violation::TooFewSubtasks(n));
    }
    for (i, subtask) in spec.subtasks.iter().enumerate() {
        if subtask.enemies.is_empty() {
            violations.push(Violation::EmptyEnemyRoster(i));
        }
    }

    let enemies = spec.enemy_roster();
    for archetype in Archetype::ALL {
        let (a, e) = (spec.agents.count(archetype), enemies.count(archetype));
        if a != e {
            violations.push(Violation::RosterAsymmetry {
                archetype,
                agents: a,
                enemies: e,
            });
        }
    }
    if spec.subtasks.iter().any(|s| s.allies.is_some()) {
        let assigned = Roster::sum(spec.subtasks.iter().filter_map(|s| s.allies.as_ref()));
        if spec.subtasks.iter().any(|s| s.allies.is_none()) || assigned != spec.agents {
            violations.push(Violation::AllyAssignmentMismatch {
                assigned,
                agents: spec.agents,
            });
        }
    }

    if spec.episode_limit == 0 {
        violations.push(Violation::ZeroEpisodeLimit);
    }
    let mut distances_ok = true;
    for d in spec.distances {
        if d.is_nan() || d <= 0.0 {
            violations.push(Violation::InvalidDistance(d));
            distances_ok = false;
        }
    }

    match spec.interference {
        Some(class) => {
            let expected = class.required_distance();
            if spec.distances.iter().any(|d| *d != expected) {
                violations.push(Violation::InterferenceDistance {
                    class,
                    expected,
                    found: spec.distances,
                });
            }
            for (i, subtask) in spec.subtasks.iter().enumerate() {
                let e = &subtask.enemies;
                if e.medivac > 0 && e.total() == e.medivac {
                    violations.push(Violation::MissingAugmentation(i));
                }
            }
        }
        None => {
            let required = config.independence_radius();
            let used = n.saturating_sub(1).min(2);
            for separation in spec.distances.iter().take(used) {
                if *separation <= required {
                    violations.push(Violation::RegionsTooClose {
                        separation: *separation,
                        required,
                    });
                }
            }
        }
    }

    if distances_ok && n > 0 {
        if let Err(msg) = site_plan(spec, config) {
            violations.push(Violation::Layout(msg));
        }
    }
    violations
}

/// Spawn assignment: which agents start at which subtask.
///
/// Uses the spec's per-subtask ally rosters when present; otherwise mirrors
/// the enemy rosters when the agent roster allows it; otherwise splits the
/// agents in canonical order proportionally to enemy counts, giving every
/// subtask at least one agent when there are enough, with ties going to the
/// lower subtask index.
pub fn spawn_assignment(spec: &CompositeTaskSpec) -> Vec<Roster> {
    if let Some(explicit) = spec
        .subtasks
        .iter()
        .map(|s| s.allies)
        .collect::<Option<Vec<Roster>>>()
    {
        if Roster::sum(&explicit) == spec.agents {
            return explicit;
        }
    }
    if spec.enemy_roster() == spec.agents {
        return spec.subtasks.iter().map(|s| s.enemies).collect();
    }
    proportional_split(spec)
}

fn proportional_split(spec: &CompositeTaskSpec) -> Vec<Roster> {
    let n = spec.subtasks.len();
    let agents = spec.agents.total() as usize;
    if n == 0 {
        return Vec::new();
    }
    let weights: Vec<u64> = spec
        .subtasks
        .iter()
        .map(|s| u64::from(s.enemies.total()))
        .collect();
    let total_weight: u64 = weights.iter().sum::<u64>().max(1);

    let mut quotas = vec![0usize; n];
    let mut remaining = agents;
    if agents >= n {
        quotas.iter_mut().for_each(|q| *q = 1);
        remaining -= n;
    }
    // Largest remainder over what is left; ties to the lower index.
    let exact: Vec<(u64, u64)> = weights
        .iter()
        .map(|w| {
            let num = w * remaining as u64;
            (num / total_weight, num % total_weight)
        })
        .collect();
    let mut handed = 0usize;
    for (q, (whole, _)) in quotas.iter_mut().zip(&exact) {
        *q += *whole as usize;
        handed += *whole as usize;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| exact[*b].1.cmp(&exact[*a].1).then(a.cmp(b)));
    for i in order.into_iter().cycle().take(remaining - handed) {
        quotas[i] += 1;
    }

    let mut units = spec.agents.units();
    quotas
        .into_iter()
        .map(|q| {
            let mut roster = Roster::default();
            for archetype in units.by_ref().take(q) {
                *roster.count_mut(archetype) += 1;
            }
            roster
        })
        .collect()
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogFile {
    version: u32,
    #[serde(rename = "task", default)]
    tasks: Vec<CompositeTaskSpec>,
}

/// Immutable, name-ordered set of task specs.
#[derive(Clone, Debug)]
pub struct Catalog {
    tasks: BTreeMap<String, CompositeTaskSpec>,
    order: Vec<String>,
}

impl Catalog {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN_CATALOG_TOML).expect("built-in catalog parses")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: CatalogFile = toml::from_str(text)?;
        if file.version != CATALOG_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported catalog version {} (expected {CATALOG_VERSION})",
                file.version
            )));
        }
        let mut catalog = Catalog {
            tasks: BTreeMap::new(),
            order: Vec::new(),
        };
        for task in file.tasks {
            catalog.insert(task);
        }
        Ok(catalog)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Built-in catalog overlaid with the file named by `CTC_CATALOG`, if set.
    pub fn from_env() -> Result<Self> {
        let mut catalog = Self::builtin();
        if let Some(path) = std::env::var_os(CATALOG_ENV) {
            let user = Self::load(Path::new(&path))?;
            for name in user.order.clone() {
                catalog.insert(user.tasks[&name].clone());
            }
        }
        Ok(catalog)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        let file = CatalogFile {
            version: CATALOG_VERSION,
            tasks: self.iter().cloned().collect(),
        };
        Ok(toml::to_string(&file)?)
    }

    fn insert(&mut self, task: CompositeTaskSpec) {
        if !self.tasks.contains_key(&task.name) {
            self.order.push(task.name.clone());
        }
        self.tasks.insert(task.name.clone(), task);
    }

    pub fn lookup_task(&self, name: &str) -> Result<&CompositeTaskSpec> {
        self.tasks.get(name).ok_or_else(|| Error::TaskNotFound {
            name: name.to_string(),
            valid: self.order.clone(),
        })
    }

    /// Tasks in file order.
    pub fn iter(&self) -> impl Iterator<Item = &CompositeTaskSpec> {
        self.order.iter().map(|n| &self.tasks[n])
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> CompositeTaskSpec {
        Catalog::builtin().lookup_task(name).unwrap().clone()
    }

    #[test]
    fn hea_d2g_rosters() {
        let s = spec("HeA_D2G");
        assert_eq!(s.agents, Roster::new(2, 2, 2));
        assert_eq!(s.subtasks[0].enemies, Roster::new(0, 1, 1));
        assert_eq!(s.subtasks[1].enemies, Roster::new(2, 1, 1));
    }

    #[test]
    fn hoa_d4g_rosters() {
        let s = spec("HoA_D4G");
        assert_eq!(s.agents, Roster::new(12, 0, 0));
        let counts: Vec<u32> = s.subtasks.iter().map(|t| t.enemies.marine).collect();
        assert_eq!(counts, vec![1, 2, 4, 5]);
    }

    #[test]
    fn hos_d3g_rosters() {
        let s = spec("HoS_D3G");
        assert_eq!(s.agents, Roster::new(9, 0, 0));
        assert_eq!(s.subtasks.len(), 3);
        assert!(s.subtasks.iter().all(|t| t.enemies == Roster::new(3, 0, 0)));
    }

    #[test]
    fn unknown_task_lists_valid_names() {
        let err = Catalog::builtin().lookup_task("X").unwrap_err();
        match err {
            Error::TaskNotFound { valid, .. } => {
                assert_eq!(valid.len(), 17);
                assert!(valid.contains(&"HoS_D2G".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hes_d4g_is_valid() {
        assert!(validate_spec(&spec("HeS_D4G"), &EngineConfig::default()).is_empty());
    }

    #[test]
    fn roster_asymmetry_is_reported() {
        let mut s = spec("HoS_D2G");
        s.agents = Roster::new(1, 0, 0);
        s.subtasks = vec![
            SubtaskSpec {
                kind: EnemyControllerKind::DefenseGroup,
                enemies: Roster::new(2, 0, 0),
                allies: None,
            },
            SubtaskSpec {
                kind: EnemyControllerKind::DefenseGroup,
                enemies: Roster::new(0, 0, 0),
                allies: None,
            },
        ];
        let v = validate_spec(&s, &EngineConfig::default());
        assert!(v.contains(&Violation::RosterAsymmetry {
            archetype: Archetype::Marine,
            agents: 1,
            enemies: 2
        }));
        assert!(v.contains(&Violation::EmptyEnemyRoster(1)));
    }

    #[test]
    fn d1_with_wrong_distance_is_reported() {
        let mut s = spec("HeA_P2G-D1");
        s.distances = [12.0, 12.0];
        let v = validate_spec(&s, &EngineConfig::default());
        assert!(v.iter().any(
            |x| matches!(x, Violation::InterferenceDistance { expected, .. } if *expected == 7.0)
        ));
    }

    #[test]
    fn non_interference_regions_must_be_independent() {
        let mut s = spec("HoS_D2G");
        s.distances = [9.5, 9.5];
        let v = validate_spec(&s, &EngineConfig::default());
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::RegionsTooClose { .. })));
    }

    #[test]
    fn single_subtask_is_rejected() {
        let mut s = spec("HoS_D2G");
        s.subtasks.truncate(1);
        s.agents = s.subtasks[0].enemies;
        s.subtasks[0].allies = Some(s.agents);
        let v = validate_spec(&s, &EngineConfig::default());
        assert_eq!(v, vec![Violation::TooFewSubtasks(1)]);
    }

    #[test]
    fn interference_medivac_groups_need_escorts() {
        let mut s = spec("HeA_P2G-D3");
        s.subtasks[0].enemies = Roster::new(0, 0, 1);
        s.subtasks[1].enemies = Roster::new(2, 2, 1);
        let v = validate_spec(&s, &EngineConfig::default());
        assert!(v.contains(&Violation::MissingAugmentation(0)));
    }

    #[test]
    fn variants() {
        assert_eq!(classify_variant(&spec("HoS_D2G")), Variant::HoS);
        assert_eq!(classify_variant(&spec("HeA_M3G")), Variant::HeA);
        assert_eq!(classify_variant(&spec("HeS_D3G")), Variant::HeS);
        let mut s = spec("HoA_D2G");
        s.subtasks[0].enemies = Roster::new(2, 0, 0);
        s.subtasks[1].enemies = Roster::new(4, 0, 0);
        assert_eq!(classify_variant(&s), Variant::HoA);
    }

    #[test]
    fn spawn_assignment_mirrors_catalog() {
        let s = spec("HeA_D2G");
        assert_eq!(
            spawn_assignment(&s),
            vec![Roster::new(0, 1, 1), Roster::new(2, 1, 1)]
        );
        let mut bare = s.clone();
        bare.subtasks.iter_mut().for_each(|t| t.allies = None);
        assert_eq!(spawn_assignment(&bare), spawn_assignment(&s));
    }

    #[test]
    fn proportional_assignment() {
        let mut s = spec("HoS_D2G");
        s.subtasks.iter_mut().for_each(|t| t.allies = None);
        s.agents = Roster::new(2, 0, 0);
        assert_eq!(
            spawn_assignment(&s),
            vec![Roster::new(1, 0, 0), Roster::new(1, 0, 0)]
        );

        // 7 agents over enemy counts 1 and 5: one each, then 5 by weight.
        s.agents = Roster::new(7, 0, 0);
        s.subtasks[0].enemies = Roster::new(1, 0, 0);
        s.subtasks[1].enemies = Roster::new(5, 0, 0);
        let split = spawn_assignment(&s);
        assert_eq!(split, vec![Roster::new(2, 0, 0), Roster::new(5, 0, 0)]);
        assert_eq!(Roster::sum(&split), s.agents);

        // Equal weights and an odd remainder: the lower index wins the tie.
        s.agents = Roster::new(5, 0, 0);
        s.subtasks[0].enemies = Roster::new(3, 0, 0);
        s.subtasks[1].enemies = Roster::new(3, 0, 0);
        assert_eq!(
            spawn_assignment(&s),
            vec![Roster::new(3, 0, 0), Roster::new(2, 0, 0)]
        );
    }

    #[test]
    fn spec_file_round_trip() {
        for task in Catalog::builtin().iter() {
            let text = task.to_toml_string().unwrap();
            assert_eq!(&CompositeTaskSpec::from_toml_str(&text).unwrap(), task);
        }
        let catalog = Catalog::builtin();
        let again = Catalog::from_toml_str(&catalog.to_toml_string().unwrap()).unwrap();
        assert!(catalog.iter().eq(again.iter()));
    }
}
