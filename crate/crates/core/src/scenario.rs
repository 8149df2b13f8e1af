//! Scenario documents: the street graph, the pedestrians walking it and the
//! ambient light schedule.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type PoleId = u32;
pub type PersonId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub id: PoleId,
    pub neighbors: Vec<PoleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonSpec {
    pub id: PersonId,
    pub origin: PoleId,
    pub destination: PoleId,
    pub start_tick: u32,
}

/// Ambient level in effect from `from_tick` until the next entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbientStep {
    pub from_tick: u32,
    pub level: f64,
}

/// Immutable environment description. Build it with [`load_scenario`] or
/// [`builtin_scenario`]; hand-built values should go through
/// [`ScenarioSpec::validate`] before use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub max_ticks: u32,
    pub movement_threshold: f64,
    pub rng_seed: u64,
    pub ambient_schedule: Vec<AmbientStep>,
    pub poles: Vec<PoleSpec>,
    pub people: Vec<PersonSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    /// Field path inside the document, e.g. `people[2].destination`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("malformed scenario document: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Validation(#[from] ValidationError),
    #[error("unknown built-in scenario '{0}'")]
    UnknownBuiltin(String),
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        path: path.into(),
        message: message.into(),
    }
}

/// Parses and validates a scenario JSON document.
pub fn load_scenario(source: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec: ScenarioSpec = serde_json::from_str(source)?;
    spec.validate()?;
    Ok(spec)
}

pub const BUILTIN_SCENARIOS: [&str; 2] = ["scenario1", "scenario2"];

/// Built-in scenarios: `scenario1` is a 3x3 night-time grid with three
/// pedestrians, `scenario2` the expanded 5x5 grid with six.
pub fn builtin_scenario(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    let spec = match name {
        "scenario1" => grid_scenario(
            "scenario1",
            3,
            60,
            &[(1, 0, 8, 0), (2, 2, 6, 5), (3, 8, 0, 10)],
        ),
        "scenario2" => grid_scenario(
            "scenario2",
            5,
            100,
            &[
                (1, 0, 24, 0),
                (2, 4, 20, 5),
                (3, 24, 0, 10),
                (4, 20, 4, 15),
                (5, 2, 22, 20),
                (6, 10, 14, 25),
            ],
        ),
        other => return Err(ScenarioError::UnknownBuiltin(other.to_string())),
    };
    spec.validate()?;
    Ok(spec)
}

/// Square grid with rook adjacency; pole id = row * side + column.
fn grid_scenario(
    name: &str,
    side: u32,
    max_ticks: u32,
    people: &[(PersonId, PoleId, PoleId, u32)],
) -> ScenarioSpec {
    let mut poles = Vec::new();
    for row in 0..side {
        for col in 0..side {
            let mut neighbors = Vec::new();
            if row > 0 {
                neighbors.push((row - 1) * side + col);
            }
            if col > 0 {
                neighbors.push(row * side + col - 1);
            }
            if col + 1 < side {
                neighbors.push(row * side + col + 1);
            }
            if row + 1 < side {
                neighbors.push((row + 1) * side + col);
            }
            poles.push(PoleSpec {
                id: row * side + col,
                neighbors,
            });
        }
    }
    ScenarioSpec {
        name: name.to_string(),
        max_ticks,
        movement_threshold: 0.5,
        rng_seed: 0,
        ambient_schedule: vec![AmbientStep {
            from_tick: 0,
            level: 0.0,
        }],
        poles,
        people: people
            .iter()
            .map(|&(id, origin, destination, start_tick)| PersonSpec {
                id,
                origin,
                destination,
                start_tick,
            })
            .collect(),
    }
}

impl ScenarioSpec {
    /// Ambient level at `tick`: the last schedule entry starting at or before
    /// it, or darkness when none does.
    pub fn ambient_at(&self, tick: u32) -> f64 {
        self.ambient_schedule
            .iter()
            .take_while(|step| step.from_tick <= tick)
            .last()
            .map_or(0.0, |step| step.level)
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        self.layout().map(|_| ())
    }

    /// Validates the scenario and resolves it into index-based form.
    pub fn layout(&self) -> Result<Layout, ValidationError> {
        if self.max_ticks == 0 {
            return Err(invalid("max_ticks", "must be a positive integer"));
        }
        if !(0.0..=1.0).contains(&self.movement_threshold) {
            return Err(invalid("movement_threshold", "must lie in [0, 1]"));
        }
        let mut last_from: Option<u32> = None;
        for (i, step) in self.ambient_schedule.iter().enumerate() {
            if !(0.0..=1.0).contains(&step.level) {
                return Err(invalid(
                    format!("ambient_schedule[{i}].level"),
                    "ambient level must lie in [0, 1]",
                ));
            }
            if last_from.is_some_and(|prev| step.from_tick <= prev) {
                return Err(invalid(
                    format!("ambient_schedule[{i}].from_tick"),
                    "entries must have strictly increasing from_tick",
                ));
            }
            last_from = Some(step.from_tick);
        }

        if self.poles.is_empty() {
            return Err(invalid("poles", "at least one pole is required"));
        }
        let mut index_of = BTreeMap::new();
        for (i, pole) in self.poles.iter().enumerate() {
            if index_of.insert(pole.id, i).is_some() {
                return Err(invalid(
                    format!("poles[{i}].id"),
                    format!("duplicate pole id {}", pole.id),
                ));
            }
        }
        let mut edges = BTreeSet::new();
        for (i, pole) in self.poles.iter().enumerate() {
            for (j, &n) in pole.neighbors.iter().enumerate() {
                let path = format!("poles[{i}].neighbors[{j}]");
                if n == pole.id {
                    return Err(invalid(path, format!("pole {} lists itself as a neighbor", n)));
                }
                if !index_of.contains_key(&n) {
                    return Err(invalid(path, format!("unknown neighbor pole id {n}")));
                }
                if !edges.insert((pole.id, n)) {
                    return Err(invalid(path, format!("duplicate neighbor {n}")));
                }
            }
        }
        for (i, pole) in self.poles.iter().enumerate() {
            for (j, &n) in pole.neighbors.iter().enumerate() {
                if !edges.contains(&(n, pole.id)) {
                    return Err(invalid(
                        format!("poles[{i}].neighbors[{j}]"),
                        format!(
                            "asymmetric neighbor: pole {} lists {} but {} does not list {}",
                            pole.id, n, n, pole.id
                        ),
                    ));
                }
            }
        }

        // Neighbor lists sorted by pole id so BFS ties resolve to the lowest id.
        let adjacency: Vec<Vec<usize>> = self
            .poles
            .iter()
            .map(|pole| {
                let mut ids = pole.neighbors.clone();
                ids.sort_unstable();
                ids.iter().map(|id| index_of[id]).collect()
            })
            .collect();

        let mut person_ids = BTreeSet::new();
        let mut routes = Vec::with_capacity(self.people.len());
        for (i, person) in self.people.iter().enumerate() {
            if !person_ids.insert(person.id) {
                return Err(invalid(
                    format!("people[{i}].id"),
                    format!("duplicate person id {}", person.id),
                ));
            }
            let origin = *index_of.get(&person.origin).ok_or_else(|| {
                invalid(
                    format!("people[{i}].origin"),
                    format!("person {} has unknown origin pole {}", person.id, person.origin),
                )
            })?;
            let destination = *index_of.get(&person.destination).ok_or_else(|| {
                invalid(
                    format!("people[{i}].destination"),
                    format!(
                        "person {} has unknown destination pole {}",
                        person.id, person.destination
                    ),
                )
            })?;
            if person.start_tick >= self.max_ticks {
                return Err(invalid(
                    format!("people[{i}].start_tick"),
                    format!("person {} starts at or after max_ticks", person.id),
                ));
            }
            let route = shortest_route(&adjacency, origin, destination).ok_or_else(|| {
                invalid(
                    format!("people[{i}].destination"),
                    format!(
                        "person {}: no path from pole {} to pole {}",
                        person.id, person.origin, person.destination
                    ),
                )
            })?;
            routes.push(route);
        }

        Ok(Layout { adjacency, routes })
    }
}

/// Index-based view of a validated scenario. Pole indices follow the order
/// of `ScenarioSpec::poles`, people indices the order of `ScenarioSpec::people`.
#[derive(Debug, Clone)]
pub struct Layout {
    pub adjacency: Vec<Vec<usize>>,
    /// Pole indices from origin to destination, inclusive.
    pub routes: Vec<Vec<usize>>,
}

/// BFS distances from the destination, then a greedy walk from the origin that
/// always steps to the lowest-id neighbor one hop closer.
fn shortest_route(adjacency: &[Vec<usize>], origin: usize, destination: usize) -> Option<Vec<usize>> {
    let mut dist = vec![usize::MAX; adjacency.len()];
    dist[destination] = 0;
    let mut queue = VecDeque::from([destination]);
    while let Some(node) = queue.pop_front() {
        for &n in &adjacency[node] {
            if dist[n] == usize::MAX {
                dist[n] = dist[node] + 1;
                queue.push_back(n);
            }
        }
    }
    if dist[origin] == usize::MAX {
        return None;
    }
    let mut route = vec![origin];
    let mut at = origin;
    while at != destination {
        at = *adjacency[at].iter().find(|&&n| dist[n] + 1 == dist[at])?;
        route.push(at);
    }
    Some(route)
}
