//! Tick-based streetlight simulation.
//!
//! Every tick runs the same five phases:
//!
//! 1. each pole builds a [`SensorReading`] from the previous tick's
//!    broadcasts, current pedestrian occupancy and the ambient schedule;
//! 2. every controller maps its reading to a new [`ActuatorCommand`]; all
//!    controllers see the same pre-tick state;
//! 3. active pedestrians step one edge along their route when the pole they
//!    stand at is bright enough under the new light levels;
//! 4. energy and trip counters accumulate;
//! 5. the tick advances.
//!
//! Listening is governed by the `listen` actuator in effect when the tick
//! starts, i.e. the value set on the previous tick (true before the first).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{compute_metrics, FitnessWeights, RawTotals, SimulationMetrics};
use crate::scenario::{PersonId, PoleId, ScenarioSpec, ValidationError};

pub const TICKS_SINCE_MOTION_MAX: u8 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorReading {
    pub ambient: f64,
    pub motion: bool,
    /// Strongest neighbor broadcast from the previous tick; 0 when not listening.
    pub signal: f64,
    /// Own lamp level set on the previous tick.
    pub current_light: f64,
    pub ticks_since_motion: u8,
    pub tick: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorCommand {
    pub light: f64,
    pub listen: bool,
    pub broadcast: f64,
}

impl ActuatorCommand {
    /// Actuator state before any controller has run.
    pub const INITIAL: ActuatorCommand = ActuatorCommand {
        light: 0.0,
        listen: true,
        broadcast: 0.0,
    };

    pub fn clamped(self) -> Self {
        Self {
            light: clamp_unit(self.light),
            listen: self.listen,
            broadcast: clamp_unit(self.broadcast),
        }
    }
}

impl Default for ActuatorCommand {
    fn default() -> Self {
        Self::INITIAL
    }
}

/// Clamps to [0, 1]; NaN maps to 0.
pub fn clamp_unit(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// A controller failed to produce a command.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ControllerFault(pub String);

/// Per-pole decision engine. Each pole owns one instance, so implementations
/// may keep private state across ticks.
pub trait Controller {
    fn decide(&mut self, reading: &SensorReading) -> Result<ActuatorCommand, ControllerFault>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn decide(&mut self, reading: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        (**self).decide(reading)
    }
}

/// Source of per-pole controller instances for one run.
pub trait ControllerFactory {
    type Controller: Controller;
    fn create(&self, pole: PoleId) -> Self::Controller;
}

impl<F, C> ControllerFactory for F
where
    F: Fn(PoleId) -> C,
    C: Controller,
{
    type Controller = C;
    fn create(&self, pole: PoleId) -> C {
        self(pole)
    }
}

/// Controller that ignores its input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantController(pub ActuatorCommand);

impl Controller for ConstantController {
    fn decide(&mut self, _: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        Ok(self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleTrace {
    pub pole: PoleId,
    pub reading: SensorReading,
    pub command: ActuatorCommand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonTrace {
    pub person: PersonId,
    /// Pole the person stands at after movement; `None` before their start tick.
    pub position: Option<PoleId>,
    pub moved: bool,
    pub finished: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickTrace {
    pub tick: u32,
    pub poles: Vec<PoleTrace>,
    pub people: Vec<PersonTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub metrics: SimulationMetrics,
    pub totals: RawTotals,
    pub trace: Option<Vec<TickTrace>>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ValidationError),
    #[error("controller at pole {pole} failed on tick {tick}: {fault}")]
    Controller {
        tick: u32,
        pole: PoleId,
        fault: ControllerFault,
    },
}

#[derive(Debug, Clone, Copy)]
enum Walker {
    Waiting,
    /// Index into the person's route.
    Walking(usize),
    Arrived,
}

pub fn run_simulation<F: ControllerFactory>(
    scenario: &ScenarioSpec,
    factory: &F,
    weights: &FitnessWeights,
    trace: bool,
) -> Result<SimulationOutcome, SimError> {
    let layout = scenario.layout()?;
    let n_poles = scenario.poles.len();

    let mut controllers: Vec<F::Controller> =
        scenario.poles.iter().map(|p| factory.create(p.id)).collect();
    let mut state = vec![ActuatorCommand::INITIAL; n_poles];
    let mut idle = vec![TICKS_SINCE_MOTION_MAX; n_poles];
    let mut walkers = vec![Walker::Waiting; scenario.people.len()];
    let mut occupancy = vec![0usize; n_poles];
    let mut readings = Vec::with_capacity(n_poles);
    let mut next = Vec::with_capacity(n_poles);
    let mut totals = RawTotals {
        n_people: scenario.people.len(),
        n_poles,
        max_ticks: scenario.max_ticks,
        ..Default::default()
    };
    let mut traces = trace.then(|| Vec::with_capacity(scenario.max_ticks as usize));

    for tick in 0..scenario.max_ticks {
        let ambient = scenario.ambient_at(tick);

        // Phase 1: sense.
        for (i, person) in scenario.people.iter().enumerate() {
            if person.start_tick == tick {
                walkers[i] = if layout.routes[i].len() == 1 {
                    Walker::Arrived
                } else {
                    Walker::Walking(0)
                };
            }
        }
        occupancy.fill(0);
        for (i, walker) in walkers.iter().enumerate() {
            if let Walker::Walking(step) = *walker {
                occupancy[layout.routes[i][step]] += 1;
            }
        }
        readings.clear();
        for pole in 0..n_poles {
            let motion = occupancy[pole] > 0;
            idle[pole] = if motion { 0 } else { idle[pole].saturating_add(1) };
            let signal = if state[pole].listen {
                layout.adjacency[pole]
                    .iter()
                    .map(|&n| state[n].broadcast)
                    .fold(0.0, f64::max)
            } else {
                0.0
            };
            readings.push(SensorReading {
                ambient,
                motion,
                signal,
                current_light: state[pole].light,
                ticks_since_motion: idle[pole],
                tick,
            });
        }

        // Phase 2: decide.
        next.clear();
        for (pole, controller) in controllers.iter_mut().enumerate() {
            let command = controller
                .decide(&readings[pole])
                .map_err(|fault| SimError::Controller {
                    tick,
                    pole: scenario.poles[pole].id,
                    fault,
                })?;
            next.push(command.clamped());
        }
        std::mem::swap(&mut state, &mut next);

        // Phases 3 and 4: move, then account.
        let mut people_trace = traces.as_ref().map(|_| Vec::with_capacity(walkers.len()));
        for (i, walker) in walkers.iter_mut().enumerate() {
            let route = &layout.routes[i];
            let mut moved = false;
            if let Walker::Walking(step) = *walker {
                totals.active_ticks += 1;
                let brightness = clamp_unit(ambient + state[route[step]].light);
                if brightness >= scenario.movement_threshold {
                    moved = true;
                    *walker = if step + 1 == route.len() - 1 {
                        totals.finished += 1;
                        Walker::Arrived
                    } else {
                        Walker::Walking(step + 1)
                    };
                }
            }
            if let Some(people) = people_trace.as_mut() {
                let position = match *walker {
                    Walker::Waiting => None,
                    Walker::Walking(step) => Some(route[step]),
                    Walker::Arrived => route.last().copied(),
                };
                people.push(PersonTrace {
                    person: scenario.people[i].id,
                    position: position.map(|idx| scenario.poles[idx].id),
                    moved,
                    finished: matches!(walker, Walker::Arrived),
                });
            }
        }
        totals.light_sum += state.iter().map(|c| c.light).sum::<f64>();

        if let (Some(traces), Some(people)) = (traces.as_mut(), people_trace) {
            traces.push(TickTrace {
                tick,
                poles: scenario
                    .poles
                    .iter()
                    .zip(readings.iter().zip(state.iter()))
                    .map(|(pole, (reading, command))| PoleTrace {
                        pole: pole.id,
                        reading: *reading,
                        command: *command,
                    })
                    .collect(),
                people,
            });
        }
    }

    // People whose origin equals their destination arrive without walking.
    totals.finished += scenario
        .people
        .iter()
        .zip(&layout.routes)
        .filter(|(_, route)| route.len() == 1)
        .count();

    let metrics = SimulationMetrics::from_percentages(compute_metrics(&totals), weights);
    Ok(SimulationOutcome {
        metrics,
        totals,
        trace: traces,
    })
}
