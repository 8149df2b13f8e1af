//! Smart-streetlight simulation and controller synthesis.
//!
//! - [`scenario`] and [`sim`]: the pole graph, pedestrians and the
//!   deterministic tick loop every controller is scored in.
//! - [`metrics`]: energy / people / trip percentages and the collective
//!   fitness score.
//! - [`dsl`]: the sandboxed rule language for if-else controllers.
//! - [`neuro`]: three-layer feedforward controllers evolved by a GA.

pub mod dsl;
pub mod metrics;
pub mod neuro;
pub mod scenario;
pub mod sim;

pub use metrics::{compute_fitness, compute_metrics, derive_fitness_weights, FitnessWeights, SimulationMetrics};
pub use scenario::{builtin_scenario, load_scenario, ScenarioSpec};
pub use sim::{run_simulation, ActuatorCommand, Controller, ControllerFactory, SensorReading};

use std::sync::Arc;

/// Runs `program` on every pole of `scenario`.
pub fn simulate_program(
    scenario: &ScenarioSpec,
    program: &Arc<dsl::RuleProgram>,
    weights: &FitnessWeights,
    trace: bool,
) -> Result<sim::SimulationOutcome, sim::SimError> {
    let factory = |_| dsl::RuleController::new(Arc::clone(program));
    run_simulation(scenario, &factory, weights, trace)
}
