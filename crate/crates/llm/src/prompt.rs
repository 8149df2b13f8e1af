//! Prompt text sent to the model.
//!
//! Every builder is a pure function of its inputs, so equal inputs give
//! byte-identical prompts.

use std::fmt::Write as _;

use lumenloop_core::dsl::{Diagnostic, GRAMMAR};
use lumenloop_core::metrics::{FitnessWeights, SimulationMetrics};
use lumenloop_core::scenario::ScenarioSpec;
use thiserror::Error;

use crate::transcript::IterationRecord;

/// Info string expected on the controller's code fence.
pub const FENCE_LABEL: &str = "controller";

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("{0} must not be empty")]
    EmptyInput(&'static str),
    #[error("iteration {0} has no metrics; use a repair prompt for unparseable responses")]
    MissingMetrics(u32),
    #[error("a repair prompt needs at least one diagnostic")]
    NoDiagnostics,
}

const GOALS: &str = "\
You are writing the decision logic that runs inside every smart streetlight pole of a small street network.
Each pole decides, once per tick, how bright its lamp is, whether it listens to its neighbours and what it broadcasts to them.
Pedestrians walk pole to pole along shortest routes; a pedestrian can only step onto the next pole while that pole's lamp is at or above the movement threshold.
The aim is to spend as little lamp energy as possible while keeping the way lit, so that every pedestrian arrives and nobody waits long in the dark.";

const CONTRACT: &str = "\
Sensors (read-only, refreshed every tick):
- ambient: natural light level, 0 to 1
- motion: 1 when a pedestrian stands at this pole, else 0
- signal: strongest broadcast a neighbour sent on the previous tick, 0 to 1; always 0 unless this pole was listening
- light: this pole's own lamp level from the previous tick
- ticks_since_motion: ticks since motion was last seen here, saturating at 255
- tick: the current tick number, starting at 0

Actuators (written by the program):
- light: lamp level, clamped to 0..1
- listen: the pole hears neighbours next tick when listen >= 0.5
- broadcast: value sent to every neighbour, clamped to 0..1

Memory: mem.<name> variables are private to each pole, start at 0 and persist across ticks.";

const SEMANTICS: &str = "\
Semantics:
- The whole program runs once per pole per tick, statements in order.
- An actuator that is not assigned on a tick keeps the value it had on the previous tick (initially light 0, listen 1, broadcast 0).
- motion is 1 or 0 in arithmetic; `light` on the right-hand side of an assignment reads the light sensor.
- Division by zero yields 0 and every result is finite, so evaluation never fails.
- `#` starts a comment that runs to the end of the line.";

const OUTPUT_FORMAT: &str = "\
Answer format: first explain your strategy in plain prose, then give the complete program as exactly one fenced code block labelled `controller`, like this:

```controller
if motion then
  light = 1.0
end
```

Only the last fenced block of your answer is used.";

/// Language reference handed to the model: grammar plus semantics notes.
pub fn default_dsl_reference() -> String {
    format!("Grammar (EBNF):\n{GRAMMAR}\n\n{SEMANTICS}")
}

/// Human-readable summary of a scenario and how runs are scored.
pub fn describe_scenario(s: &ScenarioSpec, w: &FitnessWeights) -> String {
    let edges: usize = s.poles.iter().map(|p| p.neighbors.len()).sum::<usize>() / 2;
    let mut out = format!(
        "Scenario '{}': {} poles joined by {} street segments, {} pedestrians, {} ticks per run, movement threshold {}.\n",
        s.name,
        s.poles.len(),
        edges,
        s.people.len(),
        s.max_ticks,
        s.movement_threshold
    );
    for p in &s.people {
        let _ = writeln!(
            out,
            "- pedestrian {} walks from pole {} to pole {}, setting off at tick {}",
            p.id, p.origin, p.destination, p.start_tick
        );
    }
    let _ = write!(
        out,
        "Each run is scored as fitness = {} * people_pct - {} * energy_pct - {} * trip_pct, where \
energy_pct is the lamp energy used as a percentage of every lamp at full power for the whole run, \
people_pct is the percentage of pedestrians that arrive, and trip_pct is the time pedestrians spend \
under way as a percentage of the run length. Higher is better.",
        w.w_people, w.w_energy, w.w_trip
    );
    out
}

/// Problem statement, sensor contract, language reference and answer format,
/// in that order.
pub fn build_initial_prompt(scenario_description: &str, dsl_reference: &str) -> Result<String, PromptError> {
    if scenario_description.trim().is_empty() {
        return Err(PromptError::EmptyInput("scenario description"));
    }
    if dsl_reference.trim().is_empty() {
        return Err(PromptError::EmptyInput("language reference"));
    }
    Ok(format!(
        "{GOALS}\n\n{}\n\n{CONTRACT}\n\nThe controller language:\n{}\n\n{OUTPUT_FORMAT}\n",
        scenario_description.trim_end(),
        dsl_reference.trim_end()
    ))
}

/// Two-decimal rendering of the four metrics, one per line.
pub fn render_metrics(m: &SimulationMetrics) -> String {
    format!(
        "energy_pct: {:.2}\npeople_pct: {:.2}\ntrip_pct: {:.2}\nfitness: {:.2}",
        m.energy_pct, m.people_pct, m.trip_pct, m.fitness
    )
}

pub fn build_feedback_prompt(previous: &IterationRecord, threshold: f64) -> Result<String, PromptError> {
    let (Some(m), Some(program)) = (&previous.metrics, &previous.program) else {
        return Err(PromptError::MissingMetrics(previous.index));
    };
    let verdict = if m.fitness >= threshold {
        format!("This meets the target fitness of {threshold:.2}.")
    } else {
        format!(
            "The target is a fitness of at least {threshold:.2}; this controller falls short by {:.2}.",
            threshold - m.fitness
        )
    };
    Ok(format!(
        "Your previous controller (iteration {}) was run in the simulator:\n\n```{FENCE_LABEL}\n{program}\n```\n\n\
Results:\n{}\n\n{verdict}\n\
Propose an improved controller. Explain your reasoning first, then give the complete program as exactly one fenced code block labelled `{FENCE_LABEL}`.\n",
        previous.index,
        render_metrics(m)
    ))
}

/// Asks for a corrected program after `raw` failed to yield one.
pub fn build_repair_prompt(raw: &str, diagnostics: &[Diagnostic]) -> Result<String, PromptError> {
    if diagnostics.is_empty() {
        return Err(PromptError::NoDiagnostics);
    }
    let block = crate::extract::find_last_block(raw).map_or(raw, |b| b.code);
    let mut out = format!(
        "Your last answer could not be used as a controller.\n\nOffending text:\n```\n{}\n```\n\nProblems:\n",
        block.trim_end()
    );
    for (i, d) in diagnostics.iter().enumerate() {
        let _ = writeln!(out, "{}. {d}", i + 1);
    }
    let _ = write!(
        out,
        "\nLine and column numbers count from the first line inside the code block. \
Reply with the corrected program as exactly one fenced code block labelled `{FENCE_LABEL}`.\n"
    );
    Ok(out)
}
