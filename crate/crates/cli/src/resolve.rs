//! Turning scenario and controller references into runnable values.
//!
//! Built-in names win over files of the same name; a `./`, `../` or `/`
//! prefix always means a path.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use lumenloop_core::dsl::{builtin_program, builtin_source, compile, RuleProgram, Severity};
use lumenloop_core::metrics::FitnessWeights;
use lumenloop_core::neuro::{Genome, GenomeDocument, NetworkSpec, NeuralController};
use lumenloop_core::scenario::{builtin_scenario, load_scenario, PoleId, ScenarioSpec, BUILTIN_SCENARIOS};
use lumenloop_core::sim::{run_simulation, SimError, SimulationOutcome};
use lumenloop_core::simulate_program;
use serde_json::{json, Value};

fn forced_path(r: &str) -> bool {
    r.starts_with("./") || r.starts_with("../") || r.starts_with('/')
}

pub fn scenario(r: &str) -> Result<(ScenarioSpec, Value)> {
    if !forced_path(r) && BUILTIN_SCENARIOS.contains(&r) {
        return Ok((builtin_scenario(r)?, json!({ "builtin": r })));
    }
    let text = fs::read_to_string(r).with_context(|| {
        format!("'{r}' is neither a built-in scenario ({}) nor a readable file", BUILTIN_SCENARIOS.join(", "))
    })?;
    let spec = load_scenario(&text).with_context(|| format!("{r}"))?;
    Ok((spec, json!({ "file": r })))
}

#[derive(Debug, Clone)]
pub enum ControllerSource {
    Rules(Arc<RuleProgram>),
    Network(NetworkSpec, Arc<Genome>),
}

impl ControllerSource {
    pub fn simulate(&self, s: &ScenarioSpec, w: &FitnessWeights, trace: bool) -> Result<SimulationOutcome, SimError> {
        match self {
            ControllerSource::Rules(p) => simulate_program(s, p, w, trace),
            ControllerSource::Network(spec, g) => {
                let factory =
                    |_: PoleId| NeuralController::new(*spec, Arc::clone(g)).expect("genome checked on load");
                run_simulation(s, &factory, w, trace)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedController {
    pub label: String,
    pub source: ControllerSource,
    pub origin: Value,
}

/// `LABEL=REF` or a bare `REF` labelled by itself.
pub fn labelled_controller(spec: &str) -> Result<ResolvedController> {
    let (label, r) = match spec.split_once('=') {
        Some((l, r)) if !l.is_empty() && !l.contains('/') => (l, r),
        _ => (spec, spec),
    };
    let mut c = controller(r)?;
    c.label = label.to_string();
    Ok(c)
}

pub fn controller(r: &str) -> Result<ResolvedController> {
    if !forced_path(r) && builtin_source(r).is_some() {
        return Ok(ResolvedController {
            label: r.to_string(),
            source: ControllerSource::Rules(Arc::new(builtin_program(r)?)),
            origin: json!({ "builtin": r }),
        });
    }
    let text = fs::read_to_string(r).with_context(|| {
        format!("'{r}' is neither a built-in controller nor a readable rule or genome file")
    })?;
    let is_json = Path::new(r).extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    let source = if is_json {
        let doc: GenomeDocument = serde_json::from_str(&text).with_context(|| format!("{r}: malformed genome document"))?;
        let (spec, genome) = doc.into_parts().with_context(|| format!("{r}"))?;
        ControllerSource::Network(spec, Arc::new(genome))
    } else {
        match compile(&text) {
            Ok((program, warnings)) => {
                for w in warnings {
                    eprintln!("{r}: {w}");
                }
                ControllerSource::Rules(Arc::new(program))
            }
            Err(e) => {
                let lines: Vec<String> = e
                    .diagnostics()
                    .iter()
                    .filter(|d| d.severity == Severity::Error)
                    .map(|d| format!("{r}: {d}"))
                    .collect();
                bail!("{}", lines.join("\n"));
            }
        }
    };
    Ok(ResolvedController {
        label: r.to_string(),
        source,
        origin: json!({ "file": r }),
    })
}
