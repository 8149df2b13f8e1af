//! The prompt / extract / simulate / feedback loop.

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use lumenloop_core::dsl::{builtin_program, format_program, RuleProgram};
use lumenloop_core::metrics::{FitnessWeights, SimulationMetrics, REFERENCE_ROWS};
use lumenloop_core::scenario::ScenarioSpec;
use lumenloop_core::sim::SimError;
use lumenloop_core::simulate_program;
use thiserror::Error;

use crate::extract::extract_program;
use crate::prompt::{build_feedback_prompt, build_repair_prompt, PromptError};
use crate::provider::{ChatRequest, Provider};
use crate::transcript::{
    ConfigError, IterationRecord, LoopConfig, LoopStatus, Outcome, RepairExchange, Transcript, TranscriptEnd,
    TranscriptHeader, TranscriptLine, TranscriptSink, FEEDBACK_CONTEXT,
};

/// User message for the first iteration.
pub const KICKOFF: &str = "Design the controller now. Explain your strategy first, then give the complete program as exactly one fenced code block labelled `controller`.\n";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error("the calibration stub has no score for this program:\n{0}")]
    Unscored(String),
}

/// Scores a compiled program.
pub trait ProgramEvaluator {
    fn evaluate(&self, program: &RuleProgram) -> Result<SimulationMetrics, EvalError>;
}

/// Runs the program on a scenario.
#[derive(Debug, Clone)]
pub struct SimulationEvaluator {
    pub scenario: ScenarioSpec,
    pub weights: FitnessWeights,
}

impl ProgramEvaluator for SimulationEvaluator {
    fn evaluate(&self, program: &RuleProgram) -> Result<SimulationMetrics, EvalError> {
        let p = Arc::new(program.clone());
        Ok(simulate_program(&self.scenario, &p, &self.weights, false)?.metrics)
    }
}

/// Fixed program-to-metrics table, so loop control can be exercised
/// independently of what the simulator scores.
#[derive(Debug, Clone, Default)]
pub struct CalibrationStub {
    entries: Vec<(RuleProgram, SimulationMetrics)>,
}

impl CalibrationStub {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, program: RuleProgram, metrics: SimulationMetrics) -> Self {
        self.entries.push((program, metrics));
        self
    }

    /// The three built-in iteration programs bound to the published
    /// small-scenario rows, fitness included verbatim.
    pub fn reference() -> Self {
        ["iteration1", "iteration2", "iteration3"]
            .iter()
            .zip(&REFERENCE_ROWS[..3])
            .fold(Self::new(), |stub, (name, (_, row))| {
                stub.with(
                    builtin_program(name).expect("built-in parses"),
                    SimulationMetrics {
                        energy_pct: row.energy,
                        people_pct: row.people,
                        trip_pct: row.trip,
                        fitness: row.fitness,
                    },
                )
            })
    }
}

impl ProgramEvaluator for CalibrationStub {
    fn evaluate(&self, program: &RuleProgram) -> Result<SimulationMetrics, EvalError> {
        self.entries
            .iter()
            .find(|(p, _)| p == program)
            .map(|(_, m)| *m)
            .ok_or_else(|| EvalError::Unscored(format_program(program)))
    }
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error("invalid loop configuration: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] EvalError),
    #[error("could not write transcript: {0}")]
    TranscriptWrite(#[from] std::io::Error),
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Runs the loop until the threshold is met, the iteration budget runs out,
/// or the provider fails. `system_prompt` is the problem statement sent as
/// the first message of every request. Lines go to `sink` as they are made.
pub fn run_loop(
    cfg: &LoopConfig,
    provider: &mut dyn Provider,
    evaluator: &dyn ProgramEvaluator,
    system_prompt: &str,
    mut sink: Option<&mut dyn TranscriptSink>,
) -> Result<Transcript, LoopError> {
    cfg.validate()?;
    let header = TranscriptHeader {
        config: cfg.clone(),
        feedback_context: FEEDBACK_CONTEXT.to_string(),
        system_prompt: system_prompt.to_string(),
        created_unix: now_unix(),
    };
    let mut emit = |line: TranscriptLine| -> Result<TranscriptLine, LoopError> {
        if let Some(s) = sink.as_deref_mut() {
            s.write_line(&line)?;
        }
        Ok(line)
    };
    emit(TranscriptLine::Header(header.clone()))?;

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut status = LoopStatus::IterationBudgetExhausted;
    let mut failure = None;

    'iterations: for index in 1..=cfg.max_iterations {
        // After a parse failure, feedback refers to the latest record that was scored.
        let prompt = match records.iter().rev().find(|r| r.metrics.is_some()) {
            Some(prev) => build_feedback_prompt(prev, cfg.fitness_threshold)?,
            None => KICKOFF.to_string(),
        };
        let mut message = prompt.clone();
        let mut repairs = Vec::new();
        let (raw, extracted) = loop {
            let request = ChatRequest::new(&cfg.model, cfg.temperature, system_prompt, &message);
            let response = match provider.complete(&request) {
                Ok(r) => r,
                Err(e) => {
                    status = LoopStatus::ProviderFailure;
                    failure = Some(e.to_string());
                    break 'iterations;
                }
            };
            match extract_program(&response.content) {
                Ok(x) => break (response.content, Ok(x)),
                Err(err) if (repairs.len() as u32) < cfg.max_repair_attempts => {
                    let diagnostics = err.diagnostics();
                    message = build_repair_prompt(&response.content, &diagnostics)?;
                    repairs.push(RepairExchange {
                        rejected_response: response.content,
                        diagnostics,
                        repair_prompt: message.clone(),
                    });
                }
                Err(err) => break (response.content, Err(err)),
            }
        };

        let record = match extracted {
            Ok(x) => {
                let metrics = evaluator.evaluate(&x.program)?;
                let accepted = metrics.fitness >= cfg.fitness_threshold;
                IterationRecord {
                    index,
                    prompt,
                    rationale: x.rationale,
                    code_block: Some(x.block),
                    block_offset: Some(x.block_offset),
                    program: Some(format_program(&x.program)),
                    warnings: x.warnings,
                    diagnostics: vec![],
                    metrics: Some(metrics),
                    repair_attempts: repairs.len() as u32,
                    repairs,
                    outcome: if accepted { Outcome::Accepted } else { Outcome::BelowThreshold },
                    raw_response: raw,
                }
            }
            Err(err) => {
                let block = crate::extract::find_last_block(&raw).map(|b| (b.start, b.end));
                let (rationale, code_block, block_offset) = match block {
                    Some((s, e)) => (
                        format!("{}{}", &raw[..s], &raw[e..]),
                        Some(raw[s..e].to_string()),
                        Some(s),
                    ),
                    None => (raw.clone(), None, None),
                };
                IterationRecord {
                    index,
                    prompt,
                    rationale,
                    code_block,
                    block_offset,
                    program: None,
                    warnings: vec![],
                    diagnostics: err.diagnostics(),
                    metrics: None,
                    repair_attempts: repairs.len() as u32,
                    repairs,
                    outcome: Outcome::ParseFailed,
                    raw_response: raw,
                }
            }
        };
        let done = record.outcome == Outcome::Accepted;
        emit(TranscriptLine::Iteration(record.clone()))?;
        records.push(record);
        if done {
            status = LoopStatus::ThresholdMet;
            break;
        }
    }

    emit(TranscriptLine::End(TranscriptEnd {
        status,
        failure: failure.clone(),
    }))?;
    Ok(Transcript {
        header,
        records,
        status,
        failure,
    })
}
