use std::sync::Arc;

use lumenloop_core::dsl::{builtin_program, format_program, parse_source};
use lumenloop_core::metrics::{FitnessWeights, SimulationMetrics};
use lumenloop_core::{builtin_scenario, simulate_program};
use lumenloop_llm::prompt::render_metrics;
use lumenloop_llm::{
    build_initial_prompt, default_dsl_reference, describe_scenario, run_loop, CalibrationStub, ChatRequest,
    ChatResponse, JsonlSink, LoopConfig, LoopStatus, Outcome, Provider, ProviderError, ReplayProvider, Role,
    SimulationEvaluator, Transcript, KICKOFF,
};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn system_prompt() -> String {
    let s = builtin_scenario("scenario1").unwrap();
    build_initial_prompt(&describe_scenario(&s, &FitnessWeights::default()), &default_dsl_reference()).unwrap()
}

fn replay(name: &str) -> ReplayProvider {
    ReplayProvider::from_jsonl(&fixture(name)).unwrap()
}

fn cfg(max_iterations: u32) -> LoopConfig {
    LoopConfig {
        provider: "replay".into(),
        max_iterations,
        ..Default::default()
    }
}

#[test]
fn three_iterations_reach_threshold() {
    let mut provider = replay("three_iter.jsonl");
    let t = run_loop(&cfg(10), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    assert_eq!(t.status, LoopStatus::ThresholdMet);
    let outcomes: Vec<Outcome> = t.records.iter().map(|r| r.outcome).collect();
    assert_eq!(outcomes, [Outcome::BelowThreshold, Outcome::BelowThreshold, Outcome::Accepted]);
    let fitness: Vec<f64> = t.records.iter().map(|r| r.metrics.unwrap().fitness).collect();
    assert_eq!(fitness, [29.49, 61.2, 62.44]);
    assert_eq!(t.records.iter().map(|r| r.index).collect::<Vec<_>>(), [1, 2, 3]);

    assert_eq!(provider.received.len(), 3);
    assert_eq!(provider.received[0].messages[0].role, Role::System);
    assert_eq!(provider.received[0].messages[0].content, system_prompt());
    assert_eq!(provider.received[0].messages[1].content, KICKOFF);
    for i in 1..3 {
        let sent = &provider.received[i].messages[1].content;
        let prev = &t.records[i - 1];
        assert!(sent.contains(&render_metrics(&prev.metrics.unwrap())), "{sent}");
        assert!(sent.contains(prev.program.as_deref().unwrap()));
        assert_eq!(sent, &t.records[i].prompt);
    }
    assert!(provider.received[1].messages[1].content.contains("fitness: 29.49"));
    assert!(provider.received[2].messages[1].content.contains("fitness: 61.20"));
}

#[test]
fn rationale_and_block_reassemble() {
    let mut provider = replay("three_iter.jsonl");
    let t = run_loop(&cfg(10), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    for r in &t.records {
        assert_eq!(r.reassemble(), r.raw_response);
        assert!(!r.rationale.contains("```"));
        let canonical = format_program(&parse_source(r.program.as_deref().unwrap()).unwrap());
        assert_eq!(r.program.as_deref(), Some(canonical.as_str()));
    }
    assert!(t.records[0].rationale.starts_with("Strategy:"));
}

#[test]
fn one_good_answer_stops_immediately() {
    let program = parse_source("light = 1").unwrap();
    let stub = CalibrationStub::new().with(
        program,
        SimulationMetrics {
            energy_pct: 0.0,
            people_pct: 100.0,
            trip_pct: 1.0,
            fitness: 99.0,
        },
    );
    let mut provider = ReplayProvider::new(vec!["Easy.\n```controller\nlight = 1\n```".into()]).unwrap();
    let t = run_loop(&cfg(10), &mut provider, &stub, &system_prompt(), None).unwrap();
    assert_eq!(t.records.len(), 1);
    assert_eq!(t.status, LoopStatus::ThresholdMet);
    assert_eq!(t.accepted().unwrap().index, 1);
}

#[test]
fn threshold_is_inclusive() {
    let mut provider = replay("three_iter.jsonl");
    let c = LoopConfig {
        fitness_threshold: 61.2,
        ..cfg(10)
    };
    let t = run_loop(&c, &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    assert_eq!(t.records.len(), 2);
    assert_eq!(t.status, LoopStatus::ThresholdMet);
}

#[test]
fn malformed_answer_is_repaired() {
    let mut provider = replay("repair.jsonl");
    let t = run_loop(&cfg(10), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    let r = &t.records[0];
    assert_eq!(r.repair_attempts, 1);
    assert!(r.program.is_some());
    assert_eq!(r.outcome, Outcome::Accepted);
    let repair = &r.repairs[0];
    assert!(repair.diagnostics[0].message.contains("then"), "{:?}", repair.diagnostics);
    assert_eq!(repair.diagnostics[0].position.map(|p| p.0), Some(2));
    assert_eq!(provider.received[1].messages[1].content, repair.repair_prompt);
    assert!(repair.repair_prompt.contains("line 2"));
    assert!(!repair.repair_prompt.contains("fitness"));
}

#[test]
fn answers_without_code_exhaust_repairs() {
    let mut provider = replay("no_block.jsonl");
    let t = run_loop(&cfg(1), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    let r = &t.records[0];
    assert_eq!(r.outcome, Outcome::ParseFailed);
    assert_eq!(r.repair_attempts, 2);
    assert!(r.program.is_none() && r.metrics.is_none());
    assert_eq!(r.reassemble(), r.raw_response);
    assert_eq!(t.status, LoopStatus::IterationBudgetExhausted);
    assert_eq!(provider.received.len(), 3);
}

#[test]
fn feedback_after_parse_failure_uses_last_scored_record() {
    let mut script: Vec<String> = Vec::new();
    let three: Vec<serde_json::Value> = fixture("three_iter.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    script.push(three[0]["content"].as_str().unwrap().into());
    script.extend(["no code", "still none", "nothing"].map(String::from));
    script.push(three[1]["content"].as_str().unwrap().into());
    let mut provider = ReplayProvider::new(script).unwrap();
    let t = run_loop(&cfg(3), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    let outcomes: Vec<Outcome> = t.records.iter().map(|r| r.outcome).collect();
    assert_eq!(outcomes, [Outcome::BelowThreshold, Outcome::ParseFailed, Outcome::BelowThreshold]);
    assert_eq!(t.records[1].prompt, t.records[2].prompt);
    assert!(t.records[2].prompt.contains("iteration 1"));
    assert_eq!(t.status, LoopStatus::IterationBudgetExhausted);
}

#[test]
fn low_score_exhausts_budget() {
    let mut provider = replay("low_score.jsonl");
    let t = run_loop(&cfg(1), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    assert_eq!(t.status, LoopStatus::IterationBudgetExhausted);
    assert_eq!(t.records.len(), 1);
    assert!(t.accepted().is_none());
    assert_eq!(t.best().unwrap().index, 1);
}

#[test]
fn running_out_of_script_is_a_provider_failure() {
    let mut provider = replay("low_score.jsonl");
    let t = run_loop(&cfg(3), &mut provider, &CalibrationStub::reference(), &system_prompt(), None).unwrap();
    assert_eq!(t.status, LoopStatus::ProviderFailure);
    assert_eq!(t.records.len(), 1);
    assert!(t.failure.unwrap().contains("exhausted"));
}

struct Chatterbox(u64);

impl Provider for Chatterbox {
    fn complete(&mut self, _: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.0 += 1;
        Ok(ChatResponse::text("no program here"))
    }
}

#[test]
fn provider_calls_are_bounded() {
    for (iters, repairs) in [(1, 0), (3, 2), (4, 5)] {
        let c = LoopConfig {
            max_iterations: iters,
            max_repair_attempts: repairs,
            ..cfg(1)
        };
        let mut p = Chatterbox(0);
        let t = run_loop(&c, &mut p, &CalibrationStub::new(), "problem", None).unwrap();
        assert_eq!(p.0, c.max_requests());
        assert_eq!(t.records.len(), iters as usize);
    }
}

fn normalized(mut t: Transcript) -> String {
    t.header.created_unix = 0;
    t.to_jsonl()
}

#[test]
fn replay_transcripts_are_reproducible() {
    let run = || {
        let mut sink = JsonlSink::new(Vec::new());
        let t = run_loop(
            &cfg(10),
            &mut replay("three_iter.jsonl"),
            &CalibrationStub::reference(),
            &system_prompt(),
            Some(&mut sink),
        )
        .unwrap();
        let written = String::from_utf8(sink.into_inner()).unwrap();
        assert_eq!(written, t.to_jsonl());
        assert_eq!(Transcript::from_jsonl(&written).unwrap(), t);
        normalized(t)
    };
    assert_eq!(run(), run());
}

#[test]
fn simulation_evaluator_matches_direct_run() {
    let scenario = builtin_scenario("scenario1").unwrap();
    let evaluator = SimulationEvaluator {
        scenario: scenario.clone(),
        weights: FitnessWeights::default(),
    };
    let mut provider = replay("three_iter.jsonl");
    let c = LoopConfig {
        fitness_threshold: 1e9,
        ..cfg(3)
    };
    let t = run_loop(&c, &mut provider, &evaluator, &system_prompt(), None).unwrap();
    assert_eq!(t.records.len(), 3);
    for (r, name) in t.records.iter().zip(["iteration1", "iteration2", "iteration3"]) {
        let p = Arc::new(builtin_program(name).unwrap());
        let direct = simulate_program(&scenario, &p, &FitnessWeights::default(), false).unwrap().metrics;
        assert_eq!(r.metrics.unwrap(), direct, "{name}");
    }
}

#[test]
fn invalid_config_is_rejected() {
    let c = LoopConfig {
        max_iterations: 0,
        ..cfg(1)
    };
    let mut provider = replay("low_score.jsonl");
    assert!(run_loop(&c, &mut provider, &CalibrationStub::reference(), "p", None).is_err());
    assert!(provider.received.is_empty());
}
