//! Language-model-in-the-loop controller synthesis.
//!
//! A model is given the problem statement and the rule-language reference,
//! answers with a rationale and a fenced program, and gets the program's
//! simulated metrics back until the fitness threshold is reached. Every
//! exchange is kept in a [`Transcript`].

pub mod driver;
pub mod extract;
pub mod http;
pub mod prompt;
pub mod provider;
pub mod transcript;

pub use driver::{run_loop, CalibrationStub, EvalError, LoopError, ProgramEvaluator, SimulationEvaluator, KICKOFF};
pub use extract::{extract_program, ExtractError, Extraction};
pub use http::HttpProvider;
pub use prompt::{
    build_feedback_prompt, build_initial_prompt, build_repair_prompt, default_dsl_reference, describe_scenario,
    PromptError,
};
pub use provider::{ChatMessage, ChatRequest, ChatResponse, Provider, ProviderError, ReplayProvider, Role};
pub use transcript::{
    IterationRecord, JsonlSink, LoopConfig, LoopStatus, Outcome, Transcript, TranscriptLine, TranscriptSink,
};
