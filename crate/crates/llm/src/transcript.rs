//! Loop configuration, per-iteration records and the JSONL transcript.

use std::io::{self, Write};

use lumenloop_core::dsl::Diagnostic;
use lumenloop_core::metrics::SimulationMetrics;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What each request tells the model about earlier iterations.
pub const FEEDBACK_CONTEXT: &str = "problem statement + latest program + latest metrics";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    pub fitness_threshold: f64,
    pub max_iterations: u32,
    pub max_repair_attempts: u32,
    /// `http` or `replay`.
    pub provider: String,
    pub model: String,
    pub temperature: f64,
    pub request_timeout_secs: u64,
    pub scenario: String,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            fitness_threshold: 62.0,
            max_iterations: 10,
            max_repair_attempts: 2,
            provider: "http".into(),
            model: "gpt-4".into(),
            temperature: 0.7,
            request_timeout_secs: 120,
            scenario: "scenario1".into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("fitness_threshold must be finite")]
    Threshold,
    #[error("temperature must be a finite non-negative number")]
    Temperature,
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_iterations == 0 {
            return Err(ConfigError::NoIterations);
        }
        if !self.fitness_threshold.is_finite() {
            return Err(ConfigError::Threshold);
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(ConfigError::Temperature);
        }
        Ok(())
    }

    /// Upper bound on provider calls for one loop.
    pub fn max_requests(&self) -> u64 {
        u64::from(self.max_iterations) * (1 + u64::from(self.max_repair_attempts))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Accepted,
    BelowThreshold,
    ParseFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopStatus {
    ThresholdMet,
    IterationBudgetExhausted,
    ProviderFailure,
}

/// A response that could not be compiled, and the repair request it caused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairExchange {
    pub rejected_response: String,
    pub diagnostics: Vec<Diagnostic>,
    pub repair_prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u32,
    /// User message that opened the iteration.
    pub prompt: String,
    /// Final response of the iteration (after any repairs).
    pub raw_response: String,
    /// `raw_response` without the code block.
    pub rationale: String,
    pub code_block: Option<String>,
    /// Byte offset of `code_block` in `raw_response`.
    pub block_offset: Option<usize>,
    /// Canonical form.
    pub program: Option<String>,
    pub warnings: Vec<Diagnostic>,
    /// Why the last response was rejected, for parse failures.
    pub diagnostics: Vec<Diagnostic>,
    pub metrics: Option<SimulationMetrics>,
    pub repair_attempts: u32,
    pub repairs: Vec<RepairExchange>,
    pub outcome: Outcome,
}

impl IterationRecord {
    /// Puts the code block back into the rationale.
    pub fn reassemble(&self) -> String {
        let mut text = self.rationale.clone();
        if let (Some(block), Some(at)) = (&self.code_block, self.block_offset) {
            text.insert_str(at, block);
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub config: LoopConfig,
    pub feedback_context: String,
    pub system_prompt: String,
    pub created_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEnd {
    pub status: LoopStatus,
    pub failure: Option<String>,
}

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TranscriptLine {
    Header(TranscriptHeader),
    Iteration(IterationRecord),
    End(TranscriptEnd),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub records: Vec<IterationRecord>,
    pub status: LoopStatus,
    pub failure: Option<String>,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("transcript has no header line")]
    MissingHeader,
    #[error("transcript has no end line")]
    Incomplete,
}

impl Transcript {
    pub fn lines(&self) -> Vec<TranscriptLine> {
        let mut out = vec![TranscriptLine::Header(self.header.clone())];
        out.extend(self.records.iter().cloned().map(TranscriptLine::Iteration));
        out.push(TranscriptLine::End(TranscriptEnd {
            status: self.status,
            failure: self.failure.clone(),
        }));
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.lines().iter().map(|l| serde_json::to_string(l).expect("serializable") + "\n").collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut header = None;
        let mut records = Vec::new();
        let mut end = None;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: TranscriptLine = serde_json::from_str(line).map_err(|e| TranscriptError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match parsed {
                TranscriptLine::Header(h) => header = Some(h),
                TranscriptLine::Iteration(r) => records.push(r),
                TranscriptLine::End(e) => end = Some(e),
            }
        }
        let header = header.ok_or(TranscriptError::MissingHeader)?;
        let end = end.ok_or(TranscriptError::Incomplete)?;
        Ok(Self {
            header,
            records,
            status: end.status,
            failure: end.failure,
        })
    }

    pub fn accepted(&self) -> Option<&IterationRecord> {
        self.records.iter().find(|r| r.outcome == Outcome::Accepted)
    }

    /// The accepted record, else the best-scoring one.
    pub fn best(&self) -> Option<&IterationRecord> {
        self.accepted().or_else(|| {
            self.records
                .iter()
                .filter(|r| r.metrics.is_some())
                .max_by(|a, b| a.metrics.unwrap().fitness.total_cmp(&b.metrics.unwrap().fitness))
        })
    }
}

/// Receives transcript lines as the loop produces them.
pub trait TranscriptSink {
    fn write_line(&mut self, line: &TranscriptLine) -> io::Result<()>;
}

/// Writes each line as JSON and flushes immediately.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TranscriptSink for JsonlSink<W> {
    fn write_line(&mut self, line: &TranscriptLine) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, line)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_checks() {
        assert!(LoopConfig::default().validate().is_ok());
        let c = LoopConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::NoIterations));
        let c = LoopConfig {
            fitness_threshold: f64::NAN,
            ..Default::default()
        };
        assert_eq!(c.validate(), Err(ConfigError::Threshold));
        assert_eq!(LoopConfig::default().max_requests(), 30);
    }

    #[test]
    fn enum_spellings() {
        assert_eq!(serde_json::to_string(&Outcome::BelowThreshold).unwrap(), "\"below-threshold\"");
        assert_eq!(serde_json::to_string(&LoopStatus::ThresholdMet).unwrap(), "\"threshold-met\"");
    }
}
