//! Pulling a rule program out of a model's free-text answer.

use lumenloop_core::dsl::{compile, Diagnostic, RuleProgram, SourceError};
use thiserror::Error;

/// A fenced block located in a response, as byte ranges into it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FencedBlock<'a> {
    /// Start of the opening fence line.
    pub start: usize,
    /// End of the closing fence line, excluding its newline.
    pub end: usize,
    pub info: &'a str,
    /// Text between the fences.
    pub code: &'a str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub program: RuleProgram,
    pub warnings: Vec<Diagnostic>,
    /// The response with the block cut out.
    pub rationale: String,
    /// The block including its fences.
    pub block: String,
    pub block_offset: usize,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("the response contains no fenced code block")]
    NoCodeBlock,
    #[error(transparent)]
    Source(#[from] SourceError),
}

impl ExtractError {
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            ExtractError::NoCodeBlock => vec![Diagnostic::error(
                "no fenced code block found; put the program between ```controller and ``` lines",
                None,
            )],
            ExtractError::Source(e) => e.diagnostics(),
        }
    }
}

/// Every complete ``` fenced block, in order. An unterminated fence is not a block.
pub fn find_blocks(text: &str) -> Vec<FencedBlock<'_>> {
    let mut blocks = Vec::new();
    let mut open: Option<(usize, &str, usize)> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        let trimmed = body.trim();
        match open {
            None => {
                if let Some(info) = trimmed.strip_prefix("```") {
                    open = Some((offset, info.trim(), offset + line.len()));
                }
            }
            Some((start, info, code_start)) => {
                if trimmed == "```" {
                    blocks.push(FencedBlock {
                        start,
                        end: offset + body.len(),
                        info,
                        code: &text[code_start..offset],
                    });
                    open = None;
                }
            }
        }
        offset += line.len();
    }
    blocks
}

pub fn find_last_block(text: &str) -> Option<FencedBlock<'_>> {
    find_blocks(text).pop()
}

/// Compiles the last fenced block. Diagnostic positions count from the
/// first line inside that block.
pub fn extract_program(response: &str) -> Result<Extraction, ExtractError> {
    let block = find_last_block(response).ok_or(ExtractError::NoCodeBlock)?;
    let (program, warnings) = compile(block.code)?;
    let rationale = format!("{}{}", &response[..block.start], &response[block.end..]);
    Ok(Extraction {
        program,
        warnings,
        rationale,
        block: response[block.start..block.end].to_string(),
        block_offset: block.start,
    })
}
