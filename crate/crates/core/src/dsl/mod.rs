//! The rule language controllers are written in.
//!
//! Programs are sequences of assignments and `if ... then ... [else ...] end`
//! blocks over the pole's sensors (`ambient`, `motion`, `signal`, `light`,
//! `ticks_since_motion`, `tick`) and per-pole memory (`mem.<name>`). They
//! assign the actuators `light`, `listen` and `broadcast`. Evaluation is
//! total; see [`interp`].

pub mod ast;
pub mod builtins;
pub mod format;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod validate;

use thiserror::Error;

pub use ast::RuleProgram;
pub use builtins::{builtin_program, builtin_source, BUILTIN_PROGRAMS};
pub use format::format_program;
pub use interp::{evaluate, EvalContext, RuleController};
pub use lexer::{tokenize, LexError, Token, TokenKind};
pub use parser::{parse, ParseError};
pub use validate::{validate, Diagnostic, Severity};

/// Grammar reference, as handed to program authors.
pub const GRAMMAR: &str = r#"program    := { statement } ;
statement  := assignment | if_stmt ;
assignment := target "=" expr ;
target     := "light" | "listen" | "broadcast" | "mem" "." ident ;
if_stmt    := "if" cond "then" { statement } [ "else" { statement } ] "end" ;
cond       := or_cond ;
or_cond    := and_cond { "or" and_cond } ;
and_cond   := not_cond { "and" not_cond } ;
not_cond   := [ "not" ] ( comparison | "(" cond ")" | "motion" ) ;
comparison := expr ( "<" | "<=" | ">" | ">=" | "==" | "!=" ) expr ;
expr       := term { ( "+" | "-" ) term } ;
term       := factor { ( "*" | "/" ) factor } ;
factor     := number | sensor | "mem" "." ident | "(" expr ")" | "-" factor ;
sensor     := "ambient" | "motion" | "signal" | "light" | "ticks_since_motion" | "tick" ;"#;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("lexical error: {0}")]
    Lex(#[from] LexError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("invalid program: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown baseline controller '{0}'")]
    UnknownBaseline(String),
}

impl SourceError {
    /// The failure as diagnostics with source positions.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            SourceError::Lex(e) => vec![Diagnostic::error(e.message.clone(), Some(e.pos))],
            SourceError::Parse(e) => vec![Diagnostic::error(e.message.clone(), Some(e.pos))],
            SourceError::Invalid(d) => d.clone(),
            SourceError::UnknownBaseline(name) => {
                vec![Diagnostic::error(format!("unknown baseline controller '{name}'"), None)]
            }
        }
    }
}

/// Tokenize and parse, without validation.
pub fn parse_source(src: &str) -> Result<RuleProgram, SourceError> {
    Ok(parse(&tokenize(src)?)?)
}

/// Tokenize, parse and validate; fails on any error-level diagnostic.
/// Returns the program with its warnings.
pub fn compile(src: &str) -> Result<(RuleProgram, Vec<Diagnostic>), SourceError> {
    let program = parse_source(src)?;
    let diagnostics = validate(&program);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(SourceError::Invalid(diagnostics));
    }
    Ok((program, diagnostics))
}
