use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::format::format_program;
use super::lexer::tokenize;

pub const MAX_EXPR_DEPTH: usize = 64;
pub const MAX_PROGRAM_TOKENS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// (line, column), when the problem can be pinned to a place in the source.
    pub position: Option<(u32, u32)>,
}

impl Diagnostic {
    pub fn error(message: impl Into<String>, pos: Option<Pos>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
            position: pos.map(|p| (p.line, p.column)),
        }
    }

    fn warning(message: impl Into<String>, pos: Pos) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
            position: Some((pos.line, pos.column)),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match self.position {
            Some((line, col)) => write!(f, "{level} at line {line}, column {col}: {}", self.message),
            None => write!(f, "{level}: {}", self.message),
        }
    }
}

/// Static checks on a parsed program. Errors make a program unusable;
/// warnings describe behaviour the runtime silently corrects.
pub fn validate(p: &RuleProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_block(&p.statements, &mut out);
    // Token count of the canonical rendering bounds program size.
    let size = tokenize(&format_program(p)).map_or(usize::MAX, |t| t.len());
    if size > MAX_PROGRAM_TOKENS {
        out.push(Diagnostic::error(
            format!("program has {size} tokens; the limit is {MAX_PROGRAM_TOKENS}"),
            None,
        ));
    }
    out
}

fn check_block(stmts: &[Statement], out: &mut Vec<Diagnostic>) {
    for s in stmts {
        match s {
            Statement::Assign { target, value, pos } => {
                match target {
                    Target::Invalid(name) if Sensor::from_name(name).is_some() => out.push(
                        Diagnostic::error(format!("cannot assign to sensor '{name}'"), Some(*pos)),
                    ),
                    Target::Invalid(name) => out.push(Diagnostic::error(
                        format!("unknown identifier '{name}' cannot be assigned"),
                        Some(*pos),
                    )),
                    Target::Actuator(a) => {
                        if let Some(c) = constant(value).filter(|c| !(0.0..=1.0).contains(c)) {
                            out.push(Diagnostic::warning(
                                format!(
                                    "constant {c} assigned to {} is outside [0, 1] and will be clamped at runtime",
                                    a.name()
                                ),
                                *pos,
                            ));
                        }
                    }
                    Target::Memory(_) => {}
                }
                check_expr(value, *pos, out);
            }
            Statement::If {
                cond,
                then_block,
                else_block,
                pos,
            } => {
                if cond.depth() > MAX_EXPR_DEPTH {
                    out.push(Diagnostic::error(
                        format!("condition nests deeper than {MAX_EXPR_DEPTH} levels"),
                        Some(*pos),
                    ));
                }
                check_cond(cond, *pos, out);
                check_block(then_block, out);
                if let Some(e) = else_block {
                    check_block(e, out);
                }
            }
        }
    }
}

fn constant(e: &Expr) -> Option<f64> {
    match e {
        Expr::Number(x) => Some(*x),
        Expr::Neg(inner) => constant(inner).map(|x| -x),
        _ => None,
    }
}

fn check_expr(e: &Expr, stmt_pos: Pos, out: &mut Vec<Diagnostic>) {
    if e.depth() > MAX_EXPR_DEPTH {
        out.push(Diagnostic::error(
            format!("expression nests deeper than {MAX_EXPR_DEPTH} levels"),
            Some(stmt_pos),
        ));
    }
    unknowns(e, out);
}

fn unknowns(e: &Expr, out: &mut Vec<Diagnostic>) {
    match e {
        Expr::Unknown { name, pos } => {
            let hint = match name.as_str() {
                "listen" | "broadcast" => " (actuators cannot be read)",
                _ => "",
            };
            out.push(Diagnostic::error(
                format!("unknown identifier '{name}'{hint}"),
                Some(*pos),
            ));
        }
        Expr::Neg(inner) => unknowns(inner, out),
        Expr::Binary(_, l, r) => {
            unknowns(l, out);
            unknowns(r, out);
        }
        _ => {}
    }
}

fn check_cond(c: &Cond, stmt_pos: Pos, out: &mut Vec<Diagnostic>) {
    match c {
        Cond::Motion => {}
        Cond::Compare(_, l, r) => {
            unknowns(l, out);
            unknowns(r, out);
        }
        Cond::Not(inner) => check_cond(inner, stmt_pos, out),
        Cond::And(l, r) | Cond::Or(l, r) => {
            check_cond(l, stmt_pos, out);
            check_cond(r, stmt_pos, out);
        }
    }
}
