//! Canonical text form: one statement per line, two-space indentation,
//! single spaces around operators, and only the parentheses the tree needs.

use super::ast::*;

pub fn format_program(p: &RuleProgram) -> String {
    let mut lines = Vec::new();
    block(&p.statements, 0, &mut lines);
    lines.join("\n")
}

/// Shortest decimal that parses back to the same value.
pub fn format_number(x: f64) -> String {
    format!("{x:?}")
}

fn block(stmts: &[Statement], indent: usize, out: &mut Vec<String>) {
    let pad = "  ".repeat(indent);
    for s in stmts {
        match s {
            Statement::Assign { target, value, .. } => {
                out.push(format!("{pad}{} = {}", target_text(target), expr(value)));
            }
            Statement::If {
                cond: c,
                then_block,
                else_block,
                ..
            } => {
                out.push(format!("{pad}if {} then", cond(c)));
                block(then_block, indent + 1, out);
                if let Some(e) = else_block {
                    out.push(format!("{pad}else"));
                    block(e, indent + 1, out);
                }
                out.push(format!("{pad}end"));
            }
        }
    }
}

fn target_text(t: &Target) -> String {
    match t {
        Target::Actuator(a) => a.name().to_string(),
        Target::Memory(name) => format!("mem.{name}"),
        Target::Invalid(name) => name.clone(),
    }
}

fn expr_prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        _ => 3,
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Number(x) => format_number(*x),
        Expr::Sensor(s) => s.name().to_string(),
        Expr::Memory(name) => format!("mem.{name}"),
        Expr::Unknown { name, .. } => name.clone(),
        Expr::Neg(inner) => {
            if expr_prec(inner) < 3 {
                format!("-({})", expr(inner))
            } else {
                format!("-{}", expr(inner))
            }
        }
        Expr::Binary(op, l, r) => {
            let prec = expr_prec(e);
            let left = wrap(expr(l), expr_prec(l) < prec);
            // Operators are left-associative: an equal-precedence right child was parenthesised.
            let right = wrap(expr(r), expr_prec(r) <= prec);
            format!("{left} {} {right}", op.symbol())
        }
    }
}

fn cond_prec(c: &Cond) -> u8 {
    match c {
        Cond::Or(..) => 1,
        Cond::And(..) => 2,
        _ => 3,
    }
}

pub fn cond(c: &Cond) -> String {
    match c {
        Cond::Motion => "motion".to_string(),
        Cond::Compare(op, l, r) => format!("{} {} {}", expr(l), op.symbol(), expr(r)),
        Cond::Not(inner) => match **inner {
            Cond::Motion | Cond::Compare(..) => format!("not {}", cond(inner)),
            _ => format!("not ({})", cond(inner)),
        },
        Cond::And(l, r) | Cond::Or(l, r) => {
            let prec = cond_prec(c);
            let word = if prec == 1 { "or" } else { "and" };
            let left = wrap(cond(l), cond_prec(l) < prec);
            let right = wrap(cond(r), cond_prec(r) <= prec);
            format!("{left} {word} {right}")
        }
    }
}

fn wrap(text: String, paren: bool) -> String {
    if paren {
        format!("({text})")
    } else {
        text
    }
}
