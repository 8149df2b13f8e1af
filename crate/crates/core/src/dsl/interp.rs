//! Total interpreter: every finite input produces a command.
//!
//! Arithmetic saturates (division by zero yields 0, NaN becomes 0, overflow
//! saturates at ±f64::MAX), so memory values stay finite. Actuators not
//! assigned on a tick keep their previous values.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::*;
use crate::sim::{clamp_unit, ActuatorCommand, Controller, ControllerFault, SensorReading};

/// Per-pole interpreter state.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalContext {
    pub memory: BTreeMap<String, f64>,
    pub previous: ActuatorCommand,
}

impl EvalContext {
    /// Fresh state: every `mem.*` name of the program at 0, default actuators.
    pub fn for_program(p: &RuleProgram) -> Self {
        Self {
            memory: p.memory_names().into_iter().map(|n| (n, 0.0)).collect(),
            previous: ActuatorCommand::INITIAL,
        }
    }
}

pub const LISTEN_THRESHOLD: f64 = 0.5;

pub fn evaluate(p: &RuleProgram, s: &SensorReading, ctx: &mut EvalContext) -> ActuatorCommand {
    let mut cmd = ctx.previous;
    run_block(&p.statements, s, ctx, &mut cmd);
    ctx.previous = cmd;
    cmd
}

fn run_block(stmts: &[Statement], s: &SensorReading, ctx: &mut EvalContext, cmd: &mut ActuatorCommand) {
    for stmt in stmts {
        match stmt {
            Statement::Assign { target, value, .. } => {
                let v = eval_expr(value, s, &ctx.memory);
                match target {
                    Target::Actuator(Actuator::Light) => cmd.light = clamp_unit(v),
                    Target::Actuator(Actuator::Broadcast) => cmd.broadcast = clamp_unit(v),
                    Target::Actuator(Actuator::Listen) => cmd.listen = v >= LISTEN_THRESHOLD,
                    Target::Memory(name) => {
                        ctx.memory.insert(name.clone(), v);
                    }
                    Target::Invalid(_) => {}
                }
            }
            Statement::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                if eval_cond(cond, s, &ctx.memory) {
                    run_block(then_block, s, ctx, cmd);
                } else if let Some(e) = else_block {
                    run_block(e, s, ctx, cmd);
                }
            }
        }
    }
}

fn saturate(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

pub fn sensor_value(sensor: Sensor, s: &SensorReading) -> f64 {
    match sensor {
        Sensor::Ambient => s.ambient,
        Sensor::Motion => {
            if s.motion {
                1.0
            } else {
                0.0
            }
        }
        Sensor::Signal => s.signal,
        Sensor::Light => s.current_light,
        Sensor::TicksSinceMotion => f64::from(s.ticks_since_motion),
        Sensor::Tick => f64::from(s.tick),
    }
}

fn eval_expr(e: &Expr, s: &SensorReading, mem: &BTreeMap<String, f64>) -> f64 {
    let v = match e {
        Expr::Number(x) => *x,
        Expr::Sensor(sensor) => sensor_value(*sensor, s),
        Expr::Memory(name) => mem.get(name).copied().unwrap_or(0.0),
        Expr::Unknown { .. } => 0.0,
        Expr::Neg(inner) => -eval_expr(inner, s, mem),
        Expr::Binary(op, l, r) => {
            let a = eval_expr(l, s, mem);
            let b = eval_expr(r, s, mem);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        0.0
                    } else {
                        a / b
                    }
                }
            }
        }
    };
    saturate(v)
}

fn eval_cond(c: &Cond, s: &SensorReading, mem: &BTreeMap<String, f64>) -> bool {
    match c {
        Cond::Motion => s.motion,
        Cond::Compare(op, l, r) => {
            let a = eval_expr(l, s, mem);
            let b = eval_expr(r, s, mem);
            match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            }
        }
        Cond::Not(inner) => !eval_cond(inner, s, mem),
        Cond::And(l, r) => eval_cond(l, s, mem) && eval_cond(r, s, mem),
        Cond::Or(l, r) => eval_cond(l, s, mem) || eval_cond(r, s, mem),
    }
}

/// A rule program driving one pole.
#[derive(Debug, Clone)]
pub struct RuleController {
    program: Arc<RuleProgram>,
    ctx: EvalContext,
}

impl RuleController {
    pub fn new(program: Arc<RuleProgram>) -> Self {
        let ctx = EvalContext::for_program(&program);
        Self { program, ctx }
    }

    pub fn context(&self) -> &EvalContext {
        &self.ctx
    }
}

impl Controller for RuleController {
    fn decide(&mut self, reading: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        Ok(evaluate(&self.program, reading, &mut self.ctx))
    }
}
