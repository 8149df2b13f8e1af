//! Test-only oracles and generators.
//!
//! Nothing here goes through the rule-language interpreter: the native
//! controllers are hand-written Rust versions of the built-in programs, used
//! to check the interpreter's actuator streams.

use lumenloop_core::dsl::ast::*;
use lumenloop_core::scenario::{AmbientStep, PersonSpec, PoleSpec, ScenarioSpec};
use lumenloop_core::sim::{ActuatorCommand, Controller, ControllerFault, SensorReading};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Hand-coded equivalent of a built-in rule program.
#[derive(Debug, Clone)]
pub struct NativeBaseline {
    kind: &'static str,
    cmd: ActuatorCommand,
    seen: f64,
}

impl NativeBaseline {
    pub fn new(kind: &str) -> Self {
        let kind = match kind {
            "always_on" => "always_on",
            "always_off" => "always_off",
            "iteration1" => "iteration1",
            "iteration2" => "iteration2",
            "iteration3" => "iteration3",
            other => panic!("no native oracle for {other}"),
        };
        Self {
            kind,
            cmd: ActuatorCommand::INITIAL,
            seen: 0.0,
        }
    }
}

impl Controller for NativeBaseline {
    fn decide(&mut self, s: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        let c = &mut self.cmd;
        match self.kind {
            "always_on" => {
                c.light = 1.0;
                c.listen = true;
                c.broadcast = 0.0;
            }
            "always_off" => {
                c.light = 0.0;
                c.listen = false;
                c.broadcast = 0.0;
            }
            "iteration1" => {
                c.listen = true;
                if s.motion {
                    c.light = 1.0;
                    c.broadcast = 1.0;
                } else {
                    c.broadcast = 0.0;
                    if s.signal > 0.5 {
                        c.light = 0.6;
                    } else if s.ticks_since_motion > 5 {
                        c.light = 0.1;
                    }
                }
            }
            "iteration2" => {
                c.listen = true;
                if s.motion {
                    c.light = 1.0;
                    c.broadcast = 1.0;
                } else {
                    c.broadcast = 0.0;
                    c.light = if s.signal > 0.5 {
                        0.8
                    } else if s.ambient < 0.1 {
                        0.2
                    } else {
                        0.0
                    };
                }
            }
            "iteration3" => {
                if s.motion {
                    c.broadcast = if self.seen == 0.0 { 1.0 } else { 0.0 };
                    self.seen = 1.0;
                    c.light = 1.0;
                } else {
                    self.seen = 0.0;
                    c.broadcast = 0.0;
                    // `light` on the right-hand side is the sensor: last tick's level.
                    c.light = if s.signal > 0.5 { 0.8 } else { unit(s.current_light * 0.5) };
                }
                c.listen = s.current_light < 0.5;
            }
            _ => unreachable!(),
        }
        Ok(*c)
    }
}

/// A sensor reading with every field drawn at random, including values a
/// simulator would never produce.
pub fn random_reading<R: Rng>(rng: &mut R) -> SensorReading {
    let pick = |rng: &mut R| -> f64 {
        match rng.random_range(0..10) {
            0 => 0.0,
            1 => 1.0,
            2 => 0.5,
            _ => rng.random::<f64>(),
        }
    };
    SensorReading {
        ambient: pick(rng),
        motion: rng.random_bool(0.4),
        signal: pick(rng),
        current_light: pick(rng),
        ticks_since_motion: rng.random(),
        tick: rng.random_range(0..10_000),
    }
}

const MEM_NAMES: [&str; 4] = ["a", "b", "count", "flag"];

fn random_number<R: Rng>(rng: &mut R) -> f64 {
    match rng.random_range(0..8) {
        0 => 0.0,
        1 => 1.0,
        2 => rng.random_range(0..300) as f64,
        3 => 1e300,
        4 => (rng.random_range(0..1_000_000) as f64) / 1_000_000.0,
        5 => 1e-9,
        _ => (rng.random_range(0..100) as f64) / 10.0,
    }
}

pub fn random_expr<R: Rng>(rng: &mut R, depth: usize) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.35);
    if leaf {
        return match rng.random_range(0..3) {
            0 => Expr::Number(random_number(rng)),
            1 => Expr::Sensor(Sensor::ALL[rng.random_range(0..Sensor::ALL.len())]),
            _ => Expr::Memory(MEM_NAMES[rng.random_range(0..MEM_NAMES.len())].to_string()),
        };
    }
    if rng.random_bool(0.15) {
        return Expr::Neg(Box::new(random_expr(rng, depth - 1)));
    }
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.random_range(0..4)];
    Expr::Binary(
        op,
        Box::new(random_expr(rng, depth - 1)),
        Box::new(random_expr(rng, depth - 1)),
    )
}

pub fn random_cond<R: Rng>(rng: &mut R, depth: usize) -> Cond {
    let leaf = depth == 0 || rng.random_bool(0.4);
    if leaf {
        if rng.random_bool(0.2) {
            return Cond::Motion;
        }
        let op = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne][rng.random_range(0..6)];
        return Cond::Compare(op, random_expr(rng, 3), random_expr(rng, 3));
    }
    match rng.random_range(0..3) {
        0 => Cond::Not(Box::new(random_cond(rng, depth - 1))),
        1 => Cond::And(Box::new(random_cond(rng, depth - 1)), Box::new(random_cond(rng, depth - 1))),
        _ => Cond::Or(Box::new(random_cond(rng, depth - 1)), Box::new(random_cond(rng, depth - 1))),
    }
}

fn random_block<R: Rng>(rng: &mut R, depth: usize, len: usize) -> Vec<Statement> {
    (0..len)
        .map(|_| {
            if depth > 0 && rng.random_bool(0.3) {
                let then_len = rng.random_range(0..3);
                let else_block = if rng.random_bool(0.5) {
                    let else_len = rng.random_range(0..3);
                    Some(random_block(rng, depth - 1, else_len))
                } else {
                    None
                };
                Statement::If {
                    cond: random_cond(rng, 3),
                    then_block: random_block(rng, depth - 1, then_len),
                    else_block,
                    pos: Pos::default(),
                }
            } else {
                let target = match rng.random_range(0..5) {
                    0 => Target::Actuator(Actuator::Light),
                    1 => Target::Actuator(Actuator::Listen),
                    2 => Target::Actuator(Actuator::Broadcast),
                    _ => Target::Memory(MEM_NAMES[rng.random_range(0..MEM_NAMES.len())].to_string()),
                };
                Statement::Assign {
                    target,
                    value: random_expr(rng, 4),
                    pos: Pos::default(),
                }
            }
        })
        .collect()
}

/// A random program that passes validation (only known names, bounded depth).
pub fn random_program<R: Rng>(rng: &mut R) -> RuleProgram {
    let len = rng.random_range(0..6);
    RuleProgram {
        statements: random_block(rng, 2, len),
    }
}

/// Connected random graph: a random spanning tree plus a few extra edges,
/// with random pedestrians and an optional ambient schedule.
pub fn random_scenario<R: Rng>(rng: &mut R) -> ScenarioSpec {
    let n = rng.random_range(1..10u32);
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
    let link = |a: u32, b: u32, adj: &mut Vec<Vec<u32>>| {
        if a != b && !adj[a as usize].contains(&b) {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
    };
    for i in 1..n {
        let parent = rng.random_range(0..i);
        link(i, parent, &mut adj);
    }
    for _ in 0..rng.random_range(0..n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        link(a, b, &mut adj);
    }
    let max_ticks = rng.random_range(1..40u32);
    let people = (0..rng.random_range(0..5u32))
        .map(|id| PersonSpec {
            id,
            origin: rng.random_range(0..n),
            destination: rng.random_range(0..n),
            start_tick: rng.random_range(0..max_ticks),
        })
        .collect();
    let ambient_schedule = if rng.random_bool(0.5) {
        vec![]
    } else {
        vec![
            AmbientStep {
                from_tick: 0,
                level: rng.random_range(0.0..=1.0),
            },
            AmbientStep {
                from_tick: max_ticks / 2 + 1,
                level: rng.random_range(0.0..=1.0),
            },
        ]
    };
    ScenarioSpec {
        name: "random".into(),
        max_ticks,
        movement_threshold: rng.random_range(0.0..=1.0),
        rng_seed: rng.random(),
        ambient_schedule,
        poles: adj
            .into_iter()
            .enumerate()
            .map(|(id, neighbors)| PoleSpec {
                id: id as u32,
                neighbors,
            })
            .collect(),
        people,
    }
}

/// Two-pole line with one pedestrian crossing it from tick 0.
pub fn two_pole_line(max_ticks: u32) -> ScenarioSpec {
    ScenarioSpec {
        name: "two-pole-line".into(),
        max_ticks,
        movement_threshold: 0.5,
        rng_seed: 0,
        ambient_schedule: vec![AmbientStep {
            from_tick: 0,
            level: 0.0,
        }],
        poles: vec![
            PoleSpec { id: 0, neighbors: vec![1] },
            PoleSpec { id: 1, neighbors: vec![0] },
        ],
        people: vec![PersonSpec {
            id: 0,
            origin: 0,
            destination: 1,
            start_tick: 0,
        }],
    }
}

/// Hand-written corpus covering every grammar construct.
pub const PROGRAM_CORPUS: [&str; 22] = [
    "light = 1.0",
    "light = 0.0  listen = 0  broadcast = 0",
    "light = ambient",
    "if motion then light = 1 end",
    "if motion then end",
    "if motion then light = 1 else light = 0.2 end",
    "if motion and signal > 0.5 then light = 1.0 else light = 0.2 end",
    "if not motion then light = light * 0.9 end",
    "if ticks_since_motion > 5 then light = 0.1 end",
    "mem.c = mem.c + 1  broadcast = mem.c / (mem.c + 1)",
    "if (motion or signal >= 0.3) and not (ambient > 0.6) then light = 1 - ambient end",
    "if (signal + 0.1) * 2 > 0.5 then listen = 1 else listen = 0 end",
    "light = -(ambient - 1) / 2  broadcast = --0.5",
    "if tick == 0 then mem.start = 1 end if mem.start != 0 then light = 0.3 end",
    "# comment only line\nlight = 0.25 # trailing comment",
    "if motion then\n  if signal > 0.5 then\n    broadcast = 0\n  else\n    broadcast = 1\n  end\nend",
    "light = a - (b - c)",
    "light = 1e-7 + 12.5e2 * 0",
    "if motion or signal > 0 and light < 1 then light = 1 end",
    "if ((motion)) then light = (((1))) end",
    "mem.x = mem.x * 0.5 + motion  light = mem.x",
    "if light <= 0.5 and ambient < 0.2 or motion then listen = 1 else listen = 0 broadcast = 0 end",
];
