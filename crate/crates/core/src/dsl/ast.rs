use std::fmt;

/// 1-based source location.
///
/// Positions are diagnostic metadata only: two positions always compare
/// equal, so structural equality of programs ignores where nodes came from.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Self { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sensor {
    Ambient,
    Motion,
    Signal,
    Light,
    TicksSinceMotion,
    Tick,
}

impl Sensor {
    pub const ALL: [Sensor; 6] = [
        Sensor::Ambient,
        Sensor::Motion,
        Sensor::Signal,
        Sensor::Light,
        Sensor::TicksSinceMotion,
        Sensor::Tick,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Sensor::Ambient => "ambient",
            Sensor::Motion => "motion",
            Sensor::Signal => "signal",
            Sensor::Light => "light",
            Sensor::TicksSinceMotion => "ticks_since_motion",
            Sensor::Tick => "tick",
        }
    }

    pub fn from_name(name: &str) -> Option<Sensor> {
        Sensor::ALL.into_iter().find(|s| s.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actuator {
    Light,
    Listen,
    Broadcast,
}

impl Actuator {
    pub fn name(self) -> &'static str {
        match self {
            Actuator::Light => "light",
            Actuator::Listen => "listen",
            Actuator::Broadcast => "broadcast",
        }
    }

    pub fn from_name(name: &str) -> Option<Actuator> {
        match name {
            "light" => Some(Actuator::Light),
            "listen" => Some(Actuator::Listen),
            "broadcast" => Some(Actuator::Broadcast),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Actuator(Actuator),
    Memory(String),
    /// Anything else the parser accepted syntactically; rejected by validation.
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Sensor(Sensor),
    Memory(String),
    Unknown { name: String, pos: Pos },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Motion,
    Compare(CmpOp, Expr, Expr),
    Not(Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Assign {
        target: Target,
        value: Expr,
        pos: Pos,
    },
    If {
        cond: Cond,
        then_block: Vec<Statement>,
        else_block: Option<Vec<Statement>>,
        pos: Pos,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleProgram {
    pub statements: Vec<Statement>,
}

impl Expr {
    pub fn depth(&self) -> usize {
        match self {
            Expr::Number(_) | Expr::Sensor(_) | Expr::Memory(_) | Expr::Unknown { .. } => 1,
            Expr::Neg(inner) => 1 + inner.depth(),
            Expr::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }
}

impl Cond {
    pub fn depth(&self) -> usize {
        match self {
            Cond::Motion => 1,
            Cond::Compare(_, l, r) => 1 + l.depth().max(r.depth()),
            Cond::Not(inner) => 1 + inner.depth(),
            Cond::And(l, r) | Cond::Or(l, r) => 1 + l.depth().max(r.depth()),
        }
    }
}

impl RuleProgram {
    /// Names of every `mem.*` variable read or written, sorted.
    pub fn memory_names(&self) -> Vec<String> {
        fn expr(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Memory(name) => out.push(name.clone()),
                Expr::Neg(inner) => expr(inner, out),
                Expr::Binary(_, l, r) => {
                    expr(l, out);
                    expr(r, out);
                }
                _ => {}
            }
        }
        fn cond(c: &Cond, out: &mut Vec<String>) {
            match c {
                Cond::Motion => {}
                Cond::Compare(_, l, r) => {
                    expr(l, out);
                    expr(r, out);
                }
                Cond::Not(inner) => cond(inner, out),
                Cond::And(l, r) | Cond::Or(l, r) => {
                    cond(l, out);
                    cond(r, out);
                }
            }
        }
        fn block(stmts: &[Statement], out: &mut Vec<String>) {
            for s in stmts {
                match s {
                    Statement::Assign { target, value, .. } => {
                        if let Target::Memory(name) = target {
                            out.push(name.clone());
                        }
                        expr(value, out);
                    }
                    Statement::If {
                        cond: c,
                        then_block,
                        else_block,
                        ..
                    } => {
                        cond(c, out);
                        block(then_block, out);
                        if let Some(e) = else_block {
                            block(e, out);
                        }
                    }
                }
            }
        }
        let mut names = Vec::new();
        block(&self.statements, &mut names);
        names.sort();
        names.dedup();
        names
    }
}
