//! Recursive-descent parser for rule programs.
//!
//! A parenthesised group in condition position may hold either a condition
//! or an arithmetic expression (`(signal + 0.1) > 0.5` vs `(a > b or c)`).
//! Both are parsed by one "mixed" routine that commits once it sees a
//! comparator or a logical keyword, so no backtracking is needed.

use thiserror::Error;

use super::ast::*;
use super::lexer::{Token, TokenKind};

/// Hard recursion guard; the validator enforces the tighter depth limit.
pub const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at {pos}")]
pub struct ParseError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: Option<String>,
    pub message: String,
}

pub fn parse(tokens: &[Token]) -> Result<RuleProgram, ParseError> {
    let mut parser = Parser {
        tokens,
        at: 0,
        nesting: 0,
    };
    let mut statements = Vec::new();
    while parser.peek().is_some() {
        statements.push(parser.statement()?);
    }
    Ok(RuleProgram { statements })
}

enum Mixed {
    Cond(Cond),
    Expr(Expr),
}

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
    nesting: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.at)
    }

    fn peek_is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is_some_and(|t| t.is(kind, lexeme))
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let tok = self.tokens.get(self.at);
        self.at += 1;
        tok
    }

    fn eat(&mut self, kind: TokenKind, lexeme: &str) -> bool {
        if self.peek_is(kind, lexeme) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn current_pos(&self) -> Pos {
        match self.peek() {
            Some(t) => t.pos,
            None => self
                .tokens
                .last()
                .map(|t| Pos::new(t.pos.line, t.pos.column + t.lexeme.chars().count() as u32))
                .unwrap_or(Pos::new(1, 1)),
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().map(|t| t.lexeme.clone());
        let wanted = expected
            .iter()
            .map(|e| format!("\"{e}\""))
            .collect::<Vec<_>>()
            .join(" or ");
        let message = match &found {
            Some(f) => format!("expected {wanted}, found \"{f}\""),
            None => format!("expected {wanted}, found end of input"),
        };
        ParseError {
            pos: self.current_pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
            message,
        }
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str) -> Result<(), ParseError> {
        if self.eat(kind, lexeme) {
            Ok(())
        } else {
            Err(self.error(&[lexeme]))
        }
    }

    fn nest(&mut self) -> Result<(), ParseError> {
        self.nesting += 1;
        if self.nesting > MAX_NESTING {
            return Err(ParseError {
                pos: self.current_pos(),
                expected: vec![],
                found: self.peek().map(|t| t.lexeme.clone()),
                message: format!("nesting deeper than {MAX_NESTING} levels"),
            });
        }
        Ok(())
    }

    fn unnest(&mut self) {
        self.nesting -= 1;
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.error(&["statement"]));
        };
        let pos = tok.pos;
        match tok.kind {
            TokenKind::Keyword if tok.lexeme == "if" => {
                self.bump();
                self.nest()?;
                let cond = self.cond()?;
                self.expect(TokenKind::Keyword, "then")?;
                let then_block = self.block()?;
                let else_block = if self.eat(TokenKind::Keyword, "else") {
                    Some(self.block()?)
                } else {
                    None
                };
                self.expect(TokenKind::Keyword, "end")?;
                self.unnest();
                Ok(Statement::If {
                    cond,
                    then_block,
                    else_block,
                    pos,
                })
            }
            TokenKind::Identifier => {
                self.bump();
                let target = if tok.lexeme == "mem" {
                    Target::Memory(self.memory_name()?)
                } else if let Some(a) = Actuator::from_name(&tok.lexeme) {
                    Target::Actuator(a)
                } else {
                    Target::Invalid(tok.lexeme.clone())
                };
                self.expect(TokenKind::Operator, "=")?;
                let value = self.expr()?;
                Ok(Statement::Assign { target, value, pos })
            }
            _ => Err(self.error(&["if", "light", "listen", "broadcast", "mem"])),
        }
    }

    fn block(&mut self) -> Result<Vec<Statement>, ParseError> {
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.is(TokenKind::Keyword, "else") || t.is(TokenKind::Keyword, "end") => {
                    return Ok(stmts)
                }
                Some(_) => stmts.push(self.statement()?),
                None => return Err(self.error(&["end"])),
            }
        }
    }

    fn memory_name(&mut self) -> Result<String, ParseError> {
        self.expect(TokenKind::Punctuation, ".")?;
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.bump();
                Ok(t.lexeme.clone())
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let mixed = self.mixed_or()?;
        self.to_cond(mixed)
    }

    fn to_cond(&self, mixed: Mixed) -> Result<Cond, ParseError> {
        match mixed {
            Mixed::Cond(c) => Ok(c),
            Mixed::Expr(Expr::Sensor(Sensor::Motion)) => Ok(Cond::Motion),
            Mixed::Expr(_) => Err(self.error(&["<", "<=", ">", ">=", "==", "!="])),
        }
    }

    fn mixed_or(&mut self) -> Result<Mixed, ParseError> {
        let first = self.mixed_and()?;
        if !self.peek_is(TokenKind::Keyword, "or") {
            return Ok(first);
        }
        let mut acc = self.to_cond(first)?;
        while self.eat(TokenKind::Keyword, "or") {
            let rhs = self.mixed_and()?;
            acc = Cond::Or(Box::new(acc), Box::new(self.to_cond(rhs)?));
        }
        Ok(Mixed::Cond(acc))
    }

    fn mixed_and(&mut self) -> Result<Mixed, ParseError> {
        let first = self.mixed_not()?;
        if !self.peek_is(TokenKind::Keyword, "and") {
            return Ok(first);
        }
        let mut acc = self.to_cond(first)?;
        while self.eat(TokenKind::Keyword, "and") {
            let rhs = self.mixed_not()?;
            acc = Cond::And(Box::new(acc), Box::new(self.to_cond(rhs)?));
        }
        Ok(Mixed::Cond(acc))
    }

    fn mixed_not(&mut self) -> Result<Mixed, ParseError> {
        if self.eat(TokenKind::Keyword, "not") {
            let inner = self.mixed_atom()?;
            Ok(Mixed::Cond(Cond::Not(Box::new(self.to_cond(inner)?))))
        } else {
            self.mixed_atom()
        }
    }

    /// `"(" mixed ")"` (continued as an expression when it held one) or
    /// `expr [comparator expr]`.
    fn mixed_atom(&mut self) -> Result<Mixed, ParseError> {
        let left = if self.peek_is(TokenKind::Punctuation, "(") {
            self.bump();
            self.nest()?;
            let inner = self.mixed_or()?;
            self.expect(TokenKind::Punctuation, ")")?;
            self.unnest();
            match inner {
                Mixed::Cond(c) => return Ok(Mixed::Cond(c)),
                Mixed::Expr(e) => {
                    let e = self.term_rest(e)?;
                    self.expr_rest(e)?
                }
            }
        } else {
            self.expr()?
        };
        match self.comparator() {
            Some(op) => {
                let rhs = self.expr()?;
                Ok(Mixed::Cond(Cond::Compare(op, left, rhs)))
            }
            None => Ok(Mixed::Expr(left)),
        }
    }

    fn comparator(&mut self) -> Option<CmpOp> {
        let tok = self.peek().filter(|t| t.kind == TokenKind::Comparator)?;
        let op = match tok.lexeme.as_str() {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let first = self.term()?;
        self.expr_rest(first)
    }

    fn expr_rest(&mut self, mut acc: Expr) -> Result<Expr, ParseError> {
        loop {
            let op = if self.eat(TokenKind::Operator, "+") {
                BinOp::Add
            } else if self.eat(TokenKind::Operator, "-") {
                BinOp::Sub
            } else {
                return Ok(acc);
            };
            let rhs = self.term()?;
            acc = Expr::Binary(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let first = self.factor()?;
        self.term_rest(first)
    }

    fn term_rest(&mut self, mut acc: Expr) -> Result<Expr, ParseError> {
        loop {
            let op = if self.eat(TokenKind::Operator, "*") {
                BinOp::Mul
            } else if self.eat(TokenKind::Operator, "/") {
                BinOp::Div
            } else {
                return Ok(acc);
            };
            let rhs = self.factor()?;
            acc = Expr::Binary(op, Box::new(acc), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: [&str; 4] = ["number", "sensor", "mem", "("];
        let Some(tok) = self.peek() else {
            return Err(self.error(&EXPECTED));
        };
        match tok.kind {
            TokenKind::Number => {
                self.bump();
                // The lexer only emits finite decimal literals.
                Ok(Expr::Number(tok.lexeme.parse().unwrap_or(0.0)))
            }
            TokenKind::Identifier => {
                self.bump();
                if tok.lexeme == "mem" {
                    Ok(Expr::Memory(self.memory_name()?))
                } else if let Some(s) = Sensor::from_name(&tok.lexeme) {
                    Ok(Expr::Sensor(s))
                } else {
                    Ok(Expr::Unknown {
                        name: tok.lexeme.clone(),
                        pos: tok.pos,
                    })
                }
            }
            TokenKind::Punctuation if tok.lexeme == "(" => {
                self.bump();
                self.nest()?;
                let e = self.expr()?;
                self.expect(TokenKind::Punctuation, ")")?;
                self.unnest();
                Ok(e)
            }
            TokenKind::Operator if tok.lexeme == "-" => {
                self.bump();
                self.nest()?;
                let inner = self.factor()?;
                self.unnest();
                Ok(Expr::Neg(Box::new(inner)))
            }
            _ => Err(self.error(&EXPECTED)),
        }
    }
}
