use std::fmt;

use thiserror::Error;

use super::ast::Pos;

pub const KEYWORDS: [&str; 7] = ["if", "then", "else", "end", "and", "or", "not"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    Number,
    Comparator,
    Operator,
    Punctuation,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TokenKind::Keyword => "keyword",
            TokenKind::Identifier => "identifier",
            TokenKind::Number => "number",
            TokenKind::Comparator => "comparator",
            TokenKind::Operator => "operator",
            TokenKind::Punctuation => "punctuation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Pos,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message} at {pos}")]
pub struct LexError {
    pub pos: Pos,
    pub found: char,
    pub message: String,
}

/// Splits rule source into tokens. `#` starts a comment that runs to the end
/// of the line. Numbers are unsigned decimals with an optional exponent.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos::new(line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }

        let start = i;
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() {
            i = scan_number(&chars, i, pos)?;
            TokenKind::Number
        } else {
            let next = chars.get(i + 1).copied();
            match (c, next) {
                ('<' | '>' | '=' | '!', Some('=')) => {
                    i += 2;
                    TokenKind::Comparator
                }
                ('<' | '>', _) => {
                    i += 1;
                    TokenKind::Comparator
                }
                ('=' | '+' | '-' | '*' | '/', _) => {
                    i += 1;
                    TokenKind::Operator
                }
                ('(' | ')' | '.', _) => {
                    i += 1;
                    TokenKind::Punctuation
                }
                _ => {
                    return Err(LexError {
                        pos,
                        found: c,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            }
        };
        let lexeme: String = chars[start..i].iter().collect();
        if kind == TokenKind::Number && !lexeme.parse::<f64>().is_ok_and(f64::is_finite) {
            return Err(LexError {
                pos,
                found: c,
                message: format!("number '{lexeme}' is out of range"),
            });
        }
        col += (i - start) as u32;
        tokens.push(Token { kind, lexeme, pos });
    }
    Ok(tokens)
}

/// digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]
fn scan_number(chars: &[char], mut i: usize, pos: Pos) -> Result<usize, LexError> {
    let digits = |mut i: usize| {
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    i = digits(i);
    if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
        i = digits(i + 1);
    }
    if matches!(chars.get(i), Some('e' | 'E')) {
        let mut j = i + 1;
        if matches!(chars.get(j), Some('+' | '-')) {
            j += 1;
        }
        if !chars.get(j).is_some_and(char::is_ascii_digit) {
            return Err(LexError {
                pos,
                found: chars[i],
                message: "malformed exponent in number".into(),
            });
        }
        i = digits(j);
    }
    Ok(i)
}
