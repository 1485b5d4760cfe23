use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Formula;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {pos}: {message}")]
pub struct ParseError {
    pub pos: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Not,
    Next,
    Hence,
    Eventually,
    BoxOp,
    Diamond,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    And,
    Or,
    Imp,
    Iff,
    End,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => alloc::format!("identifier `{s}`"),
        Tok::End => "end of input".to_string(),
        other => alloc::format!("{other:?}"),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let rest = &text[i..];
        let (tok, len) = if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Imp, 2)
        } else if rest.starts_with("<>") {
            (Tok::Diamond, 2)
        } else if rest.starts_with("[]") {
            (Tok::BoxOp, 2)
        } else {
            match c {
                b'~' => (Tok::Not, 1),
                b'&' => (Tok::And, 1),
                b'|' => (Tok::Or, 1),
                b'(' => (Tok::LParen, 1),
                b')' => (Tok::RParen, 1),
                b'{' => (Tok::LBrace, 1),
                b'}' => (Tok::RBrace, 1),
                b',' => (Tok::Comma, 1),
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    let mut j = i + 1;
                    while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                        j += 1;
                    }
                    let word = &text[i..j];
                    let tok = match word {
                        "X" => Tok::Next,
                        "G" => Tok::Hence,
                        "F" => Tok::Eventually,
                        _ => Tok::Ident(word.to_string()),
                    };
                    (tok, j - i)
                }
                _ => {
                    let ch = rest.chars().next().unwrap_or('?');
                    return Err(ParseError {
                        pos: start,
                        message: alloc::format!("unexpected character `{ch}`"),
                    });
                }
            }
        };
        out.push((start, tok));
        i += len;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(alloc::format!(
                "expected {}, found {}",
                describe(&want),
                describe(self.peek())
            )))
        }
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            pos: self.pos(),
            message,
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let right = self.imp()?;
            left = left.iff(right);
        }
        Ok(left)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let left = self.or()?;
        if *self.peek() == Tok::Imp {
            self.bump();
            let right = self.imp()?;
            return Ok(left.implies(right));
        }
        Ok(left)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let right = self.and()?;
            left = left.or(right);
        }
        Ok(left)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::And {
            self.bump();
            let right = self.unary()?;
            left = left.and(right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let start = self.at;
        match self.bump() {
            Tok::Not => Ok(self.unary()?.neg()),
            Tok::Next => Ok(self.unary()?.next()),
            Tok::Hence => Ok(self.unary()?.hence()),
            Tok::Eventually => Ok(self.unary()?.eventually()),
            Tok::BoxOp => Ok(self.unary()?.boxed()),
            Tok::Diamond => {
                if *self.peek() != Tok::LBrace {
                    return Ok(self.unary()?.diamond());
                }
                self.bump();
                let mut members = Vec::new();
                if *self.peek() == Tok::RBrace {
                    self.bump();
                    return Ok(Formula::top());
                }
                loop {
                    members.push(self.iff()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RBrace => {
                            self.bump();
                            break;
                        }
                        other => {
                            let msg = alloc::format!("expected `,` or `}}`, found {}", describe(other));
                            return Err(self.error(msg));
                        }
                    }
                }
                Ok(Formula::tangle(members))
            }
            Tok::LParen => {
                let inner = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => Ok(Formula::Var(name)),
            other => {
                self.at = start;
                Err(self.error(alloc::format!("expected a formula, found {}", describe(&other))))
            }
        }
    }
}

/// Parses the ASCII concrete syntax. Derived connectives are expanded.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let f = p.iff()?;
    if *p.peek() != Tok::End {
        return Err(p.error(alloc::format!("trailing input: {}", describe(p.peek()))));
    }
    Ok(f)
}
