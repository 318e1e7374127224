use std::collections::BTreeSet;

use thiserror::Error;

use super::{Branch, SessionType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("duplicate action `{action}` in choice at offset {pos}")]
    DuplicateAction { pos: usize, action: String },
    #[error("`(+)` and `+` mixed in one choice at offset {pos}")]
    MixedChoice { pos: usize },
}

impl ParseError {
    pub fn pos(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::DuplicateAction { pos, .. }
            | ParseError::MixedChoice { pos } => *pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    One,
    Bang,
    Query,
    Dot,
    Plus,
    OPlus,
    LParen,
    RParen,
    Rec,
    Ident(String),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::One => "`1`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Query => "`?`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::OPlus => "`(+)`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Rec => "`rec`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "rec"
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'1' => Tok::One,
            b'!' => Tok::Bang,
            b'?' => Tok::Query,
            b'.' => Tok::Dot,
            b'+' => Tok::Plus,
            b')' => Tok::RParen,
            b'(' if src[i..].starts_with("(+)") => {
                i += 2;
                Tok::OPlus
            }
            b'(' => Tok::LParen,
            c if c.is_ascii_alphabetic() => {
                while i + 1 < bytes.len() && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_') {
                    i += 1;
                }
                match &src[start..=i] {
                    "rec" => Tok::Rec,
                    s => Tok::Ident(s.to_string()),
                }
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

/// Parses a session type. `!a` abbreviates `!a.1`.
pub fn parse(src: &str) -> Result<SessionType, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0, end: src.len() };
    let t = p.choice()?;
    match p.peek() {
        None => Ok(t),
        Some(tok) => Err(p.error(format!("unexpected {} after end of term", tok.describe()))),
    }
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, msg: String) -> ParseError {
        ParseError::Syntax { pos: self.pos(), msg }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.at += 1;
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected {}, found {}", want.describe(), t.describe()))),
            None => Err(self.error(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            Some(t) => Err(self.error(format!("expected identifier, found {}", t.describe()))),
            None => Err(self.error("expected identifier, found end of input".into())),
        }
    }

    fn choice(&mut self) -> Result<SessionType, ParseError> {
        let first_pos = self.pos();
        let first = self.atom()?;
        let mut op: Option<Tok> = None;
        let mut operands = vec![(first_pos, first)];
        while let Some(tok @ (Tok::Plus | Tok::OPlus)) = self.peek().cloned() {
            if op.as_ref().is_some_and(|o| *o != tok) {
                return Err(ParseError::MixedChoice { pos: self.pos() });
            }
            op = Some(tok);
            self.at += 1;
            let pos = self.pos();
            operands.push((pos, self.atom()?));
        }
        let Some(op) = op else {
            return Ok(operands.pop().unwrap().1);
        };
        let internal = op == Tok::OPlus;
        let mut branches: Vec<Branch> = Vec::new();
        let mut seen = BTreeSet::new();
        for (pos, t) in operands {
            let bs = match (internal, t) {
                (true, SessionType::Internal(bs)) | (false, SessionType::External(bs)) => bs,
                (true, _) => {
                    return Err(ParseError::Syntax { pos, msg: "operand of `(+)` must be an output prefix `!a`".into() })
                }
                (false, _) => {
                    return Err(ParseError::Syntax { pos, msg: "operand of `+` must be an input prefix `?a`".into() })
                }
            };
            for b in bs {
                if !seen.insert(b.action.clone()) {
                    return Err(ParseError::DuplicateAction { pos, action: b.action });
                }
                branches.push(b);
            }
        }
        Ok(if internal { SessionType::Internal(branches) } else { SessionType::External(branches) })
    }

    fn atom(&mut self) -> Result<SessionType, ParseError> {
        match self.bump() {
            Some(Tok::One) => Ok(SessionType::Success),
            Some(pol @ (Tok::Bang | Tok::Query)) => {
                let action = self.ident()?;
                let cont = if self.peek() == Some(&Tok::Dot) {
                    self.at += 1;
                    self.atom()?
                } else {
                    SessionType::Success
                };
                let b = vec![Branch { action, cont }];
                Ok(if pol == Tok::Bang { SessionType::Internal(b) } else { SessionType::External(b) })
            }
            Some(Tok::Rec) => {
                let x = self.ident()?;
                self.expect(Tok::Dot)?;
                Ok(SessionType::Rec(x, Box::new(self.choice()?)))
            }
            Some(Tok::Ident(x)) => Ok(SessionType::Var(x)),
            Some(Tok::LParen) => {
                let t = self.choice()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(t) => {
                self.at -= 1;
                Err(self.error(format!("unexpected {}", t.describe())))
            }
            None => Err(self.error("unexpected end of input".into())),
        }
    }
}
