use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

use super::ast::{ExprAst, Func, Var};

/// Parse one expression. Errors carry the byte offset of the offending token.
///
/// Grammar (standard precedence, `^` right-associative and binding tighter
/// than unary minus):
///
/// ```text
/// expr   := term  { ("+" | "-") term }
/// term   := unary { ("*" | "/") unary }
/// unary  := "-" unary | power
/// power  := atom [ "^" unary ]
/// atom   := number | "pi" | "e" | "x" | "y" | func "(" expr ")" | "(" expr ")"
/// func   := "sin" | "cos" | "exp" | "sqrt" | "abs"
/// ```
pub fn parse(text: &str) -> Result<ExprAst> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = p.expr()?;
    match p.peek() {
        None => Ok(expr),
        Some(t) => Err(err(t.offset, format!("unexpected `{}`", t.kind.describe()))),
    }
}

fn err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("{v}"),
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Plus => "+".into(),
            TokenKind::Minus => "-".into(),
            TokenKind::Star => "*".into(),
            TokenKind::Slash => "/".into(),
            TokenKind::Caret => "^".into(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' | b',' => {
                let kind = match c {
                    b'+' => TokenKind::Plus,
                    b'-' => TokenKind::Minus,
                    b'*' => TokenKind::Star,
                    b'/' => TokenKind::Slash,
                    b'^' => TokenKind::Caret,
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                out.push(Token { kind, offset: i });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // Optional exponent: e / E, optional sign, digits.
                if i < bytes.len()
                    && (bytes[i] == b'e' || bytes[i] == b'E')
                    && i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_digit()
                        || ((bytes[i + 1] == b'+' || bytes[i + 1] == b'-')
                            && i + 2 < bytes.len()
                            && bytes[i + 2].is_ascii_digit()))
                {
                    i += 2;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let s = &text[start..i];
                let v: f64 = s
                    .parse()
                    .map_err(|_| err(start, format!("malformed number `{s}`")))?;
                out.push(Token {
                    kind: TokenKind::Number(v),
                    offset: start,
                });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(text[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(i, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next_offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().map(|t| &t.kind) == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> Result<()> {
        if self.eat(&kind) {
            Ok(())
        } else {
            Err(err(self.next_offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<ExprAst> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                let rhs = self.term()?;
                lhs = ExprAst::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokenKind::Minus) {
                let rhs = self.term()?;
                lhs = ExprAst::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                let rhs = self.unary()?;
                lhs = ExprAst::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&TokenKind::Slash) {
                let rhs = self.unary()?;
                lhs = ExprAst::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.eat(&TokenKind::Minus) {
            Ok(ExprAst::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.eat(&TokenKind::Caret) {
            // Right-associative; exponent may carry a unary minus.
            let exponent = self.unary()?;
            Ok(ExprAst::Pow(Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let offset = self.next_offset();
        let Some(token) = self.peek().cloned() else {
            return Err(err(offset, "expected an operand"));
        };
        match token.kind {
            TokenKind::Number(v) => {
                self.pos += 1;
                Ok(ExprAst::Const(v))
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(ExprAst::Var(Var::X)),
                    "y" => Ok(ExprAst::Var(Var::Y)),
                    "pi" => Ok(ExprAst::Const(PI)),
                    "e" => Ok(ExprAst::Const(E)),
                    "sin" | "cos" | "exp" | "sqrt" | "abs" => {
                        let func = match name.as_str() {
                            "sin" => Func::Sin,
                            "cos" => Func::Cos,
                            "exp" => Func::Exp,
                            "sqrt" => Func::Sqrt,
                            _ => Func::Abs,
                        };
                        self.expect(TokenKind::LParen, &format!("`(` after `{name}`"))?;
                        let arg = self.expr()?;
                        if self.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
                            return Err(err(
                                self.next_offset(),
                                format!("`{name}` takes exactly one argument"),
                            ));
                        }
                        self.expect(TokenKind::RParen, "`)`")?;
                        Ok(ExprAst::Call(func, Box::new(arg)))
                    }
                    other => Err(err(offset, format!("unknown identifier `{other}`"))),
                }
            }
            other => Err(err(offset, format!("expected an operand, found `{}`", other.describe()))),
        }
    }
}
