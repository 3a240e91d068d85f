use super::{BinOp, Expr, Func, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

pub(super) struct Parser<'a> {
    src: &'a str,
    coords: &'a [&'a str],
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        offset,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let t = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => return Err(syntax(start, format!("unexpected character `{c}`"))),
            };
            out.push((t, start));
            i += c.len_utf8();
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str, coords: &'a [&'a str]) -> Self {
        Parser {
            src,
            coords,
            toks: Vec::new(),
            pos: 0,
        }
    }

    pub(super) fn parse(mut self) -> Result<Expr> {
        self.toks = lex(self.src)?;
        let e = self.expr()?;
        match self.peek() {
            (Tok::End, _) => Ok(e),
            (t, off) => Err(syntax(off, format!("unexpected token {t:?}"))),
        }
    }

    fn peek(&self) -> (Tok, usize) {
        self.toks[self.pos].clone()
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let (Tok::Op(c @ ('+' | '-')), off) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr {
                node: Node::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset: off,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let (Tok::Op(c @ ('*' | '/')), off) = self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr {
                node: Node::Bin(op, Box::new(lhs), Box::new(rhs)),
                offset: off,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let (Tok::Op('-'), off) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                offset: off,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let (Tok::Op('^'), off) = self.peek() {
            self.bump();
            let exp_off = self.peek().1;
            let exponent = self.unary()?;
            if !exponent.is_constant() {
                return Err(syntax(exp_off, "exponent must be a constant expression"));
            }
            let c = exponent.eval(&[0.0; 3])?;
            return Ok(Expr {
                node: Node::Pow(Box::new(base), c),
                offset: off,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            (Tok::Num(v), off) => Ok(Expr {
                node: Node::Num(v),
                offset: off,
            }),
            (Tok::LParen, _) => {
                let e = self.expr()?;
                match self.bump() {
                    (Tok::RParen, _) => Ok(e),
                    (_, off) => Err(syntax(off, "expected `)`")),
                }
            }
            (Tok::Ident(name), off) => {
                if let Some(f) = Func::from_name(&name) {
                    return self.call(f, name, off);
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr {
                        node: Node::Var(i),
                        offset: off,
                    });
                }
                if name == "pi" {
                    return Ok(Expr {
                        node: Node::Num(std::f64::consts::PI),
                        offset: off,
                    });
                }
                Err(Error::UnknownIdentifier { name, offset: off })
            }
            (Tok::End, off) => Err(syntax(off, "unexpected end of input")),
            (t, off) => Err(syntax(off, format!("unexpected token {t:?}"))),
        }
    }

    fn call(&mut self, f: Func, name: String, off: usize) -> Result<Expr> {
        match self.bump() {
            (Tok::LParen, _) => {}
            (_, o) => return Err(syntax(o, format!("expected `(` after `{name}`"))),
        }
        if let (Tok::RParen, _) = self.peek() {
            return Err(Error::Arity {
                name,
                offset: off,
                found: 0,
            });
        }
        let arg = self.expr()?;
        let mut found = 1;
        while let (Tok::Comma, _) = self.peek() {
            self.bump();
            self.expr()?;
            found += 1;
        }
        if found != 1 {
            return Err(Error::Arity {
                name,
                offset: off,
                found,
            });
        }
        match self.bump() {
            (Tok::RParen, _) => Ok(Expr {
                node: Node::Call(f, Box::new(arg)),
                offset: off,
            }),
            (_, o) => Err(syntax(o, "expected `)`")),
        }
    }
}
