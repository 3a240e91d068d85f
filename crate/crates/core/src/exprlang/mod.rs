//! Scalar expressions over chart coordinates.
//!
//! Expressions are parsed once into an immutable tree and evaluated either
//! as plain `f64` or as a second-order [`Jet2`], which carries exact first
//! and second partial derivatives with respect to the three coordinates.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term { ("+" | "-") term }
//! term   := unary { ("*" | "/") unary }
//! unary  := "-" unary | power
//! power  := atom [ "^" unary ]        (exponent must be constant)
//! atom   := NUMBER | IDENT | FUNC "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tightest and associates to the right, so `-x^2` is `-(x^2)` and
//! `2^3^2` is `2^9`.

mod jet;
mod parse;

pub use jet::{sym_index, Jet2};

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

/// Parsed expression. `offset` is the byte position of the node in the
/// source, used in domain-error reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

impl Expr {
    pub fn constant(v: f64) -> Expr {
        Expr {
            node: Node::Num(v),
            offset: 0,
        }
    }

    /// Parses `source`; identifiers must be one of `coords` (or `pi`).
    pub fn parse(source: &str, coords: &[&str]) -> Result<Expr> {
        parse::Parser::new(source, coords).parse()
    }

    /// True if the expression contains no coordinate variables.
    pub fn is_constant(&self) -> bool {
        match &self.node {
            Node::Num(_) => true,
            Node::Var(_) => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.is_constant(),
            Node::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Plain evaluation at a point.
    pub fn eval(&self, p: &[f64; 3]) -> Result<f64> {
        let v = match &self.node {
            Node::Num(v) => *v,
            Node::Var(i) => p[*i],
            Node::Neg(a) => -a.eval(p)?,
            Node::Bin(op, a, b) => {
                let (x, y) = (a.eval(p)?, b.eval(p)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        x / y
                    }
                }
            }
            Node::Pow(a, c) => {
                let x = a.eval(p)?;
                self.check_pow(x, *c)?;
                if c.fract() == 0.0 {
                    x.powi(*c as i32)
                } else {
                    x.powf(*c)
                }
            }
            Node::Call(f, a) => {
                let x = a.eval(p)?;
                self.check_call(*f, x)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Abs => x.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain("non-finite result"))
        }
    }

    /// Value, gradient and Hessian at `p`.
    pub fn eval_jet2(&self, p: &[f64; 3]) -> Result<Jet2> {
        let j = match &self.node {
            Node::Num(v) => Jet2::constant(*v),
            Node::Var(i) => Jet2::variable(p[*i], *i),
            Node::Neg(a) => -a.eval_jet2(p)?,
            Node::Bin(op, a, b) => {
                let (x, y) = (a.eval_jet2(p)?, b.eval_jet2(p)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.value == 0.0 {
                            return Err(self.domain("division by zero"));
                        }
                        x / y
                    }
                }
            }
            Node::Pow(a, c) => {
                let x = a.eval_jet2(p)?;
                self.check_pow(x.value, *c)?;
                x.powf(*c)
            }
            Node::Call(f, a) => {
                let x = a.eval_jet2(p)?;
                self.check_call(*f, x.value)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => x.tan(),
                    Func::Exp => x.exp(),
                    Func::Log => x.ln(),
                    Func::Sqrt => x.sqrt(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Tanh => x.tanh(),
                    Func::Abs => x.abs(),
                }
            }
        };
        if j.is_finite() {
            Ok(j)
        } else {
            Err(self.domain("non-finite value or derivative"))
        }
    }

    fn domain(&self, msg: &str) -> Error {
        Error::Domain {
            offset: self.offset,
            message: msg.to_string(),
        }
    }

    fn check_pow(&self, x: f64, c: f64) -> Result<()> {
        if x < 0.0 && c.fract() != 0.0 {
            return Err(self.domain("negative base with non-integer exponent"));
        }
        if x == 0.0 && c < 0.0 {
            return Err(self.domain("zero base with negative exponent"));
        }
        Ok(())
    }

    fn check_call(&self, f: Func, x: f64) -> Result<()> {
        match f {
            Func::Log if x <= 0.0 => Err(self.domain("log of non-positive argument")),
            Func::Sqrt if x < 0.0 => Err(self.domain("sqrt of negative argument")),
            _ => Ok(()),
        }
    }

    /// Fully parenthesized form that reparses to an identical tree value.
    pub fn to_source(&self, coords: &[&str]) -> String {
        let mut s = String::new();
        self.write_source(coords, &mut s);
        s
    }

    fn write_source(&self, coords: &[&str], out: &mut String) {
        use std::fmt::Write;
        match &self.node {
            Node::Num(v) => {
                if *v < 0.0 {
                    let _ = write!(out, "(-{:?})", -v);
                } else {
                    let _ = write!(out, "{:?}", v);
                }
            }
            Node::Var(i) => out.push_str(coords[*i]),
            Node::Neg(a) => {
                out.push_str("(-");
                a.write_source(coords, out);
                out.push(')');
            }
            Node::Bin(op, a, b) => {
                out.push('(');
                a.write_source(coords, out);
                out.push(op.symbol());
                b.write_source(coords, out);
                out.push(')');
            }
            Node::Pow(a, c) => {
                out.push('(');
                a.write_source(coords, out);
                if *c < 0.0 {
                    let _ = write!(out, "^(-{:?}))", -c);
                } else {
                    let _ = write!(out, "^{:?})", c);
                }
            }
            Node::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write_source(coords, out);
                out.push(')');
            }
        }
    }
}

impl Expr {
    /// Largest defect of the jet's gradient and Hessian against fourth-order
    /// central differences with step `h`, relative to `max(|exact|, 1)`.
    pub fn derivative_defect(&self, p: &[f64; 3], h: f64) -> Result<f64> {
        let j = self.eval_jet2(p)?;
        let at = |d: [f64; 3]| self.eval(&[p[0] + d[0], p[1] + d[1], p[2] + d[2]]);
        let shift = |a: usize, t: f64| {
            let mut d = [0.0; 3];
            d[a] = t;
            d
        };
        let w = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        let rel = |exact: f64, fd: f64| (exact - fd).abs() / exact.abs().max(1.0);
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            let mut d1 = 0.0;
            for (t, c) in w {
                d1 += c * at(shift(a, t * h))?;
            }
            worst = worst.max(rel(j.grad[a], d1 / (12.0 * h)));
            let mut d2 = -30.0 * at([0.0; 3])?;
            for (t, c) in [(-2.0, -1.0), (-1.0, 16.0), (1.0, 16.0), (2.0, -1.0)] {
                d2 += c * at(shift(a, t * h))?;
            }
            worst = worst.max(rel(j.d2(a, a), d2 / (12.0 * h * h)));
            for b in a + 1..3 {
                let mut m = 0.0;
                for (s, cs) in w {
                    for (t, ct) in w {
                        let mut d = shift(a, s * h);
                        d[b] = t * h;
                        m += cs * ct * at(d)?;
                    }
                }
                worst = worst.max(rel(j.d2(a, b), m / (144.0 * h * h)));
            }
        }
        Ok(worst)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source(&["x0", "x1", "x2"]))
    }
}

#[cfg(test)]
mod props;
