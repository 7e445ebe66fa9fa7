use std::fmt;

use crate::error::{Error, Result};

/// Variables admitted by the expression grammar: `x` is the slow axis
/// coordinate, `y` the fast (periodic) one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree for boundary profiles and sources.
///
/// The grammar is deliberately small: constants (including `pi` and `e`),
/// the variables `x` and `y`, unary minus, the four arithmetic operators,
/// `^`, and the calls sin/cos/exp/sqrt/abs. `Display` prints a form that
/// parses back to the same tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprAst {
    Const(f64),
    Var(Var),
    Neg(Box<ExprAst>),
    Add(Box<ExprAst>, Box<ExprAst>),
    Sub(Box<ExprAst>, Box<ExprAst>),
    Mul(Box<ExprAst>, Box<ExprAst>),
    Div(Box<ExprAst>, Box<ExprAst>),
    Pow(Box<ExprAst>, Box<ExprAst>),
    Call(Func, Box<ExprAst>),
}

// Terse constructors; mostly for the differentiator.
pub(crate) fn add(a: ExprAst, b: ExprAst) -> ExprAst {
    ExprAst::Add(Box::new(a), Box::new(b))
}
pub(crate) fn sub(a: ExprAst, b: ExprAst) -> ExprAst {
    ExprAst::Sub(Box::new(a), Box::new(b))
}
pub(crate) fn mul(a: ExprAst, b: ExprAst) -> ExprAst {
    ExprAst::Mul(Box::new(a), Box::new(b))
}
pub(crate) fn div(a: ExprAst, b: ExprAst) -> ExprAst {
    ExprAst::Div(Box::new(a), Box::new(b))
}
pub(crate) fn pow(a: ExprAst, b: ExprAst) -> ExprAst {
    ExprAst::Pow(Box::new(a), Box::new(b))
}
pub(crate) fn neg(a: ExprAst) -> ExprAst {
    ExprAst::Neg(Box::new(a))
}
pub(crate) fn call(f: Func, a: ExprAst) -> ExprAst {
    ExprAst::Call(f, Box::new(a))
}

impl ExprAst {
    /// Evaluate at (x, y). IEEE double semantics, except that division by an
    /// exact zero, sqrt of a negative and any non-finite intermediate are
    /// reported as domain errors naming the offending subexpression.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = match self {
            ExprAst::Const(c) => *c,
            ExprAst::Var(Var::X) => x,
            ExprAst::Var(Var::Y) => y,
            ExprAst::Neg(a) => -a.eval(x, y)?,
            ExprAst::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            ExprAst::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            ExprAst::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            ExprAst::Div(a, b) => {
                let den = b.eval(x, y)?;
                if den == 0.0 {
                    return Err(self.domain_err("division by zero"));
                }
                a.eval(x, y)? / den
            }
            ExprAst::Pow(a, b) => a.eval(x, y)?.powf(b.eval(x, y)?),
            ExprAst::Call(f, a) => {
                let u = a.eval(x, y)?;
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(self.domain_err("sqrt of a negative value"));
                        }
                        u.sqrt()
                    }
                    Func::Abs => u.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain_err("non-finite result"))
        }
    }

    fn domain_err(&self, message: &str) -> Error {
        Error::EvalDomain {
            expr: self.to_string(),
            message: message.to_string(),
        }
    }

    /// True when the tree is a plain constant.
    pub fn as_const(&self) -> Option<f64> {
        match self {
            ExprAst::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Does the expression mention `v` at all?
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            ExprAst::Const(_) => false,
            ExprAst::Var(w) => *w == v,
            ExprAst::Neg(a) | ExprAst::Call(_, a) => a.depends_on(v),
            ExprAst::Add(a, b)
            | ExprAst::Sub(a, b)
            | ExprAst::Mul(a, b)
            | ExprAst::Div(a, b)
            | ExprAst::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ExprAst::Add(..) | ExprAst::Sub(..) => 1,
            ExprAst::Mul(..) | ExprAst::Div(..) => 2,
            ExprAst::Neg(..) => 3,
            ExprAst::Pow(..) => 4,
            ExprAst::Const(_) | ExprAst::Var(_) | ExprAst::Call(..) => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for ExprAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprAst::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    // Wrap negative literals so they re-parse as one atom.
                    write!(f, "({c})")
                } else {
                    write!(f, "{c}")
                }
            }
            ExprAst::Var(Var::X) => write!(f, "x"),
            ExprAst::Var(Var::Y) => write!(f, "y"),
            ExprAst::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, 3)
            }
            ExprAst::Add(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, "+")?;
                b.fmt_child(f, 2)
            }
            ExprAst::Sub(a, b) => {
                a.fmt_child(f, 1)?;
                write!(f, "-")?;
                b.fmt_child(f, 2)
            }
            ExprAst::Mul(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "*")?;
                b.fmt_child(f, 3)
            }
            ExprAst::Div(a, b) => {
                a.fmt_child(f, 2)?;
                write!(f, "/")?;
                b.fmt_child(f, 3)
            }
            ExprAst::Pow(a, b) => {
                a.fmt_child(f, 5)?;
                write!(f, "^")?;
                b.fmt_child(f, 4)
            }
            ExprAst::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
