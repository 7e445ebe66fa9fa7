use crate::error::{Error, Result};

use super::ast::{add, call, div, mul, neg, pow, sub, ExprAst, Func, Var};

/// Symbolic derivative with respect to `var`. The result is constant-folded
/// but otherwise unsimplified, and stays inside the same grammar.
///
/// Two primitives need care:
/// * `u^v` is differentiated when the exponent does not depend on `var`
///   (power rule) or when the base is a positive constant (its log folds to
///   a literal). A fully general `u^v` would need `ln`, which the grammar
///   does not have, so that case is rejected.
/// * `abs(u)` differentiates to `u/abs(u) * u'`, which is exact away from
///   `u = 0` and raises a division-by-zero domain error right at the kink.
pub fn deriv(expr: &ExprAst, var: Var) -> Result<ExprAst> {
    Ok(fold(raw_deriv(expr, var)?))
}

fn raw_deriv(expr: &ExprAst, var: Var) -> Result<ExprAst> {
    use ExprAst::*;
    let d = |e: &ExprAst| raw_deriv(e, var);
    Ok(match expr {
        Const(_) => Const(0.0),
        Var(v) => Const(if *v == var { 1.0 } else { 0.0 }),
        Neg(a) => neg(d(a)?),
        Add(a, b) => add(d(a)?, d(b)?),
        Sub(a, b) => sub(d(a)?, d(b)?),
        Mul(a, b) => add(mul(d(a)?, (**b).clone()), mul((**a).clone(), d(b)?)),
        Div(a, b) => div(
            sub(mul(d(a)?, (**b).clone()), mul((**a).clone(), d(b)?)),
            pow((**b).clone(), Const(2.0)),
        ),
        Pow(base, exponent) => {
            let dbase = fold(d(base)?);
            let dexp = fold(d(exponent)?);
            if dexp == Const(0.0) {
                // v constant in `var`:  (u^v)' = v * u^(v-1) * u'
                mul(
                    mul(
                        (**exponent).clone(),
                        pow((**base).clone(), sub((**exponent).clone(), Const(1.0))),
                    ),
                    dbase,
                )
            } else if let Some(c) = fold((**base).clone()).as_const() {
                // c^v with c > 0:  (c^v)' = c^v * ln(c) * v'
                if c <= 0.0 {
                    return Err(Error::Derivative(format!(
                        "`{expr}`: non-positive constant base with varying exponent"
                    )));
                }
                mul(mul(expr.clone(), Const(c.ln())), dexp)
            } else {
                return Err(Error::Derivative(format!(
                    "`{expr}`: general base^exponent with both parts varying is outside the grammar"
                )));
            }
        }
        Call(f, a) => {
            let da = d(a)?;
            let outer = match f {
                Func::Sin => call(Func::Cos, (**a).clone()),
                Func::Cos => neg(call(Func::Sin, (**a).clone())),
                Func::Exp => call(Func::Exp, (**a).clone()),
                Func::Sqrt => div(Const(0.5), call(Func::Sqrt, (**a).clone())),
                // sign(u) written as u/abs(u); not differentiable at u = 0,
                // where evaluation reports the division-by-zero.
                Func::Abs => div((**a).clone(), call(Func::Abs, (**a).clone())),
            };
            mul(outer, da)
        }
    })
}

/// Constant folding only: collapse constant subtrees and the usual 0/1
/// identities. No reassociation, no other rewriting.
pub fn fold(expr: ExprAst) -> ExprAst {
    use ExprAst::*;
    match expr {
        Const(_) | Var(_) => expr,
        Neg(a) => {
            let a = fold(*a);
            match a.as_const() {
                Some(c) => Const(-c),
                None => neg(a),
            }
        }
        Add(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a.as_const(), b.as_const()) {
                (Some(x), Some(y)) => Const(x + y),
                (Some(x), _) if x == 0.0 => b,
                (_, Some(y)) if y == 0.0 => a,
                _ => add(a, b),
            }
        }
        Sub(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a.as_const(), b.as_const()) {
                (Some(x), Some(y)) => Const(x - y),
                (_, Some(y)) if y == 0.0 => a,
                (Some(x), _) if x == 0.0 => neg(b),
                _ => sub(a, b),
            }
        }
        Mul(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a.as_const(), b.as_const()) {
                (Some(x), Some(y)) => Const(x * y),
                (Some(x), _) if x == 0.0 => Const(0.0),
                (_, Some(y)) if y == 0.0 => Const(0.0),
                (Some(x), _) if x == 1.0 => b,
                (_, Some(y)) if y == 1.0 => a,
                _ => mul(a, b),
            }
        }
        Div(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a.as_const(), b.as_const()) {
                // Keep constant/0 unfolded so evaluation reports it.
                (Some(x), Some(y)) if y != 0.0 => Const(x / y),
                (Some(x), None) if x == 0.0 => Const(0.0),
                (_, Some(y)) if y == 1.0 => a,
                _ => div(a, b),
            }
        }
        Pow(a, b) => {
            let (a, b) = (fold(*a), fold(*b));
            match (a.as_const(), b.as_const()) {
                (Some(x), Some(y)) => {
                    let v = x.powf(y);
                    if v.is_finite() {
                        Const(v)
                    } else {
                        pow(a, b)
                    }
                }
                (_, Some(y)) if y == 1.0 => a,
                (_, Some(y)) if y == 0.0 => Const(1.0),
                _ => pow(a, b),
            }
        }
        Call(f, a) => {
            let a = fold(*a);
            if let Some(c) = a.as_const() {
                let v = match f {
                    Func::Sin => c.sin(),
                    Func::Cos => c.cos(),
                    Func::Exp => c.exp(),
                    Func::Sqrt => c.sqrt(),
                    Func::Abs => c.abs(),
                };
                if v.is_finite() {
                    return Const(v);
                }
            }
            call(f, a)
        }
    }
}
