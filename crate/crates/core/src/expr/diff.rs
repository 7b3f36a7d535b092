use num_complex::Complex64;

use super::{Expr, Func};

// Smart constructors: constant folding plus the 0/1 identities. Nothing more.

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (a, b) if a.is_zero() => b,
        (a, b) if b.is_zero() => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (a, b) if b.is_zero() => a,
        (a, b) if a.is_zero() => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (a, b) if a.is_zero() || b.is_zero() => Expr::real(0.0),
        (a, b) if a.is_one() => b,
        (a, b) if b.is_one() => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) if y != Complex64::new(0.0, 0.0) => Expr::Const(x / y),
        (a, b) if b.is_one() => a,
        (a, _) if a.is_zero() => Expr::real(0.0),
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

pub(crate) fn pow(a: Expr, k: f64) -> Expr {
    if k == 0.0 {
        return Expr::real(1.0);
    }
    if k == 1.0 {
        return a;
    }
    match a {
        Expr::Const(x) if k.fract() == 0.0 && k.abs() <= 64.0 && x != Complex64::new(0.0, 0.0) => {
            Expr::Const(x.powi(k as i32))
        }
        a => Expr::Pow(Box::new(a), k),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

/// Symbolic partial derivative of `e` with respect to `v`.
///
/// The result is lightly simplified (constant folding, 0/1 rules); its
/// correctness is checked numerically, not by normal form.
pub fn diff(e: &Expr, v: &str) -> Expr {
    match e {
        Expr::Const(_) => Expr::real(0.0),
        Expr::Var(name) => Expr::real(if name == v { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(diff(a, v), diff(b, v)),
        Expr::Sub(a, b) => sub(diff(a, v), diff(b, v)),
        Expr::Mul(a, b) => add(
            mul(diff(a, v), (**b).clone()),
            mul((**a).clone(), diff(b, v)),
        ),
        Expr::Div(a, b) => {
            let da = diff(a, v);
            let db = diff(b, v);
            if db.is_zero() {
                div(da, (**b).clone())
            } else {
                // (a'b - ab') / b^2
                div(
                    sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                    pow((**b).clone(), 2.0),
                )
            }
        }
        Expr::Pow(a, k) => {
            let da = diff(a, v);
            if da.is_zero() {
                return Expr::real(0.0);
            }
            mul(mul(Expr::real(*k), pow((**a).clone(), k - 1.0)), da)
        }
        Expr::Neg(a) => neg(diff(a, v)),
        Expr::Call(f, a) => {
            let da = diff(a, v);
            if da.is_zero() {
                return Expr::real(0.0);
            }
            let arg = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, arg),
                Func::Cos => neg(call(Func::Sin, arg)),
                Func::Tan => div(Expr::real(1.0), pow(call(Func::Cos, arg), 2.0)),
                Func::Sinh => call(Func::Cosh, arg),
                Func::Cosh => call(Func::Sinh, arg),
                Func::Exp => call(Func::Exp, arg),
                Func::Log => div(Expr::real(1.0), arg),
                Func::Sqrt => div(Expr::real(0.5), call(Func::Sqrt, arg)),
            };
            mul(outer, da)
        }
    }
}

/// Bottom-up pass applying the same folding rules as the derivative builder.
pub(crate) fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Add(a, b) => add(simplify(a), simplify(b)),
        Expr::Sub(a, b) => sub(simplify(a), simplify(b)),
        Expr::Mul(a, b) => mul(simplify(a), simplify(b)),
        Expr::Div(a, b) => div(simplify(a), simplify(b)),
        Expr::Pow(a, k) => pow(simplify(a), *k),
        Expr::Neg(a) => neg(simplify(a)),
        Expr::Call(f, a) => call(*f, simplify(a)),
    }
}
