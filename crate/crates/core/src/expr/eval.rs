use std::collections::HashMap;

use num_complex::Complex64;
use thiserror::Error;

use super::{Expr, Func};

/// Magnitude below which a divisor counts as zero.
pub const SINGULAR_EPS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("singular evaluation: {0}")]
    Singular(&'static str),
    #[error("non-finite value")]
    NonFinite,
}

fn apply_func(f: Func, z: Complex64) -> Result<Complex64, EvalError> {
    Ok(match f {
        Func::Sin => z.sin(),
        Func::Cos => z.cos(),
        Func::Tan => {
            let c = z.cos();
            if c.norm() < SINGULAR_EPS {
                return Err(EvalError::Singular("tan at a pole"));
            }
            z.sin() / c
        }
        Func::Sinh => z.sinh(),
        Func::Cosh => z.cosh(),
        Func::Exp => z.exp(),
        Func::Log => {
            if z.norm() < SINGULAR_EPS {
                return Err(EvalError::Singular("log of zero"));
            }
            z.ln()
        }
        Func::Sqrt => z.sqrt(),
    })
}

fn divide(a: Complex64, b: Complex64) -> Result<Complex64, EvalError> {
    if b.norm() < SINGULAR_EPS {
        return Err(EvalError::Singular("division by zero"));
    }
    Ok(a / b)
}

fn power(z: Complex64, k: f64) -> Result<Complex64, EvalError> {
    if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
        let n = k as i32;
        if n < 0 {
            if z.norm() < SINGULAR_EPS {
                return Err(EvalError::Singular("negative power of zero"));
            }
            return Ok(z.powi(-n).inv());
        }
        return Ok(z.powi(n));
    }
    if z.norm() < SINGULAR_EPS {
        if k > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(EvalError::Singular("negative power of zero"));
    }
    Ok(z.powf(k))
}

fn finite(z: Complex64) -> Result<Complex64, EvalError> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    /// Evaluate with principal branches for `log`, `sqrt` and real powers.
    pub fn eval(&self, env: &HashMap<String, Complex64>) -> Result<Complex64, EvalError> {
        let z = match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => *env
                .get(name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => divide(a.eval(env)?, b.eval(env)?)?,
            Expr::Pow(a, k) => power(a.eval(env)?, *k)?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Call(f, a) => apply_func(*f, a.eval(env)?)?,
        };
        finite(z)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(Complex64),
    Load(usize),
    Add,
    Sub,
    Mul,
    Div,
    Pow(f64),
    Neg,
    Call(Func),
}

/// An expression compiled to postfix form with variables resolved to slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    /// Compile `e`, resolving each variable to its index in `slots`.
    pub fn compile(e: &Expr, slots: &[String]) -> Result<Program, EvalError> {
        let mut ops = Vec::with_capacity(e.size());
        let mut depth = 0;
        let mut max_depth = 0;
        emit(e, slots, &mut ops, &mut depth, &mut max_depth)?;
        Ok(Program {
            ops,
            depth: max_depth,
        })
    }

    /// Evaluate against slot values. `stack` is scratch space reused across calls.
    pub fn eval(
        &self,
        vars: &[Complex64],
        stack: &mut Vec<Complex64>,
    ) -> Result<Complex64, EvalError> {
        stack.clear();
        stack.reserve(self.depth);
        for op in &self.ops {
            match op {
                Op::Const(c) => stack.push(*c),
                Op::Load(i) => stack.push(vars[*i]),
                Op::Neg => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(-a);
                }
                Op::Pow(k) => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(power(a, *k)?);
                }
                Op::Call(f) => {
                    let a = stack.pop().expect("stack underflow");
                    stack.push(apply_func(*f, a)?);
                }
                binary => {
                    let b = stack.pop().expect("stack underflow");
                    let a = stack.pop().expect("stack underflow");
                    stack.push(match binary {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => divide(a, b)?,
                        _ => unreachable!(),
                    });
                }
            }
        }
        finite(stack.pop().expect("empty program"))
    }
}

fn emit(
    e: &Expr,
    slots: &[String],
    ops: &mut Vec<Op>,
    depth: &mut usize,
    max_depth: &mut usize,
) -> Result<(), EvalError> {
    match e {
        Expr::Const(c) => {
            ops.push(Op::Const(*c));
            *depth += 1;
        }
        Expr::Var(name) => {
            let slot = slots
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| EvalError::Unbound(name.clone()))?;
            ops.push(Op::Load(slot));
            *depth += 1;
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            emit(a, slots, ops, depth, max_depth)?;
            emit(b, slots, ops, depth, max_depth)?;
            let op = match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            };
            ops.push(op);
            *depth -= 1;
            return Ok(());
        }
        Expr::Pow(a, k) => {
            emit(a, slots, ops, depth, max_depth)?;
            ops.push(Op::Pow(*k));
        }
        Expr::Neg(a) => {
            emit(a, slots, ops, depth, max_depth)?;
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, slots, ops, depth, max_depth)?;
            ops.push(Op::Call(*f));
        }
    }
    *max_depth = (*max_depth).max(*depth);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn env(pairs: &[(&str, Complex64)]) -> HashMap<String, Complex64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn sine_of_imaginary_unit() {
        let v = parse("sin(x)")
            .unwrap()
            .eval(&env(&[("x", Complex64::i())]))
            .unwrap();
        // sin(i) = i sinh(1)
        let sinh1 = (std::f64::consts::E - 1.0 / std::f64::consts::E) / 2.0;
        assert!((v - Complex64::new(0.0, sinh1)).norm() < 1e-15);
        assert!((v.im - 1.1752011936).abs() < 1e-10);
    }

    #[test]
    fn square_of_one_plus_i() {
        let v = parse("x^2")
            .unwrap()
            .eval(&env(&[("x", Complex64::new(1.0, 1.0))]))
            .unwrap();
        assert_eq!(v, Complex64::new(0.0, 2.0));
    }

    #[test]
    fn reciprocal_of_zero_is_singular() {
        let err = parse("1/x")
            .unwrap()
            .eval(&env(&[("x", Complex64::new(0.0, 0.0))]))
            .unwrap_err();
        assert!(matches!(err, EvalError::Singular(_)));
    }

    #[test]
    fn unbound_symbol() {
        let err = parse("x + y")
            .unwrap()
            .eval(&env(&[("x", Complex64::new(1.0, 0.0))]))
            .unwrap_err();
        assert_eq!(err, EvalError::Unbound("y".into()));
    }

    #[test]
    fn principal_branches() {
        let minus_one = env(&[("x", Complex64::new(-1.0, 0.0))]);
        let s = parse("sqrt(x)").unwrap().eval(&minus_one).unwrap();
        assert!((s - Complex64::i()).norm() < 1e-15);
        let l = parse("log(x)").unwrap().eval(&minus_one).unwrap();
        assert!((l - Complex64::new(0.0, std::f64::consts::PI)).norm() < 1e-15);
        let h = parse("x^0.5").unwrap().eval(&minus_one).unwrap();
        assert!((h - Complex64::i()).norm() < 1e-15);
    }

    #[test]
    fn compiled_program_matches_tree_walk() {
        let e = parse("p^2/(2*sin(th)^2) - p + 0.5*sin(q)^2*sin(th)^2 + i*exp(q)").unwrap();
        let slots = vec!["q".to_string(), "th".to_string(), "p".to_string()];
        let prog = Program::compile(&e, &slots).unwrap();
        let vals = [
            Complex64::new(0.3, -0.2),
            Complex64::new(1.1, 0.4),
            Complex64::new(-0.7, 0.9),
        ];
        let map = env(&[("q", vals[0]), ("th", vals[1]), ("p", vals[2])]);
        let mut stack = Vec::new();
        assert_eq!(prog.eval(&vals, &mut stack).unwrap(), e.eval(&map).unwrap());
    }

    #[test]
    fn compile_rejects_unknown_slot() {
        let e = parse("x*y").unwrap();
        assert!(Program::compile(&e, &["x".to_string()]).is_err());
    }
}
