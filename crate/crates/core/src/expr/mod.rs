//! Symbolic expressions over complex-valued variables.
//!
//! The expression language is a small infix grammar (`+ - * / ^`, unary minus,
//! a fixed set of holomorphic functions). Expressions are parsed into [`Expr`],
//! differentiated symbolically with [`diff`], and evaluated either directly
//! against a symbol map ([`Expr::eval`]) or through a compiled [`Program`]
//! that addresses variables by slot.

mod diff;
mod eval;
mod parse;
mod system;

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;

pub use diff::diff;
pub use eval::{EvalError, Program};
pub use parse::{parse, ParseError};
pub use system::{
    hamilton_equations, jacobian, parse_system, SystemDef, SystemDefError, SystemSource,
};

/// Reserved symbol for the imaginary unit.
pub const IMAGINARY_UNIT: &str = "i";

/// Holomorphic unary functions admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Expression tree.
///
/// Exponents of [`Expr::Pow`] are real constants; integer exponents are
/// evaluated by repeated multiplication, everything else through the
/// principal branch of the complex logarithm.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn real(value: f64) -> Expr {
        Expr::Const(Complex64::new(value, 0.0))
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(1.0, 0.0))
    }

    /// Set of symbols appearing in `Var` nodes.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
        }
    }

    /// Replace every occurrence of `name` by `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => value.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Add(a, b) => Expr::Add(
                Box::new(a.substitute(name, value)),
                Box::new(b.substitute(name, value)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(a.substitute(name, value)),
                Box::new(b.substitute(name, value)),
            ),
            Expr::Mul(a, b) => Expr::Mul(
                Box::new(a.substitute(name, value)),
                Box::new(b.substitute(name, value)),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(a.substitute(name, value)),
                Box::new(b.substitute(name, value)),
            ),
            Expr::Pow(a, k) => Expr::Pow(Box::new(a.substitute(name, value)), *k),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(name, value))),
            Expr::Call(f, a) => Expr::Call(*f, Box::new(a.substitute(name, value))),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Call(_, a) => 1 + a.size(),
        }
    }

    /// Text in the input grammar. `parse(&e.render())` reproduces `e` for
    /// trees whose constants are real or exactly the imaginary unit.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

fn fmt_real(x: f64) -> String {
    // Display for f64 is shortest round-trip and never uses exponent notation.
    let s = format!("{x}");
    if x < 0.0 {
        format!("({s})")
    } else {
        s
    }
}

fn fmt_const(c: Complex64) -> String {
    if c.im == 0.0 {
        fmt_real(c.re)
    } else if c.re == 0.0 && c.im == 1.0 {
        IMAGINARY_UNIT.to_string()
    } else if c.re == 0.0 {
        format!("({}*{IMAGINARY_UNIT})", fmt_real(c.im))
    } else {
        format!("({} + {}*{IMAGINARY_UNIT})", fmt_real(c.re), fmt_real(c.im))
    }
}

// Every compound subexpression is parenthesised, which keeps rendering
// trivially invertible by the parser.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => f.write_str(&fmt_const(*c)),
            Expr::Var(name) => f.write_str(name),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{})", fmt_real(*k)),
            Expr::Neg(a) => write!(f, "(-({a}))"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
