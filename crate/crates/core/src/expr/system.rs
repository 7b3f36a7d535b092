//! ODE systems assembled from expressions, and the small line-oriented
//! system-definition format.
//!
//! ```text
//! # Hénon–Heiles
//! name: henon_heiles
//! param A = 0.25
//! param lambda = 1
//! coords: q1 q2
//! momenta: p1 p2
//! H = (p1^2 + p2^2)/2 - q2^2*(A + q1) - lambda/3*q1^3
//! ```
//!
//! Explicit systems list their state and one `sym' = expr` line per state symbol:
//!
//! ```text
//! name: riccati
//! state: x
//! x' = x^2
//! ```
//!
//! `angles:` names state symbols that are periodic with period 2π.

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use thiserror::Error;

use super::diff::{diff, simplify};
use super::eval::{EvalError, Program};
use super::parse::{parse, ParseError};
use super::{Expr, IMAGINARY_UNIT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemDefError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("symbol `{0}` is used more than once")]
    SymbolCollision(String),
    #[error("coordinates and momenta must pair up ({coords} vs {momenta})")]
    OddPairing { coords: usize, momenta: usize },
    #[error("expression references unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("angle `{0}` is not a state symbol")]
    UnknownAngle(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("missing equation for state symbol `{0}`")]
    MissingEquation(String),
    #[error("system has no state")]
    Empty,
    #[error("parameter `{name}` must be a constant: {source}")]
    ParameterValue {
        name: String,
        #[source]
        source: EvalError,
    },
}

/// An n-dimensional complexified autonomous ODE `dx/dt = v(x)` together with
/// its Jacobian `A(x) = ∂v/∂x`.
///
/// Immutable after construction; compiled evaluators are shared freely.
#[derive(Debug, Clone)]
pub struct SystemDef {
    pub name: String,
    pub state_symbols: Vec<String>,
    pub rhs: Vec<Expr>,
    pub jacobian: Vec<Vec<Expr>>,
    /// State indices whose real parts are periodic with period 2π.
    pub angle_indices: Vec<usize>,
    pub is_hamiltonian: bool,
    pub hamiltonian: Option<Expr>,
    /// Definition text this system was built from, if any.
    pub source: Option<String>,
    rhs_programs: Vec<Program>,
    jac_programs: Vec<Program>,
    energy_program: Option<Program>,
}

impl SystemDef {
    /// Build from explicit right-hand sides. The Jacobian is derived symbolically.
    pub fn new(
        name: impl Into<String>,
        state_symbols: Vec<String>,
        rhs: Vec<Expr>,
    ) -> Result<SystemDef, SystemDefError> {
        if state_symbols.is_empty() {
            return Err(SystemDefError::Empty);
        }
        if rhs.len() != state_symbols.len() {
            return Err(SystemDefError::MissingEquation(
                state_symbols
                    .get(rhs.len())
                    .cloned()
                    .unwrap_or_else(|| "?".into()),
            ));
        }
        check_distinct(&state_symbols)?;
        let known: BTreeSet<&str> = state_symbols.iter().map(String::as_str).collect();
        for e in &rhs {
            if let Some(unknown) = e.free_vars().iter().find(|v| !known.contains(v.as_str())) {
                return Err(SystemDefError::UnknownSymbol(unknown.clone()));
            }
        }
        let jac = jacobian(&rhs, &state_symbols);
        let compile = |e: &Expr| Program::compile(e, &state_symbols).expect("symbols checked");
        let rhs_programs = rhs.iter().map(compile).collect();
        let jac_programs = jac.iter().flatten().map(compile).collect();
        Ok(SystemDef {
            name: name.into(),
            rhs_programs,
            jac_programs,
            state_symbols,
            rhs,
            jacobian: jac,
            angle_indices: Vec::new(),
            is_hamiltonian: false,
            hamiltonian: None,
            source: None,
            energy_program: None,
        })
    }

    /// Mark the named state symbols as 2π-periodic angles.
    pub fn with_angles(mut self, angles: &[&str]) -> Result<SystemDef, SystemDefError> {
        let mut idx = Vec::new();
        for a in angles {
            let i = self
                .state_symbols
                .iter()
                .position(|s| s == a)
                .ok_or_else(|| SystemDefError::UnknownAngle(a.to_string()))?;
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        idx.sort_unstable();
        self.angle_indices = idx;
        Ok(self)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> SystemDef {
        self.source = Some(source.into());
        self
    }

    pub fn dim(&self) -> usize {
        self.state_symbols.len()
    }

    /// v(x) into `out`.
    pub fn eval_rhs(
        &self,
        x: &[Complex64],
        out: &mut [Complex64],
        stack: &mut Vec<Complex64>,
    ) -> Result<(), EvalError> {
        for (o, p) in out.iter_mut().zip(&self.rhs_programs) {
            *o = p.eval(x, stack)?;
        }
        Ok(())
    }

    /// A(x) into `out`, row-major n×n.
    pub fn eval_jacobian(
        &self,
        x: &[Complex64],
        out: &mut [Complex64],
        stack: &mut Vec<Complex64>,
    ) -> Result<(), EvalError> {
        for (o, p) in out.iter_mut().zip(&self.jac_programs) {
            *o = p.eval(x, stack)?;
        }
        Ok(())
    }

    /// Value of the Hamiltonian, for Hamiltonian systems.
    pub fn energy(&self, x: &[Complex64]) -> Option<Result<Complex64, EvalError>> {
        self.energy_program
            .as_ref()
            .map(|p| p.eval(x, &mut Vec::new()))
    }

    /// Environment binding state symbols to `x`, for tree-walking evaluation.
    pub fn env(&self, x: &[Complex64]) -> HashMap<String, Complex64> {
        self.state_symbols
            .iter()
            .cloned()
            .zip(x.iter().copied())
            .collect()
    }

    /// Canonical text used for hashing: state order, equations and angles.
    pub fn canonical_text(&self) -> String {
        let mut out = format!("name {}\nstate {}\n", self.name, self.state_symbols.join(" "));
        for (s, e) in self.state_symbols.iter().zip(&self.rhs) {
            out.push_str(&format!("{s}' = {e}\n"));
        }
        let angles: Vec<_> = self
            .angle_indices
            .iter()
            .map(|&i| self.state_symbols[i].as_str())
            .collect();
        out.push_str(&format!("angles {}\n", angles.join(" ")));
        out
    }
}

fn check_distinct(symbols: &[String]) -> Result<(), SystemDefError> {
    let mut seen = BTreeSet::new();
    for s in symbols {
        if s == IMAGINARY_UNIT || !seen.insert(s.as_str()) {
            return Err(SystemDefError::SymbolCollision(s.clone()));
        }
    }
    Ok(())
}

/// Jacobian matrix `∂rhs[i]/∂symbols[j]`.
pub fn jacobian(rhs: &[Expr], symbols: &[String]) -> Vec<Vec<Expr>> {
    rhs.iter()
        .map(|e| symbols.iter().map(|s| diff(e, s)).collect())
        .collect()
}

/// Hamilton's equations for `h`, with state ordered `(coords…, momenta…)`:
/// `q̇ = ∂H/∂p`, `ṗ = −∂H/∂q`.
pub fn hamilton_equations(
    name: impl Into<String>,
    h: &Expr,
    coords: &[String],
    momenta: &[String],
) -> Result<SystemDef, SystemDefError> {
    if coords.len() != momenta.len() || coords.is_empty() {
        return Err(SystemDefError::OddPairing {
            coords: coords.len(),
            momenta: momenta.len(),
        });
    }
    let state: Vec<String> = coords.iter().chain(momenta).cloned().collect();
    check_distinct(&state)?;
    let known: BTreeSet<&str> = state.iter().map(String::as_str).collect();
    if let Some(unknown) = h.free_vars().iter().find(|v| !known.contains(v.as_str())) {
        return Err(SystemDefError::UnknownSymbol(unknown.clone()));
    }
    let mut rhs: Vec<Expr> = momenta.iter().map(|p| diff(h, p)).collect();
    rhs.extend(coords.iter().map(|q| super::diff::neg(diff(h, q))));
    let mut sys = SystemDef::new(name, state, rhs)?;
    sys.energy_program = Some(Program::compile(h, &sys.state_symbols).expect("symbols checked"));
    sys.hamiltonian = Some(h.clone());
    sys.is_hamiltonian = true;
    Ok(sys)
}

#[derive(Debug, Clone, PartialEq)]
enum SourceBody {
    Hamiltonian {
        coords: Vec<String>,
        momenta: Vec<String>,
        h: Expr,
    },
    Explicit {
        state: Vec<String>,
        rhs: Vec<(String, Expr)>,
    },
}

/// A parsed, not yet instantiated, system definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSource {
    pub name: String,
    /// Declared parameters with their default values, in declaration order.
    pub params: Vec<(String, Complex64)>,
    pub angles: Vec<String>,
    pub text: String,
    body: SourceBody,
}

impl SystemSource {
    pub fn parse(text: &str) -> Result<SystemSource, SystemDefError> {
        let mut name = None;
        let mut params: Vec<(String, Complex64)> = Vec::new();
        let mut angles = Vec::new();
        let mut coords = None;
        let mut momenta = None;
        let mut state = None;
        let mut h = None;
        let mut rhs = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: &str| SystemDefError::Syntax {
                line: line_no,
                message: message.to_string(),
            };
            let expr = |src: &str| {
                parse(src).map_err(|source| SystemDefError::Parse {
                    line: line_no,
                    source,
                })
            };
            if let Some((key, value)) = line.split_once(':') {
                let words: Vec<String> = value.split_whitespace().map(str::to_string).collect();
                match key.trim() {
                    "name" => name = Some(value.trim().to_string()),
                    "coords" => coords = Some(words),
                    "momenta" => momenta = Some(words),
                    "state" => state = Some(words),
                    "angles" => angles = words,
                    other => return Err(syntax(&format!("unknown key `{other}`"))),
                }
            } else if let Some(rest) = line.strip_prefix("param ") {
                let (pname, value) = rest
                    .split_once('=')
                    .ok_or_else(|| syntax("expected `param NAME = VALUE`"))?;
                let pname = pname.trim().to_string();
                let value = expr(value)?.eval(&HashMap::new()).map_err(|source| {
                    SystemDefError::ParameterValue {
                        name: pname.clone(),
                        source,
                    }
                })?;
                params.push((pname, value));
            } else if let Some((lhs, value)) = line.split_once('=') {
                let lhs = lhs.trim();
                if lhs == "H" {
                    h = Some(expr(value)?);
                } else if let Some(sym) = lhs.strip_suffix('\'') {
                    rhs.push((sym.trim().to_string(), expr(value)?));
                } else {
                    return Err(syntax("expected `H = …` or `x' = …`"));
                }
            } else {
                return Err(syntax("unrecognised line"));
            }
        }

        let name = name.unwrap_or_else(|| "unnamed".to_string());
        let body = match (h, state) {
            (Some(h), None) => SourceBody::Hamiltonian {
                coords: coords.unwrap_or_default(),
                momenta: momenta.unwrap_or_default(),
                h,
            },
            (None, Some(state)) => SourceBody::Explicit { state, rhs },
            (Some(_), Some(_)) => {
                return Err(SystemDefError::Syntax {
                    line: 0,
                    message: "give either `H = …` or `state:`, not both".into(),
                })
            }
            (None, None) => return Err(SystemDefError::Empty),
        };
        Ok(SystemSource {
            name,
            params,
            angles,
            text: text.to_string(),
            body,
        })
    }

    /// Instantiate with parameter overrides (unknown names are rejected).
    pub fn build(&self, overrides: &[(String, Complex64)]) -> Result<SystemDef, SystemDefError> {
        let mut values = self.params.clone();
        for (k, v) in overrides {
            let slot = values
                .iter_mut()
                .find(|(name, _)| name == k)
                .ok_or_else(|| SystemDefError::UnknownParameter(k.clone()))?;
            slot.1 = *v;
        }
        let bind = |e: &Expr| {
            let bound = values
                .iter()
                .fold(e.clone(), |acc, (k, v)| acc.substitute(k, &Expr::Const(*v)));
            simplify(&bound)
        };
        let sys = match &self.body {
            SourceBody::Hamiltonian { coords, momenta, h } => {
                hamilton_equations(&self.name, &bind(h), coords, momenta)?
            }
            SourceBody::Explicit { state, rhs } => {
                let mut ordered = Vec::with_capacity(state.len());
                for s in state {
                    let e = rhs
                        .iter()
                        .find(|(sym, _)| sym == s)
                        .ok_or_else(|| SystemDefError::MissingEquation(s.clone()))?;
                    ordered.push(bind(&e.1));
                }
                if let Some((extra, _)) = rhs.iter().find(|(sym, _)| !state.contains(sym)) {
                    return Err(SystemDefError::UnknownSymbol(extra.clone()));
                }
                SystemDef::new(&self.name, state.clone(), ordered)?
            }
        };
        let angles: Vec<&str> = self.angles.iter().map(String::as_str).collect();
        Ok(sys.with_angles(&angles)?.with_source(self.text.clone()))
    }
}

/// Parse and build a system definition with default parameters.
pub fn parse_system(text: &str) -> Result<SystemDef, SystemDefError> {
    SystemSource::parse(text)?.build(&[])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn harmonic_oscillator_equations() {
        let h = parse("(p^2 + q^2)/2").unwrap();
        let sys = hamilton_equations("ho", &h, &names(&["q"]), &names(&["p"])).unwrap();
        let x = [c(0.3, 0.1), c(-1.2, 0.4)];
        let mut out = [c(0.0, 0.0); 2];
        sys.eval_rhs(&x, &mut out, &mut Vec::new()).unwrap();
        assert!((out[0] - x[1]).norm() < 1e-15);
        assert!((out[1] + x[0]).norm() < 1e-15);
        assert!(sys.is_hamiltonian);
    }

    #[test]
    fn scalar_jacobian() {
        let sys = SystemDef::new("sq", names(&["x"]), vec![parse("x^2").unwrap()]).unwrap();
        let mut a = [c(0.0, 0.0)];
        sys.eval_jacobian(&[c(1.5, -0.5)], &mut a, &mut Vec::new())
            .unwrap();
        assert!((a[0] - c(3.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_jacobian_is_constant() {
        let sys = SystemDef::new(
            "rot",
            names(&["x", "y"]),
            vec![parse("y").unwrap(), parse("-x").unwrap()],
        )
        .unwrap();
        assert_eq!(sys.jacobian[0][0], Expr::real(0.0));
        assert_eq!(sys.jacobian[0][1], Expr::real(1.0));
        assert_eq!(sys.jacobian[1][0], Expr::real(-1.0));
        assert_eq!(sys.jacobian[1][1], Expr::real(0.0));
    }

    #[test]
    fn hamilton_rejects_collision_and_odd_pairing() {
        let h = parse("p*q").unwrap();
        assert!(matches!(
            hamilton_equations("x", &h, &names(&["q"]), &names(&["q"])),
            Err(SystemDefError::SymbolCollision(_))
        ));
        assert!(matches!(
            hamilton_equations("x", &h, &names(&["q", "r"]), &names(&["p"])),
            Err(SystemDefError::OddPairing { .. })
        ));
        let h2 = parse("p*q*z").unwrap();
        assert!(matches!(
            hamilton_equations("x", &h2, &names(&["q"]), &names(&["p"])),
            Err(SystemDefError::UnknownSymbol(_))
        ));
    }

    #[test]
    fn definition_text_with_params_and_overrides() {
        let text = "name: lin\nparam a = 2\nstate: x y\nx' = a*y\ny' = -x # comment\nangles: x\n";
        let src = SystemSource::parse(text).unwrap();
        assert_eq!(src.params, vec![("a".to_string(), c(2.0, 0.0))]);
        let sys = src.build(&[("a".into(), c(3.0, 0.0))]).unwrap();
        assert_eq!(sys.angle_indices, vec![0]);
        let mut out = [c(0.0, 0.0); 2];
        sys.eval_rhs(&[c(1.0, 0.0), c(1.0, 0.0)], &mut out, &mut Vec::new())
            .unwrap();
        assert_eq!(out[0], c(3.0, 0.0));
        assert!(src.build(&[("b".into(), c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn definition_errors_carry_line_numbers() {
        let err = SystemSource::parse("state: x\nx' = (x +\n").unwrap_err();
        assert!(matches!(err, SystemDefError::Parse { line: 2, .. }));
        let err = parse_system("state: x y\nx' = y\n").unwrap_err();
        assert_eq!(err, SystemDefError::MissingEquation("y".into()));
        let err = parse_system("state: x\nx' = x*w\n").unwrap_err();
        assert_eq!(err, SystemDefError::UnknownSymbol("w".into()));
    }

    #[test]
    fn complex_parameter_value() {
        let src = SystemSource::parse("param c = 0.5 + 2*i\nstate: x\nx' = c*x\n").unwrap();
        assert_eq!(src.params[0].1, c(0.5, 2.0));
    }
}
