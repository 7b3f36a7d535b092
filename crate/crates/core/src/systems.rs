//! Built-in systems, each defined by DSL text that users can copy.
//!
//! State orderings are fixed per entry, since monodromy matrices depend on
//! the basis.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{SystemDef, SystemDefError, SystemSource};

const HENON_HEILES: &str = "\
name: henon_heiles
param A = 0.25
param lambda = 1
coords: q1 q2
momenta: p1 p2
H = (p1^2 + p2^2)/2 - q2^2*(A + q1) - lambda/3*q1^3
";

const SATELLITE: &str = "\
name: satellite
coords: psi theta
momenta: p_psi p_theta
angles: psi theta
H = p_psi^2/(2*sin(theta)^2) + p_theta^2/2 - p_psi + sin(psi)^2*sin(theta)^2/2
";

const ORACLE_RICCATI: &str = "\
name: oracle_riccati
# x = x0/(1 - x0*t): a simple pole, single-valued
state: x
x' = x^2
";

const ORACLE_CUBIC: &str = "\
name: oracle_cubic
# x = (x0^-2 - 2t)^(-1/2): a square-root branch point
state: x
x' = x^3
";

const ORACLE_LINEAR_POLE: &str = "\
name: oracle_linear_pole
# tau carries the time, so tau(t) = t when started at tau = t0;
# xi = (tau - c)^lambda up to a constant
param lambda = 0.5
param c = 0
state: tau xi
tau' = 1
xi' = lambda*xi/(tau - c)
";

const ORACLE_HARMONIC: &str = "\
name: oracle_harmonic
coords: q
momenta: p
H = (p^2 + q^2)/2
";

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no built-in system named `{0}`")]
    UnknownSystem(String),
    #[error(transparent)]
    Definition(#[from] SystemDefError),
}

/// A published or illustrative probe setup for an entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSetup {
    pub x0: Vec<Complex64>,
    pub t0: Complex64,
    pub candidates: Vec<Complex64>,
    /// Laps per probe observed for the published run, if stated.
    pub traversals: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub default: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub state: Vec<String>,
    pub angles: Vec<String>,
    pub params: Vec<ParamSpec>,
    pub reference: Option<ReferenceSetup>,
    pub source: &'static str,
}

impl CatalogEntry {
    /// Build with parameter overrides; unknown parameter names are rejected.
    pub fn build(&self, params: &[(String, Complex64)]) -> Result<SystemDef, SystemDefError> {
        SystemSource::parse(self.source)?.build(params)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn entry(
    source: &'static str,
    description: &'static str,
    reference: Option<ReferenceSetup>,
) -> CatalogEntry {
    let parsed = SystemSource::parse(source).expect("built-in source parses");
    let sys = parsed.build(&[]).expect("built-in source builds");
    CatalogEntry {
        name: static_name(&parsed.name),
        description,
        state: sys.state_symbols.clone(),
        angles: parsed.angles.clone(),
        params: parsed
            .params
            .iter()
            .map(|(name, default)| ParamSpec {
                name: name.clone(),
                default: *default,
            })
            .collect(),
        reference,
        source,
    }
}

fn static_name(name: &str) -> &'static str {
    NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .expect("built-in name is registered")
}

/// Names of the built-in systems, in listing order.
pub const NAMES: [&str; 6] = [
    "henon_heiles",
    "satellite",
    "oracle_riccati",
    "oracle_cubic",
    "oracle_linear_pole",
    "oracle_harmonic",
];

/// All built-in entries, in listing order.
pub fn catalog() -> Vec<CatalogEntry> {
    vec![
        entry(
            HENON_HEILES,
            "Hénon–Heiles family, H = (p1²+p2²)/2 − q2²(A+q1) − λq1³/3",
            Some(ReferenceSetup {
                x0: vec![c(1.0, 0.0), c(-0.4, 0.0), c(-1.25, 0.0), c(-0.3, 0.0)],
                t0: c(1.0, 0.0),
                candidates: vec![c(0.2, 2.5), c(0.2, -2.5)],
                traversals: None,
            }),
        ),
        entry(
            SATELLITE,
            "symmetric satellite on a circular orbit; angles psi, theta are 2π-periodic",
            Some(ReferenceSetup {
                x0: vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)],
                t0: c(0.0, 0.0),
                candidates: vec![c(4.8, 0.8), c(4.8, -0.8)],
                traversals: Some(2),
            }),
        ),
        entry(
            ORACLE_RICCATI,
            "x' = x², pole at t = 1/x0 (single-valued)",
            Some(ReferenceSetup {
                x0: vec![c(1.0, 0.0)],
                t0: c(0.0, 0.0),
                candidates: vec![c(1.0, 0.0)],
                traversals: Some(1),
            }),
        ),
        entry(
            ORACLE_CUBIC,
            "x' = x³, square-root branch point at t = 1/(2x0²)",
            Some(ReferenceSetup {
                x0: vec![c(1.0, 0.0)],
                t0: c(0.0, 0.0),
                candidates: vec![c(0.5, 0.0)],
                traversals: Some(2),
            }),
        ),
        entry(
            ORACLE_LINEAR_POLE,
            "xi' = λ·xi/(t − c); one loop around c multiplies xi by exp(2πiλ)",
            Some(ReferenceSetup {
                x0: vec![c(1.0, 0.0), c(1.0, 0.0)],
                t0: c(1.0, 0.0),
                candidates: vec![c(0.0, 0.0)],
                traversals: None,
            }),
        ),
        entry(
            ORACLE_HARMONIC,
            "harmonic oscillator, entire flow",
            Some(ReferenceSetup {
                x0: vec![c(1.0, 0.0), c(0.0, 0.0)],
                t0: c(0.0, 0.0),
                candidates: vec![c(1.0, 1.0)],
                traversals: Some(1),
            }),
        ),
    ]
}

pub fn lookup(name: &str) -> Result<CatalogEntry, CatalogError> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CatalogError::UnknownSystem(name.to_string()))
}

/// Build a catalog entry by name.
pub fn build(name: &str, params: &[(String, Complex64)]) -> Result<SystemDef, CatalogError> {
    Ok(lookup(name)?.build(params)?)
}

fn real_params(pairs: &[(&str, Complex64)]) -> Vec<(String, Complex64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// State order `(q1, q2, p1, p2)`.
pub fn henon_heiles(a: f64, lambda: f64) -> SystemDef {
    build(
        "henon_heiles",
        &real_params(&[("A", c(a, 0.0)), ("lambda", c(lambda, 0.0))]),
    )
    .expect("built-in")
}

/// State order `(psi, theta, p_psi, p_theta)`, angles `{psi, theta}`.
pub fn satellite() -> SystemDef {
    build("satellite", &[]).expect("built-in")
}

pub fn oracle_riccati() -> SystemDef {
    build("oracle_riccati", &[]).expect("built-in")
}

pub fn oracle_cubic() -> SystemDef {
    build("oracle_cubic", &[]).expect("built-in")
}

/// State `(tau, xi)`; start it at `tau = t0` so that `tau` tracks time.
pub fn oracle_linear_pole(lambda: Complex64, center: Complex64) -> SystemDef {
    build(
        "oracle_linear_pole",
        &real_params(&[("lambda", lambda), ("c", center)]),
    )
    .expect("built-in")
}

/// State `(q, p)`.
pub fn oracle_harmonic() -> SystemDef {
    build("oracle_harmonic", &[]).expect("built-in")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::EvalError;

    fn rhs(sys: &SystemDef, x: &[Complex64]) -> Result<Vec<Complex64>, EvalError> {
        let mut out = vec![Complex64::default(); sys.dim()];
        sys.eval_rhs(x, &mut out, &mut Vec::new())?;
        Ok(out)
    }

    #[test]
    fn listing_order_and_lookup() {
        let names: Vec<&str> = catalog().iter().map(|e| e.name).collect();
        assert_eq!(names, NAMES);
        assert!(matches!(lookup("pendulum"), Err(CatalogError::UnknownSystem(_))));
    }

    #[test]
    fn henon_heiles_rhs_at_reference_point() {
        let sys = henon_heiles(0.25, 1.0);
        assert!(sys.is_hamiltonian);
        assert_eq!(sys.state_symbols, ["q1", "q2", "p1", "p2"]);
        let v = rhs(&sys, &[c(1.0, 0.0), c(-0.4, 0.0), c(-1.25, 0.0), c(-0.3, 0.0)]).unwrap();
        let expected = [c(-1.25, 0.0), c(-0.3, 0.0), c(1.16, 0.0), c(-1.0, 0.0)];
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).norm() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn satellite_rhs_at_reference_point() {
        let sys = satellite();
        assert_eq!(sys.angle_indices, vec![0, 1]);
        let v = rhs(&sys, &[c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)]).unwrap();
        let expected = 0.1 / 1f64.sin().powi(2) - 1.0;
        assert!((v[0].re - expected).abs() < 1e-14);
        assert!((v[0].re + 0.858772).abs() < 1e-6);
        assert_eq!(v[1], c(0.0, 0.0));
        let err = rhs(&sys, &[c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)]);
        assert!(matches!(err, Err(EvalError::Singular(_))));
    }

    #[test]
    fn parameter_overrides() {
        let e = lookup("henon_heiles").unwrap();
        assert_eq!(e.params.len(), 2);
        assert!(e
            .build(&[("nope".to_string(), c(1.0, 0.0))])
            .is_err());
        // With A = λ = 0 only the -q1·q2² coupling survives.
        let reduced = henon_heiles(0.0, 0.0);
        let v = rhs(&reduced, &[c(1.0, 0.0), c(-0.4, 0.0), c(-1.25, 0.0), c(-0.3, 0.0)]).unwrap();
        assert!((v[2] - c(0.16, 0.0)).norm() < 1e-14);
        assert!((v[3] - c(-0.8, 0.0)).norm() < 1e-14);
    }
}
