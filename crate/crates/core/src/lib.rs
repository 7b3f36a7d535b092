//! Numerical monodromy of complexified dynamical systems.
//!
//! A system `dx/dt = v(x)` is integrated together with its variational
//! matrix `dΞ/dt = A(x)·Ξ` along closed loops in complex time. When the
//! solution returns to its initial value, `Ξ` is an element of the monodromy
//! group of the variational equations; non-commuting elements obstruct
//! meromorphic integrability.
//!
//! Modules, bottom-up:
//! - [`expr`]: expression language, symbolic derivatives, system definitions
//! - [`cpath`]: paths in the complex time plane
//! - [`odeint`]: adaptive integration of the augmented system along a path
//! - [`monodromy`]: probing candidate points and scanning grids
//! - [`obstruction`]: commutators, symplectic and resonance diagnostics, verdicts
//! - [`systems`]: built-in catalog
//! - [`report`], [`config`], [`cli`]: reports, run configuration, command line

pub mod cli;
pub mod config;
pub mod cpath;
pub mod expr;
pub mod linalg;
pub mod monodromy;
pub mod obstruction;
pub mod odeint;
pub mod report;
pub mod systems;

pub use num_complex::Complex64;

/// Version recorded in reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
