//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::TAU;

use monodromy_core::expr::{parse_system, SystemDef};
use monodromy_core::linalg::CMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A linear Hamiltonian system with two regular singular points at
/// `1 ± i`. The extra coordinate `tau` carries the time, so the base solution
/// `(t, 0, 0, 0)` is single-valued while the `(q, p)` block of the variational
/// matrix picks up non-commuting local monodromies `exp(2πi·B_k)` with
/// residues of eigenvalues `±0.3` and `±0.25`.
pub const FUCHSIAN: &str = "\
name: fuchsian_pair
param c1 = 1 + i
param c2 = 1 - i
coords: tau q
momenta: ptau p
H = ptau + (2*0.3*q*p)/(2*(tau - c1)) + (-0.25*q^2 + 0.25*p^2)/(2*(tau - c2))
";

pub fn fuchsian() -> SystemDef {
    parse_system(FUCHSIAN).unwrap()
}

pub fn fuchsian_x0(t0: Complex64) -> Vec<Complex64> {
    vec![t0, c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
}

/// Entrywise `|a − b| ≤ tol·(1 + |b|)`.
pub fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol * (1.0 + y.norm()))
}

pub fn max_entry_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Every exponent vector in `[-k, k]^p`, generated by plain recursion.
pub fn all_vectors(p: usize, k: i32) -> Vec<Vec<i32>> {
    if p == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for head in -k..=k {
        for mut tail in all_vectors(p - 1, k) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

pub fn product(lambdas: &[Complex64], v: &[i32]) -> Complex64 {
    v.iter().zip(lambdas).map(|(&e, l)| l.powi(e)).product()
}

pub fn random_multipliers(rng: &mut ChaCha8Rng, p: usize) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(p);
    for i in 0..p {
        let z = match rng.gen_range(0..4) {
            // Root of unity of small order.
            0 => Complex64::from_polar(1.0, TAU * rng.gen_range(1..5) as f64 / rng.gen_range(2..6) as f64),
            // A power or ratio of an earlier multiplier.
            1 if i > 0 => {
                let j = rng.gen_range(0..i);
                out[j].powi(rng.gen_range(-3..4))
            }
            _ => Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-3.0..3.0)),
        };
        out.push(z);
    }
    out
}
