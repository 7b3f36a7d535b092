//! Structural properties of the augmented integrator.

mod common;

use common::{c, close};
use monodromy_core::cpath::{loop_around, CPath};
use monodromy_core::expr::parse_system;
use monodromy_core::linalg::{self, CMatrix};
use monodromy_core::odeint::{integrate_augmented, integrate_trace, IntegratorOptions};
use monodromy_core::systems;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hh_x0() -> Vec<Complex64> {
    vec![c(1.0, 0.0), c(-0.4, 0.0), c(-1.25, 0.0), c(-0.3, 0.0)]
}

/// A bent path from t = 1 into the upper half plane and around.
fn wiggly_path() -> CPath {
    let a = CPath::polyline(&[c(1.0, 0.0), c(0.6, 0.8), c(0.2, 1.5)]);
    let arc = CPath::arc(c(0.2, 1.9), 0.4, -std::f64::consts::FRAC_PI_2, 4.0);
    a.compose(&arc).unwrap()
}

#[test]
fn determinant_follows_trace_integral() {
    let sys = parse_system("state: x y\nx' = x^2 + sin(y)\ny' = x*y - 0.5*y^2\n").unwrap();
    let x0 = [c(0.3, 0.1), c(-0.2, 0.4)];
    let path = CPath::polyline(&[c(0.0, 0.0), c(0.7, 0.3), c(0.4, 1.0)]);
    let opts = IntegratorOptions::default();
    let r = integrate_augmented(&sys, &path, &x0, &linalg::identity(2), &opts).unwrap();
    assert!(r.succeeded());
    let (_, integral, aborted) = integrate_trace(&sys, &path, &x0, &opts).unwrap();
    assert!(aborted.is_none());
    let expected = integral.exp();
    let det = r.end_state.xi.determinant();
    assert!((det - expected).norm() <= 1e-6 * expected.norm(), "{det} vs {expected}");

    // Hamiltonian case: det Ξ = 1.
    let hh = systems::henon_heiles(0.25, 1.0);
    let r = integrate_augmented(&hh, &wiggly_path(), &hh_x0(), &linalg::identity(4), &opts).unwrap();
    assert!(r.succeeded());
    assert!((r.end_state.xi.determinant() - 1.0).norm() <= 1e-6);
}

#[test]
fn reverse_path_undoes_the_flow() {
    let hh = systems::henon_heiles(0.25, 1.0);
    let opts = IntegratorOptions::default();
    let path = wiggly_path();
    let there = integrate_augmented(&hh, &path, &hh_x0(), &linalg::identity(4), &opts).unwrap();
    let back = integrate_augmented(
        &hh,
        &path.reversed(),
        &there.end_state.x,
        &there.end_state.xi,
        &opts,
    )
    .unwrap();
    let budget = 10.0 * opts.rel_tol;
    for (a, b) in back.end_state.x.iter().zip(hh_x0()) {
        assert!((a - b).norm() <= budget * (1.0 + b.norm()), "{a} vs {b}");
    }
    assert!(linalg::distance_from_identity(&back.end_state.xi) <= budget * 4.0);
}

#[test]
fn variational_matrix_is_linear_in_its_start() {
    let hh = systems::henon_heiles(0.25, 1.0);
    let opts = IntegratorOptions::default();
    let path = wiggly_path();
    let base = integrate_augmented(&hh, &path, &hh_x0(), &linalg::identity(4), &opts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let m = CMatrix::from_fn(4, 4, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let r = integrate_augmented(&hh, &path, &hh_x0(), &m, &opts).unwrap();
        let expected = &base.end_state.xi * &m;
        assert!(close(&r.end_state.xi, &expected, 1e-8));
    }
}

#[test]
fn tighter_tolerance_moves_the_result_within_the_estimate() {
    let hh = systems::henon_heiles(0.25, 1.0);
    let path = wiggly_path();
    for rel_tol in [1e-8, 1e-9, 1e-10] {
        let coarse_opts = IntegratorOptions {
            rel_tol,
            ..Default::default()
        };
        let fine_opts = IntegratorOptions {
            rel_tol: rel_tol / 2.0,
            ..Default::default()
        };
        let coarse = integrate_augmented(&hh, &path, &hh_x0(), &linalg::identity(4), &coarse_opts).unwrap();
        let fine = integrate_augmented(&hh, &path, &hh_x0(), &linalg::identity(4), &fine_opts).unwrap();
        let shift = coarse
            .end_state
            .x
            .iter()
            .zip(&fine.end_state.x)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(
            shift <= coarse.est_global_error,
            "rel_tol {rel_tol}: shift {shift:e} vs estimate {:e}",
            coarse.est_global_error
        );
    }
}

#[test]
fn energy_is_conserved_around_closed_loops() {
    let opts = IntegratorOptions::default();
    let cases = [
        (systems::henon_heiles(0.25, 1.0), hh_x0(), loop_around(c(1.0, 0.0), c(0.2, 2.5), 0.4, 1, &[]).unwrap()),
        (
            systems::satellite(),
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0)],
            loop_around(c(0.0, 0.0), c(4.8, 0.8), 0.3, 2, &[]).unwrap(),
        ),
        (
            systems::oracle_harmonic(),
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            loop_around(c(0.0, 0.0), c(1.0, 1.0), 0.5, 1, &[]).unwrap(),
        ),
    ];
    for (sys, x0, path) in cases {
        let r = integrate_augmented(&sys, &path, &x0, &linalg::identity(sys.dim()), &opts).unwrap();
        assert!(r.succeeded(), "{}", sys.name);
        let h0 = sys.energy(&x0).unwrap().unwrap();
        let h1 = sys.energy(&r.end_state.x).unwrap().unwrap();
        assert!((h1 - h0).norm() <= 1e-6 * (1.0 + h0.norm()), "{}: {h0} -> {h1}", sys.name);
    }
}
