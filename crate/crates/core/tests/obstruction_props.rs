//! Commutator algebra, the resonance search and the verdict rules.

mod common;

use common::{all_vectors, c, close, product, random_multipliers};
use monodromy_core::cpath::CPath;
use monodromy_core::linalg::{self, CMatrix};
use monodromy_core::monodromy::{
    Classification, MonodromyGenerator, ProbeOptions, ProbeOutcome, Residuals, ScanReport,
};
use monodromy_core::obstruction::{
    check_symplectic, commutator, eigen_reciprocal_pairs, nonresonant, nonresonant_multipliers,
    noncommuting_pairs, verdict, Conclusion, ObstructionOptions,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

#[test]
fn commutator_is_antisymmetric_and_bilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let (a, b, d) = (random_matrix(&mut rng, 4), random_matrix(&mut rng, 4), random_matrix(&mut rng, 4));
        let s = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        assert!(close(&ab, &(-ba), 1e-12));
        let lhs = commutator(&(&a * s + &d), &b).unwrap();
        let rhs = ab * s + commutator(&d, &b).unwrap();
        assert!(close(&lhs, &rhs, 1e-12));
        assert!(linalg::frobenius(&commutator(&a, &a).unwrap()) <= 1e-12);
    }
    assert!(commutator(&random_matrix(&mut rng, 2), &random_matrix(&mut rng, 4)).is_err());
}

#[test]
fn resonance_search_agrees_with_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = 1e-9;
    let mut resonant_cases = 0;
    for _ in 0..50 {
        let p = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=4);
        let lambdas = random_multipliers(&mut rng, p);
        let relations: Vec<Vec<i32>> = all_vectors(p, k)
            .into_iter()
            .filter(|v| v.iter().any(|&e| e != 0))
            .filter(|v| (product(&lambdas, v) - 1.0).norm() <= tol)
            .collect();
        let r = nonresonant_multipliers(&lambdas, k as u32, tol);
        assert_eq!(r.nonresonant, relations.is_empty(), "{lambdas:?} k={k}");
        if let Some(w) = &r.witness {
            resonant_cases += 1;
            assert!(relations.contains(w));
            assert!(*w.iter().find(|&&e| e != 0).unwrap() > 0);
            let degree = |v: &Vec<i32>| v.iter().map(|e| e.abs()).sum::<i32>();
            let least = relations.iter().map(degree).min().unwrap();
            assert_eq!(degree(w), least);
        }
    }
    assert!(resonant_cases >= 10, "only {resonant_cases} resonant cases drawn");
}

#[test]
fn resonance_of_a_symplectic_matrix() {
    // diag(λ1, λ2, 1/λ1, 1/λ2) in (q, p) ordering is symplectic.
    let l1 = c(2.0, 0.0);
    let diag = |l2: Complex64| {
        CMatrix::from_diagonal(&nalgebra_diag(&[l1, l2, 1.0 / l1, 1.0 / l2]))
    };
    let free = diag(Complex64::from_polar(1.3, 0.7));
    assert!(check_symplectic(&free).unwrap() <= 1e-12);
    assert!(nonresonant(&free, 6, 1e-9).unwrap().nonresonant);
    let tied = diag(c(4.0, 0.0));
    let r = nonresonant(&tied, 6, 1e-9).unwrap();
    assert_eq!(r.multipliers, vec![c(4.0, 0.0), c(2.0, 0.0)]);
    assert_eq!(r.witness, Some(vec![1, -2]));
    let pairing = eigen_reciprocal_pairs(&tied, 1e-9).unwrap();
    assert_eq!(pairing.pairs.len(), 2);
    assert!(pairing.leftovers.is_empty());
}

fn nalgebra_diag(d: &[Complex64]) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(d)
}

fn generator_outcome(candidate: Complex64, t: CMatrix) -> ProbeOutcome {
    let n = t.nrows();
    ProbeOutcome {
        candidate,
        classification: Classification::Generator,
        generator: Some(MonodromyGenerator {
            matrix: t.clone(),
            path: CPath::circle(candidate, 0.1),
            traversals: 1,
            base_point: c(0.0, 0.0),
            candidate,
            initial_x: vec![c(0.0, 0.0); n],
            residuals: Residuals {
                return_residual: 0.0,
                det_residual: None,
                symplectic_residual: None,
            },
            est_error: 0.0,
        }),
        traversals_used: 1,
        return_residual: Some(0.0),
        matrix_distance: Some(linalg::distance_from_identity(&t)),
        matrix: Some(t),
        abort_reason: None,
    }
}

fn bare(candidate: Complex64, classification: Classification) -> ProbeOutcome {
    ProbeOutcome {
        candidate,
        classification,
        generator: None,
        traversals_used: 0,
        return_residual: None,
        matrix_distance: None,
        matrix: None,
        abort_reason: None,
    }
}

fn report(outcomes: Vec<ProbeOutcome>) -> ScanReport {
    ScanReport {
        t0: c(0.0, 0.0),
        x0: vec![c(0.0, 0.0); 2],
        domain: None,
        grid: None,
        radius: 0.1,
        options: ProbeOptions::default(),
        outcomes,
    }
}

fn shear(a: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(a, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
}

fn lower_shear(a: f64) -> CMatrix {
    shear(a).transpose()
}

#[test]
fn verdict_rules() {
    let opts = ObstructionOptions::default();
    let conclude = |o: Vec<ProbeOutcome>| verdict(&report(o), &opts).unwrap().conclusion;

    // Commuting shears: nothing found, retry note attached.
    let v = verdict(
        &report(vec![generator_outcome(c(1.0, 0.0), shear(1.0)), generator_outcome(c(2.0, 0.0), shear(2.0))]),
        &opts,
    )
    .unwrap();
    assert_eq!(v.conclusion, Conclusion::NoObstructionFound);
    assert!(v.notes.iter().any(|n| n.contains("retry")));

    // A possible logarithmic point keeps commuting generators inconclusive.
    assert_eq!(
        conclude(vec![
            generator_outcome(c(1.0, 0.0), shear(1.0)),
            generator_outcome(c(2.0, 0.0), shear(2.0)),
            bare(c(3.0, 0.0), Classification::NonReturning),
        ]),
        Conclusion::Inconclusive
    );

    // Every probe aborted.
    assert_eq!(
        conclude(vec![bare(c(1.0, 0.0), Classification::Aborted), bare(c(2.0, 0.0), Classification::Skipped)]),
        Conclusion::Inconclusive
    );

    // A single generator cannot witness anything.
    assert_eq!(conclude(vec![generator_outcome(c(1.0, 0.0), shear(1.0))]), Conclusion::NoObstructionFound);

    // Upper and lower shears do not commute, whatever else is present.
    let v = verdict(
        &report(vec![
            generator_outcome(c(1.0, 0.0), shear(1.0)),
            bare(c(1.5, 0.0), Classification::NonReturning),
            generator_outcome(c(2.0, 0.0), lower_shear(1.0)),
        ]),
        &opts,
    )
    .unwrap();
    assert_eq!(v.conclusion, Conclusion::ObstructionFound);
    assert_eq!((v.witnesses[0].first, v.witnesses[0].second), (0, 1));
    assert!((v.witnesses[0].norm - linalg::frobenius(&commutator(&shear(1.0), &lower_shear(1.0)).unwrap())).abs() < 1e-12);
}

#[test]
fn more_generators_never_undo_an_obstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = ObstructionOptions::default();
    for _ in 0..30 {
        let mut outcomes = vec![
            generator_outcome(c(0.0, 1.0), shear(rng.gen_range(0.5..2.0))),
            generator_outcome(c(0.0, 2.0), lower_shear(rng.gen_range(0.5..2.0))),
        ];
        assert_eq!(verdict(&report(outcomes.clone()), &opts).unwrap().conclusion, Conclusion::ObstructionFound);
        for k in 0..4 {
            let extra = match rng.gen_range(0..3) {
                0 => generator_outcome(c(k as f64, 0.0), random_matrix(&mut rng, 2)),
                1 => bare(c(k as f64, 0.0), Classification::NonReturning),
                _ => bare(c(k as f64, 0.0), Classification::Aborted),
            };
            outcomes.push(extra);
            let v = verdict(&report(outcomes.clone()), &opts).unwrap();
            assert_eq!(v.conclusion, Conclusion::ObstructionFound);
        }
    }
}

#[test]
fn witnesses_are_sorted_and_thresholded() {
    let gens = vec![shear(1.0), lower_shear(0.001), lower_shear(2.0), shear(3.0)];
    let w = noncommuting_pairs(&gens, 1e-4).unwrap();
    assert!(w.windows(2).all(|p| p[0].norm >= p[1].norm));
    assert!(w.iter().all(|x| x.first < x.second && x.relative > 1e-4));
    // Shears in the same direction never appear.
    assert!(!w.iter().any(|x| (x.first, x.second) == (0, 3) || (x.first, x.second) == (1, 2)));
    let strict = noncommuting_pairs(&gens, 1e3).unwrap();
    assert!(strict.is_empty());
}
