//! Commutator tests on monodromy generators plus symplectic diagnostics.

use nalgebra::linalg::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::monodromy::{Classification, ScanReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstructionOptions {
    /// Threshold on `‖[T1,T2]‖_F / (1 + ‖T1‖_F·‖T2‖_F)`.
    pub comm_tol: f64,
    /// Exponent bound for the non-resonance search.
    pub k_max: u32,
    /// Tolerance for pairing eigenvalues as `λ`, `1/λ`.
    pub pair_tol: f64,
    /// Tolerance on `|λ^k − 1|` for a multiplicative relation.
    pub resonance_tol: f64,
}

impl Default for ObstructionOptions {
    fn default() -> Self {
        ObstructionOptions {
            comm_tol: 1e-4,
            k_max: 6,
            pair_tol: 1e-4,
            resonance_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObstructionError {
    #[error("matrix dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension {0} is odd")]
    OddDimension(usize),
    #[error("eigenvalue computation did not converge")]
    EigenSolver,
    #[error("{0} eigenvalues could not be paired with a reciprocal")]
    Unpaired(usize),
}

fn require_square(m: &CMatrix) -> Result<usize, ObstructionError> {
    if m.nrows() != m.ncols() {
        return Err(ObstructionError::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

fn require_even(m: &CMatrix) -> Result<usize, ObstructionError> {
    let n = require_square(m)?;
    if n % 2 == 1 {
        return Err(ObstructionError::OddDimension(n));
    }
    Ok(n)
}

/// `T1·T2 − T2·T1`.
pub fn commutator(t1: &CMatrix, t2: &CMatrix) -> Result<CMatrix, ObstructionError> {
    require_square(t1)?;
    require_square(t2)?;
    if t1.shape() != t2.shape() {
        return Err(ObstructionError::DimensionMismatch(
            t1.nrows(),
            t1.ncols(),
            t2.nrows(),
            t2.ncols(),
        ));
    }
    Ok(t1 * t2 - t2 * t1)
}

/// A pair of generators whose commutator clears the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Indices into the generator list, `first < second`.
    pub first: usize,
    pub second: usize,
    /// Raw Frobenius norm of the commutator.
    pub norm: f64,
    /// Norm divided by `1 + ‖T1‖·‖T2‖`.
    pub relative: f64,
    #[serde(with = "linalg::serde_rows")]
    pub commutator: CMatrix,
}

/// Every unordered pair with relative commutator norm above `tol`, sorted by
/// descending norm.
pub fn noncommuting_pairs(generators: &[CMatrix], tol: f64) -> Result<Vec<Witness>, ObstructionError> {
    let mut out = Vec::new();
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            let (a, b) = (&generators[i], &generators[j]);
            let c = commutator(a, b)?;
            let norm = linalg::frobenius(&c);
            let relative = norm / (1.0 + linalg::frobenius(a) * linalg::frobenius(b));
            if relative > tol {
                out.push(Witness {
                    first: i,
                    second: j,
                    norm,
                    relative,
                    commutator: c,
                });
            }
        }
    }
    out.sort_by(|a, b| b.norm.total_cmp(&a.norm));
    Ok(out)
}

/// `‖Tᵀ·J·T − J‖_F`, with `J` in (q-block, p-block) ordering.
pub fn check_symplectic(t: &CMatrix) -> Result<f64, ObstructionError> {
    require_even(t)?;
    Ok(linalg::symplectic_residual(t))
}

pub fn eigenvalues(t: &CMatrix) -> Result<Vec<Complex64>, ObstructionError> {
    let n = require_square(t)?;
    let schur = Schur::try_new(t.clone(), 1e-15, 10_000).ok_or(ObstructionError::EigenSolver)?;
    let (_, upper) = schur.unpack();
    Ok((0..n).map(|k| upper[(k, k)]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairing {
    /// `(λ, μ)` with `λ·μ ≈ 1` and `|λ| ≥ |μ|`.
    pub pairs: Vec<(Complex64, Complex64)>,
    pub leftovers: Vec<Complex64>,
}

/// Greedily pair eigenvalues of `t` into reciprocal couples.
///
/// Eigenvalues are visited by decreasing modulus; each is matched with the
/// remaining eigenvalue `μ` minimising `|λ·μ − 1|`, if that is within `tol`.
pub fn eigen_reciprocal_pairs(t: &CMatrix, tol: f64) -> Result<EigenPairing, ObstructionError> {
    require_even(t)?;
    Ok(pair_reciprocals(eigenvalues(t)?, tol))
}

fn pair_reciprocals(mut eig: Vec<Complex64>, tol: f64) -> EigenPairing {
    eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(b.arg().total_cmp(&a.arg())));
    let mut used = vec![false; eig.len()];
    let mut pairs = Vec::new();
    let mut leftovers = Vec::new();
    for i in 0..eig.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let best = (0..eig.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (eig[i] * eig[j] - 1.0).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, err)) if err <= tol => {
                used[j] = true;
                let (a, b) = if eig[i].norm() >= eig[j].norm() {
                    (eig[i], eig[j])
                } else {
                    (eig[j], eig[i])
                };
                pairs.push((a, b));
            }
            _ => leftovers.push(eig[i]),
        }
    }
    EigenPairing { pairs, leftovers }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub nonresonant: bool,
    /// The multipliers tested, one per eigenvalue pair.
    pub multipliers: Vec<Complex64>,
    /// Exponents of the first relation found, if any.
    pub witness: Option<Vec<i32>>,
}

/// Search for `λ_1^{k_1}···λ_p^{k_p} = 1` among the multipliers of `t`.
///
/// One multiplier per reciprocal pair is chosen: the one of modulus at least
/// one, or of larger argument on the unit circle. Pairing uses
/// [`ObstructionOptions::default`]'s `pair_tol`.
pub fn nonresonant(t: &CMatrix, k_max: u32, tol: f64) -> Result<Resonance, ObstructionError> {
    let pairing = eigen_reciprocal_pairs(t, ObstructionOptions::default().pair_tol)?;
    if !pairing.leftovers.is_empty() {
        return Err(ObstructionError::Unpaired(pairing.leftovers.len()));
    }
    let multipliers: Vec<Complex64> = pairing.pairs.iter().map(|&(a, b)| choose(a, b)).collect();
    Ok(nonresonant_multipliers(&multipliers, k_max, tol))
}

fn choose(a: Complex64, b: Complex64) -> Complex64 {
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() <= 1e-12 * ma.max(mb) {
        if a.arg() >= b.arg() {
            a
        } else {
            b
        }
    } else if ma > mb {
        a
    } else {
        b
    }
}

/// Exhaustive search over `|k_i| ≤ k_max`, not all zero.
///
/// Candidates are tried by increasing `Σ|k_i|`; a relation and its negation
/// are the same, so the witness has its first non-zero exponent positive.
pub fn nonresonant_multipliers(lambdas: &[Complex64], k_max: u32, tol: f64) -> Resonance {
    let p = lambdas.len();
    let k = k_max as i32;
    let base = 2 * k as u64 + 1;
    let total = if p == 0 || k_max == 0 { 0 } else { base.pow(p as u32) };
    let mut vectors: Vec<Vec<i32>> = (0..total)
        .map(|mut code| {
            let mut v = vec![0; p];
            for slot in v.iter_mut().rev() {
                *slot = (code % base) as i32 - k;
                code /= base;
            }
            v
        })
        .filter(|v| matches!(v.iter().find(|&&e| e != 0), Some(&e) if e > 0))
        .collect();
    let degree = |v: &Vec<i32>| v.iter().map(|x| x.abs()).sum::<i32>();
    // Stable: ties keep the larger-first-component order.
    vectors.sort_by(|a, b| degree(a).cmp(&degree(b)).then(b.cmp(a)));
    let witness = vectors.into_iter().find(|v| {
        let prod = v
            .iter()
            .zip(lambdas)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, l)| acc * l.powi(e));
        (prod - 1.0).norm() <= tol
    });
    Resonance {
        nonresonant: witness.is_none(),
        multipliers: lambdas.to_vec(),
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conclusion {
    ObstructionFound,
    NoObstructionFound,
    Inconclusive,
}

/// Per-generator diagnostics attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDiagnostics {
    pub index: usize,
    pub candidate: Complex64,
    pub traversals: u32,
    pub det_residual: f64,
    pub symplectic_residual: Option<f64>,
    pub eigen_pairing: Option<EigenPairing>,
    pub resonance: Option<Resonance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionVerdict {
    pub conclusion: Conclusion,
    pub witnesses: Vec<Witness>,
    pub notes: Vec<String>,
    pub diagnostics: Vec<GeneratorDiagnostics>,
    pub options: ObstructionOptions,
}

/// Judge a report by the commutators of its generators.
///
/// Any witness gives an obstruction. Otherwise non-returning probes (possible
/// logarithmic branching) or a report in which every probe aborted leave the
/// question open, and only a clean report yields "no obstruction found".
pub fn verdict(
    report: &ScanReport,
    opts: &ObstructionOptions,
) -> Result<ObstructionVerdict, ObstructionError> {
    let gens = report.generators();
    let matrices: Vec<CMatrix> = gens.iter().map(|g| g.matrix.clone()).collect();
    let witnesses = noncommuting_pairs(&matrices, opts.comm_tol)?;
    let mut notes = Vec::new();

    let mut diagnostics = Vec::with_capacity(gens.len());
    for (index, g) in gens.iter().enumerate() {
        let t = &g.matrix;
        let even = t.nrows() % 2 == 0;
        let symplectic_residual = even.then(|| linalg::symplectic_residual(t));
        let eigen_pairing = if even {
            eigen_reciprocal_pairs(t, opts.pair_tol).ok()
        } else {
            None
        };
        let resonance = match &eigen_pairing {
            Some(p) if p.leftovers.is_empty() => {
                let m: Vec<Complex64> = p.pairs.iter().map(|&(a, b)| choose(a, b)).collect();
                Some(nonresonant_multipliers(&m, opts.k_max, opts.resonance_tol))
            }
            _ => None,
        };
        let det_residual = (t.determinant() - 1.0).norm();
        notes.push(generator_note(index, det_residual, symplectic_residual, &eigen_pairing, &resonance));
        diagnostics.push(GeneratorDiagnostics {
            index,
            candidate: g.candidate,
            traversals: g.traversals,
            det_residual,
            symplectic_residual,
            eigen_pairing,
            resonance,
        });
    }

    let non_returning = report.count(Classification::NonReturning);
    let aborted = report.count(Classification::Aborted);
    let skipped = report.count(Classification::Skipped);
    if non_returning > 0 {
        notes.push(format!(
            "{non_returning} probe(s) did not return; the branching there may be logarithmic and has no generator"
        ));
    }
    if aborted > 0 {
        notes.push(format!("{aborted} probe(s) aborted during integration"));
    }
    if skipped > 0 {
        notes.push(format!("{skipped} grid node(s) skipped inside the base-point guard disk"));
    }

    let conclusion = if !witnesses.is_empty() {
        Conclusion::ObstructionFound
    } else if non_returning > 0 || report.all_aborted() {
        Conclusion::Inconclusive
    } else {
        let found = match gens.len() {
            0 => "no generators found".to_string(),
            1 => "only one generator found".to_string(),
            n => format!("all {n} generators commute"),
        };
        notes.push(format!("{found}; retry with different initial data or candidate points"));
        Conclusion::NoObstructionFound
    };
    Ok(ObstructionVerdict {
        conclusion,
        witnesses,
        notes,
        diagnostics,
        options: *opts,
    })
}

fn generator_note(
    index: usize,
    det: f64,
    symp: Option<f64>,
    pairing: &Option<EigenPairing>,
    resonance: &Option<Resonance>,
) -> String {
    let mut s = format!("generator {index}: |det-1| = {det:.3e}");
    if let Some(r) = symp {
        s.push_str(&format!(", symplectic residual = {r:.3e}"));
    }
    if let Some(p) = pairing {
        s.push_str(&format!(
            ", {} reciprocal pair(s), {} leftover(s)",
            p.pairs.len(),
            p.leftovers.len()
        ));
    }
    match resonance {
        Some(r) if r.nonresonant => s.push_str(", non-resonant"),
        Some(r) => s.push_str(&format!(", resonant with exponents {:?}", r.witness.as_deref().unwrap_or(&[]))),
        None => {}
    }
    s
}
