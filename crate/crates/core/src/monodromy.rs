//! Probing candidate singularities with loops and classifying the outcome.
//!
//! A probe integrates the base solution and its variational matrix along a
//! loop around one candidate point, repeating the lap until `x` comes back to
//! its starting value. The accumulated matrix is then a monodromy generator,
//! or trivial if it is the identity.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpath::{loop_legs, CPath, LoopLegs, PathError};
use crate::expr::SystemDef;
use crate::linalg::{self, CMatrix};
use crate::odeint::{integrate_augmented, AbortReason, IntegrateError, IntegratorOptions};

/// Loop radius used by [`probe`] when none is given.
pub const DEFAULT_PROBE_RADIUS: f64 = 0.4;
/// Scan radius as a fraction of the grid spacing.
pub const SCAN_RADIUS_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeOptions {
    /// Loop radius; `None` picks [`DEFAULT_PROBE_RADIUS`] for single probes
    /// and a spacing-derived radius for scans.
    pub radius: Option<f64>,
    /// `+1` counterclockwise, `-1` clockwise.
    pub orientation: i8,
    /// Points the approach leg passes through before heading to the circle.
    pub waypoints: Vec<Complex64>,
    pub return_tol: f64,
    pub matrix_tol: f64,
    pub max_traversals: u32,
    /// Carried separately in configs and reports.
    #[serde(skip)]
    pub integrator: IntegratorOptions,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            radius: None,
            orientation: 1,
            waypoints: Vec::new(),
            return_tol: 1e-6,
            matrix_tol: 1e-6,
            max_traversals: 12,
            integrator: IntegratorOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("candidate coincides with the base point")]
    CandidateAtBase,
    #[error("max_traversals must be at least 1")]
    NoTraversals,
    #[error("orientation must be +1 or -1, got {0}")]
    Orientation(i8),
    #[error("tolerances must be positive")]
    Tolerance,
    #[error("loop geometry: {0}")]
    Path(#[from] PathError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// `x` returned and `Ξ` is the identity.
    Trivial,
    /// `x` returned with a non-identity `Ξ`.
    Generator,
    /// `x` did not return within the traversal budget.
    NonReturning,
    /// Integration failed.
    Aborted,
    /// Grid node inside the guard disk around the base point; not probed.
    Skipped,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Trivial => "Trivial",
            Classification::Generator => "Generator",
            Classification::NonReturning => "NonReturning",
            Classification::Aborted => "Aborted",
            Classification::Skipped => "Skipped",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub return_residual: f64,
    /// `|det T − 1|`, only meaningful for Hamiltonian systems.
    pub det_residual: Option<f64>,
    /// `‖TᵀJT − J‖_F`, Hamiltonian systems only.
    pub symplectic_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyGenerator {
    #[serde(with = "linalg::serde_rows")]
    pub matrix: CMatrix,
    /// The closed loop actually integrated, all laps included.
    #[serde(rename = "loop")]
    pub path: CPath,
    /// Laps needed for `x` to return (the branch order seen by the loop).
    pub traversals: u32,
    pub base_point: Complex64,
    pub candidate: Complex64,
    pub initial_x: Vec<Complex64>,
    pub residuals: Residuals,
    /// Summed local error estimates over all legs.
    pub est_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub candidate: Complex64,
    pub classification: Classification,
    pub generator: Option<MonodromyGenerator>,
    pub traversals_used: u32,
    /// Return distance after the last lap whose retreat leg completed.
    pub return_residual: Option<f64>,
    /// `‖Ξ − id‖_F` of the accumulated matrix when `x` returned.
    pub matrix_distance: Option<f64>,
    /// Accumulated loop matrix when `x` returned, trivial or not.
    #[serde(with = "linalg::serde_rows_opt", default)]
    pub matrix: Option<CMatrix>,
    pub abort_reason: Option<AbortReason>,
}

impl ProbeOutcome {
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

    pub fn residuals(&self) -> Option<Residuals> {
        self.generator.as_ref().map(|g| g.residuals)
    }
}

/// Max coordinate distance, with angle coordinates compared modulo `2π` in
/// their real part.
pub fn return_distance(
    a: &[Complex64],
    b: &[Complex64],
    angle_indices: &[usize],
) -> Result<f64, ProbeError> {
    if a.len() != b.len() {
        return Err(ProbeError::LengthMismatch(a.len(), b.len()));
    }
    let mut worst: f64 = 0.0;
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        let d = x - y;
        let d = if angle_indices.contains(&k) {
            Complex64::new(wrap_angle(d.re), d.im)
        } else {
            d
        };
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

/// Reduce to `(−π, π]`.
fn wrap_angle(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).round();
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Probe `candidate` with a loop based at `t0`.
pub fn probe(
    sys: &SystemDef,
    x0: &[Complex64],
    t0: Complex64,
    candidate: Complex64,
    opts: &ProbeOptions,
) -> Result<ProbeOutcome, ProbeError> {
    let radius = opts.radius.unwrap_or(DEFAULT_PROBE_RADIUS);
    probe_with_radius(sys, x0, t0, candidate, radius, opts)
}

fn probe_with_radius(
    sys: &SystemDef,
    x0: &[Complex64],
    t0: Complex64,
    candidate: Complex64,
    radius: f64,
    opts: &ProbeOptions,
) -> Result<ProbeOutcome, ProbeError> {
    if candidate == t0 {
        return Err(ProbeError::CandidateAtBase);
    }
    if opts.max_traversals == 0 {
        return Err(ProbeError::NoTraversals);
    }
    if opts.orientation != 1 && opts.orientation != -1 {
        return Err(ProbeError::Orientation(opts.orientation));
    }
    if !(opts.return_tol > 0.0 && opts.matrix_tol > 0.0) {
        return Err(ProbeError::Tolerance);
    }
    let n = sys.dim();
    if x0.len() != n {
        return Err(ProbeError::LengthMismatch(x0.len(), n));
    }
    let legs = loop_legs(t0, candidate, radius, opts.orientation as i64, &opts.waypoints)?;
    let iopts = &opts.integrator;
    let id = linalg::identity(n);
    let aborted = |reason: Option<AbortReason>, used: u32, residual: Option<f64>| ProbeOutcome {
        traversals_used: used,
        return_residual: residual,
        abort_reason: reason,
        ..ProbeOutcome::bare(candidate, Classification::Aborted)
    };

    let approach = integrate_augmented(sys, &legs.approach, x0, &id, iopts)?;
    if approach.aborted.is_some() {
        return Ok(aborted(approach.aborted, 0, None));
    }
    let xi_a = approach.end_state.xi;
    let mut x = approach.end_state.x;
    let mut acc = linalg::identity(n);
    let mut est_error = approach.est_global_error;
    let retreat = legs.retreat();
    let mut residual = None;

    for k in 1..=opts.max_traversals {
        let lap = integrate_augmented(sys, &legs.lap, &x, &id, iopts)?;
        if lap.aborted.is_some() {
            return Ok(aborted(lap.aborted, k, residual));
        }
        est_error += lap.est_global_error;
        acc = &lap.end_state.xi * &acc;
        x = lap.end_state.x;

        // A retreat that fails means x is on another sheet: not returned.
        let back = integrate_augmented(sys, &retreat, &x, &id, iopts)?;
        if back.aborted.is_some() {
            continue;
        }
        let dist = return_distance(&back.end_state.x, x0, &sys.angle_indices)?;
        residual = Some(dist);
        if dist > opts.return_tol {
            continue;
        }

        let t = &back.end_state.xi * &acc * &xi_a;
        let distance = linalg::distance_from_identity(&t);
        let mut outcome = ProbeOutcome {
            traversals_used: k,
            return_residual: residual,
            matrix_distance: Some(distance),
            matrix: Some(t.clone()),
            ..ProbeOutcome::bare(candidate, Classification::Trivial)
        };
        if distance > opts.matrix_tol {
            let residuals = Residuals {
                return_residual: dist,
                det_residual: sys.is_hamiltonian.then(|| (t.determinant() - 1.0).norm()),
                symplectic_residual: sys
                    .is_hamiltonian
                    .then(|| linalg::symplectic_residual(&t)),
            };
            let looped = LoopLegs {
                turns: k as i64 * opts.orientation as i64,
                ..legs.clone()
            };
            outcome.classification = Classification::Generator;
            outcome.generator = Some(MonodromyGenerator {
                matrix: t,
                path: looped.path(),
                traversals: k,
                base_point: t0,
                candidate,
                initial_x: x0.to_vec(),
                residuals,
                est_error: est_error + back.est_global_error,
            });
        }
        return Ok(outcome);
    }

    Ok(ProbeOutcome {
        traversals_used: opts.max_traversals,
        return_residual: residual,
        ..ProbeOutcome::bare(candidate, Classification::NonReturning)
    })
}

/// Axis-aligned rectangle in the time plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Domain {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Domain {
        Domain {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
        }
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("domain must have positive width and height")]
    EmptyDomain,
    #[error("grid dimensions must be at least 1x1")]
    EmptyGrid,
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// Grid nodes in row-major order (rows of constant imaginary part, from
/// `im_min` upward) plus the node spacing used for the default radius.
pub fn grid_nodes(domain: &Domain, grid: (usize, usize)) -> Result<(Vec<Complex64>, f64), ScanError> {
    let (nx, ny) = grid;
    if nx == 0 || ny == 0 {
        return Err(ScanError::EmptyGrid);
    }
    let (w, h) = (domain.width(), domain.height());
    if !(w > 0.0 && h > 0.0) {
        return Err(ScanError::EmptyDomain);
    }
    let axis = |lo: f64, len: f64, count: usize| -> (Vec<f64>, f64) {
        if count == 1 {
            (vec![lo + 0.5 * len], len)
        } else {
            let step = len / (count - 1) as f64;
            ((0..count).map(|k| lo + step * k as f64).collect(), step)
        }
    };
    let (xs, dx) = axis(domain.re_min, w, nx);
    let (ys, dy) = axis(domain.im_min, h, ny);
    let nodes = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
        .collect();
    Ok((nodes, dx.min(dy)))
}

/// Probe outcomes for a scan or an explicit candidate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub t0: Complex64,
    pub x0: Vec<Complex64>,
    pub domain: Option<Domain>,
    pub grid: Option<(usize, usize)>,
    /// Loop radius actually used.
    pub radius: f64,
    pub options: ProbeOptions,
    pub outcomes: Vec<ProbeOutcome>,
}

impl ScanReport {
    /// Generators in outcome order.
    pub fn generators(&self) -> Vec<&MonodromyGenerator> {
        self.outcomes
            .iter()
            .filter_map(|o| o.generator.as_ref())
            .collect()
    }

    pub fn count(&self, class: Classification) -> usize {
        self.outcomes
            .iter()
            .filter(|o| o.classification == class)
            .count()
    }

    /// True when at least one probe ran and every probe that ran aborted.
    pub fn all_aborted(&self) -> bool {
        let ran = self.outcomes.len() - self.count(Classification::Skipped);
        ran > 0 && self.count(Classification::Aborted) == ran
    }
}

/// Probe every grid node of `domain`; nodes inside the guard disk around `t0`
/// are reported as [`Classification::Skipped`].
///
/// Probes run in parallel on the current rayon pool; the outcome order is the
/// row-major grid order regardless of scheduling.
pub fn scan(
    sys: &SystemDef,
    x0: &[Complex64],
    t0: Complex64,
    domain: &Domain,
    grid: (usize, usize),
    opts: &ProbeOptions,
) -> Result<ScanReport, ScanError> {
    let (nodes, spacing) = grid_nodes(domain, grid)?;
    let radius = opts.radius.unwrap_or(SCAN_RADIUS_FRACTION * spacing);
    let outcomes = probe_many(sys, x0, t0, &nodes, radius, opts)?;
    Ok(ScanReport {
        t0,
        x0: x0.to_vec(),
        domain: Some(*domain),
        grid: Some(grid),
        radius,
        options: opts.clone(),
        outcomes,
    })
}

/// Probe an explicit candidate list, in parallel, keeping input order.
pub fn probe_candidates(
    sys: &SystemDef,
    x0: &[Complex64],
    t0: Complex64,
    candidates: &[Complex64],
    opts: &ProbeOptions,
) -> Result<ScanReport, ProbeError> {
    let radius = opts.radius.unwrap_or(DEFAULT_PROBE_RADIUS);
    let outcomes = candidates
        .par_iter()
        .map(|&c| probe_with_radius(sys, x0, t0, c, radius, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScanReport {
        t0,
        x0: x0.to_vec(),
        domain: None,
        grid: None,
        radius,
        options: opts.clone(),
        outcomes,
    })
}

fn probe_many(
    sys: &SystemDef,
    x0: &[Complex64],
    t0: Complex64,
    nodes: &[Complex64],
    radius: f64,
    opts: &ProbeOptions,
) -> Result<Vec<ProbeOutcome>, ProbeError> {
    nodes
        .par_iter()
        .map(|&node| {
            if (node - t0).norm() <= radius {
                return Ok(ProbeOutcome::bare(node, Classification::Skipped));
            }
            match probe_with_radius(sys, x0, t0, node, radius, opts) {
                // Waypoints clashing with this node's disk: skip the node.
                Err(ProbeError::Path(_)) => Ok(ProbeOutcome::bare(node, Classification::Skipped)),
                other => other,
            }
        })
        .collect()
}
