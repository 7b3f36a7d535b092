//! Adaptive integration of the augmented system along a complex-time path.
//!
//! The state `x` and the variational matrix `Ξ` are advanced together,
//!
//! ```text
//! dx/dt = v(x),    dΞ/dt = A(x)·Ξ,
//! ```
//!
//! as one vector field of `n + n²` complex components. Each path piece is
//! integrated in its arc-length parameter `u`, with `dt/du` supplied by the
//! piece, using the Dormand–Prince 5(4) pair and a PI step-size controller.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cpath::{CPath, Piece};
use crate::expr::{EvalError, SystemDef};
use crate::linalg::{self, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: u64,
    /// Spacing in the global path parameter between recorded checkpoints;
    /// `0` disables checkpointing.
    pub checkpoint_stride: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            checkpoint_stride: 0.0,
        }
    }
}

/// Accepted steps shorter than this fraction of the path length abort the run.
pub const MIN_STEP_FRACTION: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("initial state has length {got}, system dimension is {expected}")]
    StateDimension { expected: usize, got: usize },
    #[error("initial variational matrix is {rows}x{cols}, expected {expected}x{expected}")]
    MatrixDimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("tolerances must be positive (rel {rel}, abs {abs})")]
    Tolerance { rel: f64, abs: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum AbortReason {
    /// Step size collapsed, typically on approach to a singularity.
    SingularityProximity { t: Complex64, s: f64 },
    /// The vector field produced a non-finite value.
    Overflow { t: Complex64, s: f64 },
    MaxSteps { t: Complex64, s: f64 },
}

impl AbortReason {
    pub fn label(&self) -> &'static str {
        match self {
            AbortReason::SingularityProximity { .. } => "singularity_proximity",
            AbortReason::Overflow { .. } => "overflow",
            AbortReason::MaxSteps { .. } => "max_steps",
        }
    }
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (AbortReason::SingularityProximity { t, s }
        | AbortReason::Overflow { t, s }
        | AbortReason::MaxSteps { t, s }) = self;
        write!(f, "{} at t = {} (s = {s:.6})", self.label(), t)
    }
}

/// Solution `x` together with the variational matrix `Ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub x: Vec<Complex64>,
    pub xi: CMatrix,
}

impl AugmentedState {
    /// `x` with `Ξ = id`.
    pub fn start(x: Vec<Complex64>) -> AugmentedState {
        let n = x.len();
        AugmentedState {
            x,
            xi: linalg::identity(n),
        }
    }

    fn pack(&self) -> Vec<Complex64> {
        let n = self.x.len();
        let mut y = Vec::with_capacity(n + n * n);
        y.extend_from_slice(&self.x);
        for i in 0..n {
            for j in 0..n {
                y.push(self.xi[(i, j)]);
            }
        }
        y
    }

    fn unpack(n: usize, y: &[Complex64]) -> AugmentedState {
        AugmentedState {
            x: y[..n].to_vec(),
            xi: linalg::from_row_major(n, &y[n..]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub s: f64,
    pub t: Complex64,
    pub state: AugmentedState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceResult {
    /// Final state, or the last accepted state if aborted.
    pub end_state: AugmentedState,
    /// Sum of local error estimates over accepted steps.
    pub est_global_error: f64,
    pub min_step_taken: f64,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub aborted: Option<AbortReason>,
    pub checkpoints: Vec<Checkpoint>,
}

impl TraceResult {
    pub fn succeeded(&self) -> bool {
        self.aborted.is_none()
    }

    /// Recorded `(s, state)` pairs, monotone in `s`, starting at the initial state.
    pub fn dense_checkpoints(&self) -> Vec<(f64, AugmentedState)> {
        self.checkpoints
            .iter()
            .map(|c| (c.s, c.state.clone()))
            .collect()
    }
}

// Dormand–Prince 5(4) coefficients.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN_INV: f64 = 5.0; // step may grow at most 5x
const FAC_MAX_INV: f64 = 0.1; // and shrink at most 10x per step

/// The augmented vector field with scratch buffers.
struct Field<'a> {
    sys: &'a SystemDef,
    n: usize,
    v: Vec<Complex64>,
    a: Vec<Complex64>,
    stack: Vec<Complex64>,
}

impl<'a> Field<'a> {
    fn new(sys: &'a SystemDef) -> Self {
        let n = sys.dim();
        Field {
            sys,
            n,
            v: vec![Complex64::default(); n],
            a: vec![Complex64::default(); n * n],
            stack: Vec::new(),
        }
    }

    /// `out = tangent · (v(x), A(x)·Ξ)`.
    fn eval(
        &mut self,
        tangent: Complex64,
        y: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), EvalError> {
        let n = self.n;
        let x = &y[..n];
        self.sys.eval_rhs(x, &mut self.v, &mut self.stack)?;
        self.sys.eval_jacobian(x, &mut self.a, &mut self.stack)?;
        for (o, v) in out[..n].iter_mut().zip(&self.v) {
            *o = tangent * v;
        }
        let xi = &y[n..];
        for i in 0..n {
            let arow = &self.a[i * n..(i + 1) * n];
            for j in 0..n {
                let mut acc = Complex64::default();
                for k in 0..n {
                    acc += arow[k] * xi[k * n + j];
                }
                out[n + i * n + j] = tangent * acc;
            }
        }
        if out.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn axpy_into(out: &mut [Complex64], y: &[Complex64], h: f64, terms: &[(f64, &[Complex64])]) {
    for i in 0..out.len() {
        let mut acc = Complex64::default();
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

struct Stepper<'a> {
    field: Field<'a>,
    opts: IntegratorOptions,
    k: [Vec<Complex64>; 7],
    ytmp: Vec<Complex64>,
    ynew: Vec<Complex64>,
    err_old: f64,
}

enum StepOutcome {
    Accepted { err_abs: f64, h_next: f64 },
    Rejected { h_next: f64 },
    EvalFailed(EvalError),
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a SystemDef, opts: IntegratorOptions, len: usize) -> Self {
        let z = || vec![Complex64::default(); len];
        Stepper {
            field: Field::new(sys),
            opts,
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            err_old: 1e-4,
        }
    }

    /// One trial step of size `h` from `y` at arc length `u` on `piece`.
    /// `k[0]` must hold the derivative at `(u, y)`.
    fn try_step(&mut self, piece: &Piece, u: f64, y: &[Complex64], h: f64) -> StepOutcome {
        let tan = |c: f64| piece.tangent_at_length(u + c * h);
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ytmp = &mut self.ytmp;
        let f = &mut self.field;
        macro_rules! stage {
            ($c:expr, $out:expr, $terms:expr) => {
                axpy_into(ytmp, y, h, $terms);
                if let Err(e) = f.eval(tan($c), ytmp, $out) {
                    return StepOutcome::EvalFailed(e);
                }
            };
        }
        stage!(C2, k2, &[(A21, &k1[..])]);
        stage!(C3, k3, &[(A31, &k1[..]), (A32, &k2[..])]);
        stage!(C4, k4, &[(A41, &k1[..]), (A42, &k2[..]), (A43, &k3[..])]);
        stage!(
            C5,
            k5,
            &[(A51, &k1[..]), (A52, &k2[..]), (A53, &k3[..]), (A54, &k4[..])]
        );
        stage!(
            1.0,
            k6,
            &[
                (A61, &k1[..]),
                (A62, &k2[..]),
                (A63, &k3[..]),
                (A64, &k4[..]),
                (A65, &k5[..])
            ]
        );
        axpy_into(
            &mut self.ynew,
            y,
            h,
            &[
                (A71, &k1[..]),
                (A73, &k3[..]),
                (A74, &k4[..]),
                (A75, &k5[..]),
                (A76, &k6[..]),
            ],
        );
        if let Err(e) = f.eval(tan(1.0), &self.ynew, k7) {
            return StepOutcome::EvalFailed(e);
        }

        let mut err: f64 = 0.0;
        let mut err_abs: f64 = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7)
                * h;
            let scale = self
                .opts
                .abs_tol
                .max(self.opts.rel_tol * y[i].norm().max(self.ynew[i].norm()));
            err = err.max(e.norm() / scale);
            err_abs = err_abs.max(e.norm());
        }
        if !err.is_finite() {
            return StepOutcome::EvalFailed(EvalError::NonFinite);
        }
        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(FAC_MAX_INV, FAC_MIN_INV);
            self.err_old = err.max(1e-4);
            StepOutcome::Accepted {
                err_abs,
                h_next: h / fac,
            }
        } else {
            StepOutcome::Rejected {
                h_next: h / (fac11 / SAFETY).min(FAC_MIN_INV),
            }
        }
    }
}

fn check_inputs(
    sys: &SystemDef,
    x0: &[Complex64],
    xi0: &CMatrix,
    opts: &IntegratorOptions,
) -> Result<(), IntegrateError> {
    let n = sys.dim();
    if x0.len() != n {
        return Err(IntegrateError::StateDimension {
            expected: n,
            got: x0.len(),
        });
    }
    if xi0.nrows() != n || xi0.ncols() != n {
        return Err(IntegrateError::MatrixDimension {
            expected: n,
            rows: xi0.nrows(),
            cols: xi0.ncols(),
        });
    }
    if !(opts.rel_tol > 0.0 && opts.abs_tol > 0.0) {
        return Err(IntegrateError::Tolerance {
            rel: opts.rel_tol,
            abs: opts.abs_tol,
        });
    }
    Ok(())
}

/// Integrate `(x, Ξ)` along `path` from `(x0, xi0)`.
///
/// Failures inside the run (step collapse, non-finite values, step budget)
/// are reported through [`TraceResult::aborted`] with the last accepted state.
pub fn integrate_augmented(
    sys: &SystemDef,
    path: &CPath,
    x0: &[Complex64],
    xi0: &CMatrix,
    opts: &IntegratorOptions,
) -> Result<TraceResult, IntegrateError> {
    check_inputs(sys, x0, xi0, opts)?;
    let n = sys.dim();
    let start = AugmentedState {
        x: x0.to_vec(),
        xi: xi0.clone(),
    };
    let mut y = start.pack();
    let total_len = path.length();
    let checkpointing = opts.checkpoint_stride > 0.0;
    let mut result = TraceResult {
        end_state: start.clone(),
        est_global_error: 0.0,
        min_step_taken: f64::INFINITY,
        accepted_steps: 0,
        rejected_steps: 0,
        aborted: None,
        checkpoints: Vec::new(),
    };
    if checkpointing {
        result.checkpoints.push(Checkpoint {
            s: 0.0,
            t: path.start(),
            state: start,
        });
    }
    if total_len == 0.0 {
        return Ok(result);
    }

    // Checkpoint positions in global arc length, excluding 0.
    let mut marks: Vec<f64> = Vec::new();
    if checkpointing {
        let count = (1.0 / opts.checkpoint_stride).round().max(1.0) as usize;
        marks = (1..=count)
            .map(|k| (k as f64 / count as f64).min(1.0) * total_len)
            .collect();
    }
    let mut next_mark = 0;

    let h_min = MIN_STEP_FRACTION * total_len;
    let mut stepper = Stepper::new(sys, *opts, y.len());
    let mut h = f64::NAN;
    let mut offset = 0.0; // arc length before the current piece

    'pieces: for piece in path.pieces() {
        let len = piece.length();
        let mut u = 0.0;
        if let Err(e) = stepper.field.eval(piece.tangent_at_length(0.0), &y, &mut stepper.k[0]) {
            result.aborted = Some(abort_for(&e, piece.start(), offset / total_len));
            break 'pieces;
        }
        if h.is_nan() {
            h = initial_step(&stepper.k[0], &y, opts, len);
        }
        while u < len {
            if result.accepted_steps + result.rejected_steps >= opts.max_steps {
                result.aborted = Some(AbortReason::MaxSteps {
                    t: piece.point_at_length(u),
                    s: (offset + u) / total_len,
                });
                break 'pieces;
            }
            let mut h_try = h.min(len - u);
            let mut hit_mark = false;
            if next_mark < marks.len() {
                let to_mark = marks[next_mark] - offset - u;
                if to_mark <= h_try * (1.0 + 1e-12) {
                    h_try = to_mark.max(0.0);
                    hit_mark = true;
                }
            }
            // Land exactly on the piece end when within rounding.
            let finishing = len - u - h_try <= 1e-14 * len;
            if h_try <= 0.0 {
                // Mark coincides with the current position.
                if hit_mark {
                    record_mark(&mut result, &mut next_mark, piece, u, offset, total_len, n, &y);
                }
                continue;
            }
            match stepper.try_step(piece, u, &y, h_try) {
                StepOutcome::Accepted { err_abs, h_next } => {
                    if h_try < h_min && !finishing && !hit_mark {
                        result.aborted = Some(AbortReason::SingularityProximity {
                            t: piece.point_at_length(u),
                            s: (offset + u) / total_len,
                        });
                        break 'pieces;
                    }
                    std::mem::swap(&mut y, &mut stepper.ynew);
                    stepper.k.swap(0, 6);
                    u = if finishing { len } else { u + h_try };
                    result.accepted_steps += 1;
                    result.est_global_error += err_abs;
                    if !(finishing || hit_mark) || h_try >= h {
                        result.min_step_taken = result.min_step_taken.min(h_try);
                    }
                    // Truncated final or checkpoint steps don't shrink the controller.
                    h = if finishing || hit_mark { h.max(h_next) } else { h_next };
                    if hit_mark {
                        record_mark(&mut result, &mut next_mark, piece, u, offset, total_len, n, &y);
                    }
                }
                StepOutcome::Rejected { h_next } => {
                    result.rejected_steps += 1;
                    h = h_next;
                    if h < h_min {
                        result.aborted = Some(AbortReason::SingularityProximity {
                            t: piece.point_at_length(u),
                            s: (offset + u) / total_len,
                        });
                        break 'pieces;
                    }
                }
                StepOutcome::EvalFailed(e) => {
                    result.rejected_steps += 1;
                    h = h_try * 0.25;
                    if h < h_min {
                        result.aborted = Some(abort_for(
                            &e,
                            piece.point_at_length(u),
                            (offset + u) / total_len,
                        ));
                        break 'pieces;
                    }
                }
            }
        }
        offset += len;
    }
    if result.min_step_taken == f64::INFINITY {
        result.min_step_taken = 0.0;
    }
    result.end_state = AugmentedState::unpack(n, &y);
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn record_mark(
    result: &mut TraceResult,
    next_mark: &mut usize,
    piece: &Piece,
    u: f64,
    offset: f64,
    total_len: f64,
    n: usize,
    y: &[Complex64],
) {
    let s = ((offset + u) / total_len).min(1.0);
    result.checkpoints.push(Checkpoint {
        s,
        t: piece.point_at_length(u),
        state: AugmentedState::unpack(n, y),
    });
    *next_mark += 1;
}

fn abort_for(e: &EvalError, t: Complex64, s: f64) -> AbortReason {
    match e {
        EvalError::NonFinite => AbortReason::Overflow { t, s },
        _ => AbortReason::SingularityProximity { t, s },
    }
}

/// Starting step from the size of the derivative, after Hairer & Wanner.
fn initial_step(f0: &[Complex64], y0: &[Complex64], opts: &IntegratorOptions, len: f64) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (y, f) in y0.iter().zip(f0) {
        let sc = opts.abs_tol.max(opts.rel_tol * y.norm());
        d0 = d0.max(y.norm() / sc);
        d1 = d1.max(f.norm() / sc);
    }
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0.min(len).max(1e-10 * len)
}

/// Integrate the scalar `∫ trace A(x(t)) dt` along `path` alongside `x`.
///
/// Used to check the determinant law `det Ξ = exp(∫ tr A dt)` through a route
/// independent of the variational matrix itself.
pub fn integrate_trace(
    sys: &SystemDef,
    path: &CPath,
    x0: &[Complex64],
    opts: &IntegratorOptions,
) -> Result<(Vec<Complex64>, Complex64, Option<AbortReason>), IntegrateError> {
    use crate::expr::Expr;
    let n = sys.dim();
    let mut trace = Expr::real(0.0);
    for i in 0..n {
        trace = Expr::Add(Box::new(trace), Box::new(sys.jacobian[i][i].clone()));
    }
    let mut symbols = sys.state_symbols.clone();
    let acc = unique_symbol(&symbols, "trace_integral");
    symbols.push(acc);
    let mut rhs = sys.rhs.clone();
    rhs.push(trace);
    let extended = SystemDef::new(format!("{}+trace", sys.name), symbols, rhs)
        .expect("extension of a valid system");
    let mut y0 = x0.to_vec();
    y0.push(Complex64::default());
    // Ξ of the extended system is not needed, but shares the same stepper.
    let res = integrate_augmented(&extended, path, &y0, &linalg::identity(n + 1), opts)?;
    let x = res.end_state.x;
    Ok((x[..n].to_vec(), x[n], res.aborted))
}

fn unique_symbol(existing: &[String], base: &str) -> String {
    let mut name = base.to_string();
    while existing.contains(&name) {
        name.push('_');
    }
    name
}
