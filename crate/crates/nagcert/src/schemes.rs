//! Accelerated gradient iterations with momentum parameter `r >= 2`.
//!
//! Three algebraically equivalent formulations of the same method are
//! provided; in exact arithmetic they generate identical `x`- and
//! `y`-sequences from the shared seeding below.
//!
//! Two-sequence form, for `k >= 1`:
//!
//! ```text
//! x_k = y_{k-1} - s grad f(y_{k-1})
//! y_k = x_k + (k - 1)/(k + r) (x_k - x_{k-1})
//! ```
//!
//! Gradient-correction form, a single `y`-sequence driven by a velocity that
//! subtracts the scaled change of successive gradients:
//!
//! ```text
//! v_k = [ k v_{k-1} - sqrt(s) ((2k + r + 1) grad f(y_k) - k grad f(y_{k-1})) ] / (k + r + 1)
//! y_{k+1} = y_k + sqrt(s) v_k
//! ```
//!
//! Implicit-velocity form, where the velocity is the scaled `x`-increment:
//!
//! ```text
//! y_k = x_k + (k - 1)/(k + r) sqrt(s) v_k
//! v_{k+1} = (k - 1)/(k + r) v_k - sqrt(s) grad f(y_k)
//! x_{k+1} = x_k + sqrt(s) v_{k+1}
//! ```
//!
//! Shared seeding: `y_0 = x_0`, `x_1 = x_0 - s grad f(x_0)`, `y_1 = x_1`, and
//! the initial velocity is `-sqrt(s) grad f(y_0)`, which equals both
//! `(y_1 - y_0)/sqrt(s)` and `(x_1 - x_0)/sqrt(s)`. Each step costs exactly
//! one new gradient evaluation.

use nalgebra::DVector;
use serde::Deserialize;
use thiserror::Error;

use crate::objectives::Objective;

/// Iterates whose norm passes this bound are reported as divergence.
const DIVERGENCE_NORM: f64 = 1e12;

/// Relative slack when validating `s * L <= 1`, absorbing the rounding of
/// `s = 1/L` itself.
const STEP_GATE_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("step size s = {step_size:.12e} exceeds the admissible bound 1/L = {limit:.12e}")]
    StepSizeTooLarge { step_size: f64, limit: f64 },
    #[error("step size s = {0:.6e} must be positive and finite")]
    InvalidStepSize(f64),
    #[error("momentum parameter r = {0} is below the supported range r >= 2")]
    MomentumTooSmall(f64),
    #[error("initial point has dimension {got}, objective expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("gradient evaluated to a non-finite value at iteration {k}")]
    NonFiniteGradient { k: usize },
    #[error("iterates diverged at iteration {k} (|x| = {norm:.3e})")]
    Diverged { k: usize, norm: f64 },
}

/// Which of the three equivalent formulations drives the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    TwoSequence,
    GradientCorrection,
    ImplicitVelocity,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::TwoSequence,
        SchemeKind::GradientCorrection,
        SchemeKind::ImplicitVelocity,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::TwoSequence => "two-sequence",
            SchemeKind::GradientCorrection => "gradient-correction",
            SchemeKind::ImplicitVelocity => "implicit-velocity",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Run parameters shared by all three formulations.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    /// Momentum parameter; the certificates require `r >= 2`.
    pub r: f64,
    /// Step size `s`; admissible when `s <= 1/L`.
    pub step_size: f64,
    pub x0: DVector<f64>,
    /// Number of steps; the trace then holds `max_iter + 1` records.
    pub max_iter: usize,
}

impl SchemeConfig {
    pub fn validate(&self, obj: &Objective) -> Result<(), SchemeError> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(SchemeError::InvalidStepSize(self.step_size));
        }
        if self.step_size * obj.lipschitz() > 1.0 + STEP_GATE_SLACK {
            return Err(SchemeError::StepSizeTooLarge {
                step_size: self.step_size,
                limit: 1.0 / obj.lipschitz(),
            });
        }
        if !(self.r.is_finite() && self.r >= 2.0) {
            return Err(SchemeError::MomentumTooSmall(self.r));
        }
        if self.x0.len() != obj.dim() {
            return Err(SchemeError::DimensionMismatch {
                got: self.x0.len(),
                expected: obj.dim(),
            });
        }
        Ok(())
    }
}

/// Full state after `k` steps, sufficient to advance any formulation.
///
/// `v` is the formulation's native velocity bookkeeping: the
/// gradient-correction form stores `v_{k-1} = (y_k - y_{k-1})/sqrt(s)`, while
/// the implicit-velocity and two-sequence forms store
/// `v_k = (x_k - x_{k-1})/sqrt(s)`. At the seed (`k = 1`) both conventions
/// coincide at `-sqrt(s) grad f(y_0)`.
#[derive(Debug, Clone)]
pub struct PhasePoint {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
    pub grad_y: DVector<f64>,
    pub grad_y_prev: DVector<f64>,
}

fn check_grad(g: &DVector<f64>, k: usize) -> Result<(), SchemeError> {
    if g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SchemeError::NonFiniteGradient { k })
    }
}

/// Performs the shared first step and returns the `k = 1` state.
pub fn seed_state(obj: &Objective, cfg: &SchemeConfig) -> Result<PhasePoint, SchemeError> {
    cfg.validate(obj)?;
    let g0 = obj.grad(&cfg.x0);
    check_grad(&g0, 0)?;
    let sqrt_s = cfg.step_size.sqrt();
    let x1 = &cfg.x0 - cfg.step_size * &g0;
    let g1 = obj.grad(&x1);
    check_grad(&g1, 1)?;
    Ok(PhasePoint {
        k: 1,
        x: x1.clone(),
        y: x1,
        v: -sqrt_s * &g0,
        grad_y: g1,
        grad_y_prev: g0,
    })
}

/// Advances the two-sequence form from the state at `k` to `k + 1`.
pub fn step_two_sequence(
    obj: &Objective,
    cfg: &SchemeConfig,
    state: &PhasePoint,
) -> Result<PhasePoint, SchemeError> {
    let k = state.k as f64;
    let s = cfg.step_size;
    let sqrt_s = s.sqrt();
    let x_next = &state.y - s * &state.grad_y;
    let weight = k / (k + 1.0 + cfg.r);
    let y_next = &x_next + weight * (&x_next - &state.x);
    let v_next = (&x_next - &state.x) / sqrt_s;
    let g_next = obj.grad(&y_next);
    check_grad(&g_next, state.k + 1)?;
    Ok(PhasePoint {
        k: state.k + 1,
        x: x_next,
        y: y_next,
        v: v_next,
        grad_y: g_next,
        grad_y_prev: state.grad_y.clone(),
    })
}

/// Advances the gradient-correction form from the state at `k` to `k + 1`.
///
/// The `x`-sequence is reconstructed through the interleaving identity
/// `x_{k+1} = y_k - s grad f(y_k)` so every formulation exposes both
/// sequences.
pub fn step_gradient_correction(
    obj: &Objective,
    cfg: &SchemeConfig,
    state: &PhasePoint,
) -> Result<PhasePoint, SchemeError> {
    let k = state.k as f64;
    let s = cfg.step_size;
    let sqrt_s = s.sqrt();
    let v_k = (k * &state.v
        - sqrt_s * ((2.0 * k + cfg.r + 1.0) * &state.grad_y - k * &state.grad_y_prev))
        / (k + cfg.r + 1.0);
    let y_next = &state.y + sqrt_s * &v_k;
    let x_next = &state.y - s * &state.grad_y;
    let g_next = obj.grad(&y_next);
    check_grad(&g_next, state.k + 1)?;
    Ok(PhasePoint {
        k: state.k + 1,
        x: x_next,
        y: y_next,
        v: v_k,
        grad_y: g_next,
        grad_y_prev: state.grad_y.clone(),
    })
}

/// Advances the implicit-velocity form from the state at `k` to `k + 1`.
pub fn step_implicit_velocity(
    obj: &Objective,
    cfg: &SchemeConfig,
    state: &PhasePoint,
) -> Result<PhasePoint, SchemeError> {
    let k = state.k as f64;
    let sqrt_s = cfg.step_size.sqrt();
    let v_next = ((k - 1.0) / (k + cfg.r)) * &state.v - sqrt_s * &state.grad_y;
    let x_next = &state.x + sqrt_s * &v_next;
    let weight = k / (k + 1.0 + cfg.r);
    let y_next = &x_next + weight * sqrt_s * &v_next;
    let g_next = obj.grad(&y_next);
    check_grad(&g_next, state.k + 1)?;
    Ok(PhasePoint {
        k: state.k + 1,
        x: x_next,
        y: y_next,
        v: v_next,
        grad_y: g_next,
        grad_y_prev: state.grad_y.clone(),
    })
}

/// Dispatches one step of the configured formulation.
pub fn step(
    obj: &Objective,
    cfg: &SchemeConfig,
    state: &PhasePoint,
) -> Result<PhasePoint, SchemeError> {
    match cfg.scheme {
        SchemeKind::TwoSequence => step_two_sequence(obj, cfg, state),
        SchemeKind::GradientCorrection => step_gradient_correction(obj, cfg, state),
        SchemeKind::ImplicitVelocity => step_implicit_velocity(obj, cfg, state),
    }
}

/// One row of a captured run.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
    pub grad_y: DVector<f64>,
    pub f_y: f64,
    pub f_x: f64,
    pub grad_norm_sq: f64,
    /// `<grad f(y_k), grad f(y_{k-1})>`; NaN at `k = 0`.
    pub cross_term: f64,
}

/// A finished run: records for `k = 0..=max_iter` plus run metadata.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub scheme: SchemeKind,
    pub r: f64,
    pub step_size: f64,
    pub objective_name: String,
    pub lipschitz: f64,
    pub f_star: Option<f64>,
    pub f_star_estimated: bool,
    pub minimizer: Option<DVector<f64>>,
    pub x0: DVector<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distance from the start to the minimizer, when the latter is known.
    pub fn d0(&self) -> Option<f64> {
        self.minimizer.as_ref().map(|m| (&self.x0 - m).norm())
    }

    pub fn f_gap_y(&self, k: usize) -> Option<f64> {
        self.f_star.map(|fs| self.records[k].f_y - fs)
    }

    pub fn f_gap_x(&self, k: usize) -> Option<f64> {
        self.f_star.map(|fs| self.records[k].f_x - fs)
    }
}

fn record_from_state(obj: &Objective, state: &PhasePoint) -> TraceRecord {
    TraceRecord {
        k: state.k,
        x: state.x.clone(),
        y: state.y.clone(),
        v: state.v.clone(),
        grad_y: state.grad_y.clone(),
        f_y: obj.eval(&state.y),
        f_x: obj.eval(&state.x),
        grad_norm_sq: state.grad_y.norm_squared(),
        cross_term: state.grad_y.dot(&state.grad_y_prev),
    }
}

/// Runs the configured scheme for `cfg.max_iter` steps, capturing every
/// iterate. Fails fast on non-finite values or norms beyond `1e12`.
pub fn run(obj: &Objective, cfg: &SchemeConfig) -> Result<Trace, SchemeError> {
    cfg.validate(obj)?;
    let g0 = obj.grad(&cfg.x0);
    check_grad(&g0, 0)?;
    let sqrt_s = cfg.step_size.sqrt();
    let mut records = Vec::with_capacity(cfg.max_iter + 1);
    records.push(TraceRecord {
        k: 0,
        x: cfg.x0.clone(),
        y: cfg.x0.clone(),
        v: -sqrt_s * &g0,
        grad_y: g0.clone(),
        f_y: obj.eval(&cfg.x0),
        f_x: obj.eval(&cfg.x0),
        grad_norm_sq: g0.norm_squared(),
        cross_term: f64::NAN,
    });
    if cfg.max_iter > 0 {
        let mut state = seed_state(obj, cfg)?;
        records.push(record_from_state(obj, &state));
        while state.k < cfg.max_iter {
            state = step(obj, cfg, &state)?;
            let norm = state.x.norm();
            if !norm.is_finite() || norm > DIVERGENCE_NORM {
                return Err(SchemeError::Diverged { k: state.k, norm });
            }
            records.push(record_from_state(obj, &state));
        }
    }
    Ok(Trace {
        records,
        scheme: cfg.scheme,
        r: cfg.r,
        step_size: cfg.step_size,
        objective_name: obj.name().to_string(),
        lipschitz: obj.lipschitz(),
        f_star: obj.optimal_value(),
        f_star_estimated: obj.optimal_value_is_estimate(),
        minimizer: obj.minimizer().cloned(),
        x0: cfg.x0.clone(),
    })
}

/// Lower estimate of the optimal value: the best objective value seen along a
/// long two-sequence run at `s = 1/L`, minus a `1e-12` safety margin so the
/// estimate errs on the low side and measured gaps stay nonnegative.
pub fn estimate_optimal_value(
    obj: &Objective,
    x0: &DVector<f64>,
    iters: usize,
) -> Result<f64, SchemeError> {
    let cfg = SchemeConfig {
        scheme: SchemeKind::TwoSequence,
        r: 2.0,
        step_size: 1.0 / obj.lipschitz(),
        x0: x0.clone(),
        max_iter: 0,
    };
    cfg.validate(obj)?;
    let mut best = obj.eval(x0);
    let mut state = seed_state(obj, &cfg)?;
    best = best.min(obj.eval(&state.y));
    for _ in 1..iters {
        state = step_two_sequence(obj, &cfg, &state)?;
        let norm = state.x.norm();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(SchemeError::Diverged { k: state.k, norm });
        }
        // y and x interleave, so tracking both sharpens the estimate.
        best = best.min(obj.eval(&state.y)).min(obj.eval(&state.x));
    }
    Ok(best - 1e-12)
}

/// Slacks of the two per-step consequences of `L`-smoothness along a trace:
/// for each transition `k -> k+1`,
///
/// * descent: `f(x_{k+1}) <= f(y_k) - (s - L s^2 / 2) |grad f(y_k)|^2`,
/// * gradient contraction: `|grad f(x_{k+1})| <= |grad f(y_k)|`.
///
/// Both slacks are `RHS - LHS`, nonnegative up to roundoff. The contraction
/// slack needs `grad f(x_{k+1})`, which the run never evaluates, so this
/// check recomputes it from the objective.
#[derive(Debug, Clone, Copy)]
pub struct StepFactSlacks {
    pub k: usize,
    pub descent: f64,
    pub gradient_contraction: f64,
}

pub fn per_step_fact_slacks(obj: &Objective, trace: &Trace) -> Vec<StepFactSlacks> {
    let s = trace.step_size;
    let l = trace.lipschitz;
    let mut out = Vec::with_capacity(trace.len().saturating_sub(1));
    for pair in trace.records.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let descent = cur.f_y - (s - l * s * s / 2.0) * cur.grad_norm_sq - next.f_x;
        let grad_x_next = obj.grad(&next.x).norm();
        let gradient_contraction = cur.grad_norm_sq.sqrt() - grad_x_next;
        out.push(StepFactSlacks {
            k: cur.k,
            descent,
            gradient_contraction,
        });
    }
    out
}
