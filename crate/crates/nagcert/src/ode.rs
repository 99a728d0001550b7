//! Continuous-time limit of the accelerated iteration and its certificate.
//!
//! The iterates shadow the second-order system
//!
//! ```text
//! X'' + (r + 1)/t X' + (1 + (r + 1) sqrt(s) / (2t)) grad f(X + sqrt(s) X') = 0
//! ```
//!
//! integrated from `t_init = (r - 1) sqrt(s) / 2` with `X(t_init) = x_0` and
//! `X'(t_init) = -sqrt(s) grad f(x_0)`. Despite the lookahead argument
//! `X + sqrt(s) X'`, the system is explicit in the phase variables `(X, V)`.
//!
//! The continuous Lyapunov function
//!
//! ```text
//! E(t) = t (t - r sqrt(s)) / (t - (r+1) sqrt(s)) * (t + (r+1) sqrt(s)/2)
//!        * (f(X + sqrt(s) V) - f*)  +  1/2 |t V + r (X - x*)|^2
//! ```
//!
//! has a pole at `t = (r+1) sqrt(s)`; it is evaluated on
//! `t >= t0 = (r+2) sqrt(s)`, where its leading coefficient dominates `t^2`
//! and `E` is nonincreasing, giving `f(X + sqrt(s) V) - f* <= E(t0) / t^2`.
//!
//! Integration uses an embedded Dormand-Prince 5(4) pair with a clamped
//! proportional step controller and cubic Hermite dense output between
//! accepted knots.

use nalgebra::DVector;
use thiserror::Error;

use crate::objectives::Objective;

/// Controller constants: accept when the mixed error norm is at most 1,
/// rescale by `0.9 errnorm^(-1/5)` clamped to `[0.2, 5]`.
const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
/// Steps below `UNDERFLOW_FRACTION * sqrt(s)` abort as stiffness.
const UNDERFLOW_FRACTION: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("tolerance {0:.3e} is outside the supported range (0, 1e-3]")]
    InvalidTolerance(f64),
    #[error("momentum parameter r = {0} is below the supported range r >= 2")]
    MomentumTooSmall(f64),
    #[error("step parameter s = {0:.6e} must be positive and finite")]
    InvalidStepParameter(f64),
    #[error(
        "horizon t_end = {t_end:.6e} must exceed the rate origin (r+2) sqrt(s) = {origin:.6e}"
    )]
    HorizonTooShort { t_end: f64, origin: f64 },
    #[error("the dynamics are undefined at t = {0:.6e} <= 0")]
    NonPositiveTime(f64),
    #[error(
        "step size underflow near t = {t:.6e}: the right-hand side is too stiff or undefined ahead"
    )]
    StepUnderflow { t: f64 },
    #[error("sample time {t:.6e} lies outside the integration window [{lo:.6e}, {hi:.6e}]")]
    SampleOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("the continuous Lyapunov function has a pole at t = {pole:.6e}; it was requested at t = {t:.6e}")]
    PoleTime { t: f64, pole: f64 },
    #[error("{what} requires a known minimizer, which objective `{objective}` lacks")]
    MinimizerUnknown {
        what: &'static str,
        objective: String,
    },
    #[error("initial point has dimension {got}, objective expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("state became non-finite at t = {0:.6e}")]
    NonFiniteState(f64),
}

/// Phase-space point of the first-order system.
#[derive(Debug, Clone)]
pub struct OdeState {
    pub t: f64,
    pub position: DVector<f64>,
    pub velocity: DVector<f64>,
}

/// Integration parameters. `sample_times` must lie inside
/// `[t_init, t_end]`; they are sorted before use.
#[derive(Debug, Clone)]
pub struct OdeConfig {
    pub r: f64,
    /// The discrete step parameter `s`; `sqrt(s)` is the time scale.
    pub s: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
}

impl OdeConfig {
    pub fn t_init(&self) -> f64 {
        (self.r - 1.0) * self.s.sqrt() / 2.0
    }

    /// Start of the certified-rate window, `(r + 2) sqrt(s)`.
    pub fn rate_origin(&self) -> f64 {
        (self.r + 2.0) * self.s.sqrt()
    }

    pub fn validate(&self) -> Result<(), OdeError> {
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(OdeError::InvalidStepParameter(self.s));
        }
        if !(self.r.is_finite() && self.r >= 2.0) {
            return Err(OdeError::MomentumTooSmall(self.r));
        }
        for tol in [self.rel_tol, self.abs_tol] {
            if !(tol > 0.0 && tol <= 1e-3) {
                return Err(OdeError::InvalidTolerance(tol));
            }
        }
        if self.t_end <= self.rate_origin() {
            return Err(OdeError::HorizonTooShort {
                t_end: self.t_end,
                origin: self.rate_origin(),
            });
        }
        let (lo, hi) = (self.t_init(), self.t_end);
        for &t in &self.sample_times {
            if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
                return Err(OdeError::SampleOutOfRange { t, lo, hi });
            }
        }
        Ok(())
    }
}

/// `n` uniformly spaced times spanning `[from, to]` inclusive.
pub fn uniform_times(from: f64, to: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![from];
    }
    (0..n)
        .map(|i| from + (to - from) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Right-hand side of the first-order system at `state`:
/// `dX = V`, `dV = -(r+1)/t V - (1 + (r+1) sqrt(s)/(2t)) grad f(X + sqrt(s) V)`.
pub fn ode_rhs(
    obj: &Objective,
    r: f64,
    s: f64,
    state: &OdeState,
) -> Result<(DVector<f64>, DVector<f64>), OdeError> {
    if state.t <= 0.0 {
        return Err(OdeError::NonPositiveTime(state.t));
    }
    let sqrt_s = s.sqrt();
    let lookahead = &state.position + sqrt_s * &state.velocity;
    let grad = obj.grad(&lookahead);
    let damping = (r + 1.0) / state.t;
    let grad_coeff = 1.0 + (r + 1.0) * sqrt_s / (2.0 * state.t);
    Ok((
        state.velocity.clone(),
        -damping * &state.velocity - grad_coeff * grad,
    ))
}

/// Initial phase point at `t_init`.
pub fn initial_state(obj: &Objective, cfg: &OdeConfig, x0: &DVector<f64>) -> OdeState {
    OdeState {
        t: cfg.t_init(),
        position: x0.clone(),
        velocity: -cfg.s.sqrt() * obj.grad(x0),
    }
}

/// Accepted knot: time, stacked state `[X; V]`, and its derivative.
#[derive(Debug, Clone)]
struct Knot {
    t: f64,
    y: DVector<f64>,
    dy: DVector<f64>,
}

/// Result of an adaptive integration: dense output over the accepted knots
/// plus the requested samples.
#[derive(Debug, Clone)]
pub struct OdeTrajectory {
    pub r: f64,
    pub s: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_init: f64,
    pub t_end: f64,
    pub samples: Vec<OdeState>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    knots: Vec<Knot>,
    dim: usize,
}

impl OdeTrajectory {
    /// Dense-output state at any `t` in `[t_init, t_end]`, by cubic Hermite
    /// interpolation between the bracketing accepted knots.
    pub fn state_at(&self, t: f64) -> Result<OdeState, OdeError> {
        if !(t >= self.t_init - 1e-12 && t <= self.t_end + 1e-12) {
            return Err(OdeError::SampleOutOfRange {
                t,
                lo: self.t_init,
                hi: self.t_end,
            });
        }
        let t = t.clamp(self.t_init, self.t_end);
        // Knot times strictly increase; find the segment containing t.
        let idx = match self
            .knots
            .binary_search_by(|knot| knot.t.partial_cmp(&t).unwrap())
        {
            Ok(i) => {
                let k = &self.knots[i];
                return Ok(self.unstack(k.t, &k.y));
            }
            Err(i) => i,
        };
        let lo = &self.knots[idx - 1];
        let hi = &self.knots[idx];
        let h = hi.t - lo.t;
        let tau = (t - lo.t) / h;
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + tau;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let y = h00 * &lo.y + (h10 * h) * &lo.dy + h01 * &hi.y + (h11 * h) * &hi.dy;
        Ok(self.unstack(t, &y))
    }

    fn unstack(&self, t: f64, y: &DVector<f64>) -> OdeState {
        OdeState {
            t,
            position: y.rows(0, self.dim).into_owned(),
            velocity: y.rows(self.dim, self.dim).into_owned(),
        }
    }
}

fn stacked_rhs(obj: &Objective, r: f64, s: f64, t: f64, y: &DVector<f64>) -> DVector<f64> {
    let dim = y.len() / 2;
    let sqrt_s = s.sqrt();
    let position = y.rows(0, dim);
    let velocity = y.rows(dim, dim);
    let lookahead = position + sqrt_s * velocity;
    let grad = obj.grad(&lookahead.into_owned());
    let damping = (r + 1.0) / t;
    let grad_coeff = 1.0 + (r + 1.0) * sqrt_s / (2.0 * t);
    let mut dy = DVector::zeros(2 * dim);
    dy.rows_mut(0, dim).copy_from(&velocity);
    dy.rows_mut(dim, dim)
        .copy_from(&(-damping * &velocity.into_owned() - grad_coeff * grad));
    dy
}

// Dormand-Prince 5(4) tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and the embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

/// Integrates the system from `x0` over `[t_init, t_end]`.
pub fn integrate(
    obj: &Objective,
    cfg: &OdeConfig,
    x0: &DVector<f64>,
) -> Result<OdeTrajectory, OdeError> {
    cfg.validate()?;
    if x0.len() != obj.dim() {
        return Err(OdeError::DimensionMismatch {
            got: x0.len(),
            expected: obj.dim(),
        });
    }
    let dim = obj.dim();
    let (r, s) = (cfg.r, cfg.s);
    let t_init = cfg.t_init();
    let t_end = cfg.t_end;
    let mut t = t_init;
    let mut y = {
        let init = initial_state(obj, cfg, x0);
        let mut y = DVector::zeros(2 * dim);
        y.rows_mut(0, dim).copy_from(&init.position);
        y.rows_mut(dim, dim).copy_from(&init.velocity);
        y
    };
    let mut dy = stacked_rhs(obj, r, s, t, &y);
    if !dy.iter().all(|v| v.is_finite()) {
        return Err(OdeError::NonFiniteState(t));
    }
    let mut knots = vec![Knot {
        t,
        y: y.clone(),
        dy: dy.clone(),
    }];
    let h_floor = UNDERFLOW_FRACTION * s.sqrt();
    let mut h = ((t_end - t_init) * 1e-3).max(h_floor * 10.0);
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    while t < t_end {
        h = h.min(t_end - t);
        if h < h_floor {
            return Err(OdeError::StepUnderflow { t });
        }
        let k1 = dy.clone();
        let k2 = stacked_rhs(obj, r, s, t + C2 * h, &(&y + h * (A21 * &k1)));
        let k3 = stacked_rhs(obj, r, s, t + C3 * h, &(&y + h * (A31 * &k1 + A32 * &k2)));
        let k4 = stacked_rhs(
            obj,
            r,
            s,
            t + C4 * h,
            &(&y + h * (A41 * &k1 + A42 * &k2 + A43 * &k3)),
        );
        let k5 = stacked_rhs(
            obj,
            r,
            s,
            t + C5 * h,
            &(&y + h * (A51 * &k1 + A52 * &k2 + A53 * &k3 + A54 * &k4)),
        );
        let k6 = stacked_rhs(
            obj,
            r,
            s,
            t + h,
            &(&y + h * (A61 * &k1 + A62 * &k2 + A63 * &k3 + A64 * &k4 + A65 * &k5)),
        );
        let y_new = &y + h * (B1 * &k1 + B3 * &k3 + B4 * &k4 + B5 * &k5 + B6 * &k6);
        let k7 = stacked_rhs(obj, r, s, t + h, &y_new);
        let err_vec = h * (E1 * &k1 + E3 * &k3 + E4 * &k4 + E5 * &k5 + E6 * &k6 + E7 * &k7);
        let mut err_acc = 0.0;
        let mut finite = y_new.iter().all(|v| v.is_finite()) && k7.iter().all(|v| v.is_finite());
        if finite {
            for i in 0..err_vec.len() {
                let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
                let e = err_vec[i] / scale;
                err_acc += e * e;
            }
            finite = err_acc.is_finite();
        }
        let err_norm = if finite {
            (err_acc / err_vec.len() as f64).sqrt()
        } else {
            f64::INFINITY
        };
        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            dy = k7; // first-same-as-last
            knots.push(Knot {
                t,
                y: y.clone(),
                dy: dy.clone(),
            });
            accepted += 1;
            let scale = if err_norm == 0.0 {
                MAX_SCALE
            } else {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
            };
            h *= scale;
        } else {
            rejected += 1;
            let scale = if err_norm.is_finite() {
                (SAFETY * err_norm.powf(-0.2)).clamp(MIN_SCALE, 1.0)
            } else {
                MIN_SCALE
            };
            h *= scale;
        }
    }
    let mut trajectory = OdeTrajectory {
        r,
        s,
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        t_init,
        t_end,
        samples: Vec::new(),
        accepted_steps: accepted,
        rejected_steps: rejected,
        knots,
        dim,
    };
    let mut times = cfg.sample_times.clone();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut samples = Vec::with_capacity(times.len());
    for t in times {
        samples.push(trajectory.state_at(t)?);
    }
    trajectory.samples = samples;
    Ok(trajectory)
}

/// Continuous Lyapunov value at `state`; defined for `t` strictly beyond the
/// pole `(r + 1) sqrt(s)` and normally consulted on `t >= (r + 2) sqrt(s)`.
pub fn continuous_lyapunov(
    obj: &Objective,
    r: f64,
    s: f64,
    state: &OdeState,
) -> Result<f64, OdeError> {
    let sqrt_s = s.sqrt();
    let pole = (r + 1.0) * sqrt_s;
    if state.t <= pole {
        return Err(OdeError::PoleTime { t: state.t, pole });
    }
    let x_star = obj.minimizer().ok_or_else(|| OdeError::MinimizerUnknown {
        what: "the continuous Lyapunov value",
        objective: obj.name().to_string(),
    })?;
    let f_star = obj
        .optimal_value()
        .expect("a known minimizer implies a known optimal value");
    let t = state.t;
    let coeff = t * (t - r * sqrt_s) / (t - (r + 1.0) * sqrt_s) * (t + (r + 1.0) * sqrt_s / 2.0);
    let lookahead = &state.position + sqrt_s * &state.velocity;
    let gap = obj.eval(&lookahead) - f_star;
    let mixed = t * &state.velocity + r * (&state.position - x_star);
    Ok(coeff * gap + 0.5 * mixed.norm_squared())
}

/// One row of the continuous rate report, at a sample time `t >= t0`.
#[derive(Debug, Clone, Copy)]
pub struct RateRow {
    pub t: f64,
    /// `f(X + sqrt(s) V) - f*` at this time.
    pub f_gap: f64,
    pub lyapunov: f64,
    /// `E(t0) / t^2`.
    pub bound: f64,
    pub bound_satisfied: bool,
    /// `t^3 inf_{u <= t} |grad f(X(u) + sqrt(s) V(u))|^2` over the samples.
    pub cubic_inf_grad: f64,
    /// `t^2 inf_{u <= t} (f - f*)` over the samples.
    pub quadratic_inf_gap: f64,
}

/// Certified-rate table over the samples of a trajectory.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// `t0 = (r + 2) sqrt(s)`.
    pub origin: f64,
    /// `E(t0)`, the constant in the `E(t0)/t^2` bound.
    pub lyapunov_origin: f64,
    /// Comparison tolerance: `10 (abs_tol + rel_tol |bound|)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl RateReport {
    pub fn all_bounds_satisfied(&self) -> bool {
        self.rows.iter().all(|row| row.bound_satisfied)
    }

    /// Largest increase `E(t_{i+1}) - E(t_i)` across consecutive rows along
    /// with the increase allowed by the integration tolerance at that point.
    pub fn worst_lyapunov_increase(&self) -> (f64, f64) {
        let mut worst = f64::NEG_INFINITY;
        let mut allowance = 0.0;
        for pair in self.rows.windows(2) {
            let inc = pair[1].lyapunov - pair[0].lyapunov;
            if inc > worst {
                worst = inc;
                allowance = 10.0 * (self.abs_tol + self.rel_tol * pair[0].lyapunov.abs());
            }
        }
        if self.rows.len() < 2 {
            worst = 0.0;
        }
        (worst, allowance)
    }
}

/// Builds the rate report from a trajectory's samples at times past the rate
/// origin. Requires a known minimizer.
pub fn continuous_rate_report(
    obj: &Objective,
    trajectory: &OdeTrajectory,
) -> Result<RateReport, OdeError> {
    let x_star = obj.minimizer().ok_or_else(|| OdeError::MinimizerUnknown {
        what: "the continuous rate report",
        objective: obj.name().to_string(),
    })?;
    let _ = x_star;
    let f_star = obj
        .optimal_value()
        .expect("a known minimizer implies a known optimal value");
    let (r, s) = (trajectory.r, trajectory.s);
    let sqrt_s = s.sqrt();
    let origin = (r + 2.0) * sqrt_s;
    let origin_state = trajectory.state_at(origin)?;
    let lyapunov_origin = continuous_lyapunov(obj, r, s, &origin_state)?;
    let mut rows = Vec::new();
    let mut inf_grad = f64::INFINITY;
    let mut inf_gap = f64::INFINITY;
    for sample in &trajectory.samples {
        if sample.t < origin - 1e-12 {
            continue;
        }
        let lookahead = &sample.position + sqrt_s * &sample.velocity;
        let f_gap = obj.eval(&lookahead) - f_star;
        let grad_sq = obj.grad(&lookahead).norm_squared();
        inf_grad = inf_grad.min(grad_sq);
        inf_gap = inf_gap.min(f_gap);
        let lyapunov = continuous_lyapunov(obj, r, s, sample)?;
        let bound = lyapunov_origin / (sample.t * sample.t);
        let tol = 10.0 * (trajectory.abs_tol + trajectory.rel_tol * bound.abs());
        rows.push(RateRow {
            t: sample.t,
            f_gap,
            lyapunov,
            bound,
            bound_satisfied: f_gap <= bound + tol,
            cubic_inf_grad: sample.t.powi(3) * inf_grad,
            quadratic_inf_gap: sample.t * sample.t * inf_gap,
        });
    }
    Ok(RateReport {
        rows,
        origin,
        lyapunov_origin,
        rel_tol: trajectory.rel_tol,
        abs_tol: trajectory.abs_tol,
    })
}
