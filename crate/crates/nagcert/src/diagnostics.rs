//! Convergence certificates computed from a finished trace.
//!
//! The central object is the discrete Lyapunov function
//!
//! ```text
//! E(k) = s k (k + r) (f(y_{k-1}) - f*) + 1/2 |w_k|^2,   E(0) = r^2/2 |x_0 - x*|^2,
//! ```
//!
//! where the mixed term `w_k` has three equal spellings:
//!
//! * gradient-correction: `k (y_k - y_{k-1}) + r (y_k - x*) + s k grad f(y_{k-1})`
//! * implicit-velocity:   `(k - 1)(x_k - x_{k-1}) + r (x_k - x*)`
//! * unified:             `k (y_k - x_k) + r (y_k - x*)`
//!
//! For admissible runs (`s <= 1/L`, `r >= 2`) the sequence `E(k)` decreases
//! at least as fast as
//!
//! ```text
//! E(k+1) - E(k) <= - s^2 k (k+r)/2 |grad f(y_{k-1})|^2
//!                  - s ((r-2) k + r^2 - r - 1) (f(y_k) - f*),
//! ```
//!
//! note the previous-index gradient on the right-hand side. Summing the
//! telescoped bound yields the rate envelopes and the summability budget
//! checked here.

use thiserror::Error;

use crate::schemes::Trace;

/// Tolerance of the `measured <= bound` comparisons in envelope reports.
pub const ENVELOPE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trace index k = {k} is out of range (trace holds {len} records)")]
    IndexOutOfRange { k: usize, len: usize },
    #[error("{what} requires a known minimizer, which objective `{objective}` lacks")]
    MinimizerUnknown {
        what: &'static str,
        objective: String,
    },
    #[error("{what} requires f*, which objective `{objective}` lacks")]
    OptimalValueUnknown {
        what: &'static str,
        objective: String,
    },
    #[error("the x-sequence envelope starts at k = 1; k = 0 has no bound")]
    XEnvelopeAtZero,
    #[error("weight-sum identity failed at k = {k}: sum = {sum}, closed form = {closed}")]
    WeightIdentity { k: usize, sum: f64, closed: f64 },
}

/// The three equal spellings of the Lyapunov mixed term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LyapunovForm {
    GradientCorrection,
    ImplicitVelocity,
    Unified,
}

impl LyapunovForm {
    pub const ALL: [LyapunovForm; 3] = [
        LyapunovForm::GradientCorrection,
        LyapunovForm::ImplicitVelocity,
        LyapunovForm::Unified,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LyapunovForm::GradientCorrection => "gradient-correction",
            LyapunovForm::ImplicitVelocity => "implicit-velocity",
            LyapunovForm::Unified => "unified",
        }
    }
}

fn require_minimizer<'t>(
    trace: &'t Trace,
    what: &'static str,
) -> Result<&'t nalgebra::DVector<f64>, DiagnosticsError> {
    trace
        .minimizer
        .as_ref()
        .ok_or_else(|| DiagnosticsError::MinimizerUnknown {
            what,
            objective: trace.objective_name.clone(),
        })
}

fn require_f_star(trace: &Trace, what: &'static str) -> Result<f64, DiagnosticsError> {
    trace
        .f_star
        .ok_or_else(|| DiagnosticsError::OptimalValueUnknown {
            what,
            objective: trace.objective_name.clone(),
        })
}

fn check_index(trace: &Trace, k: usize) -> Result<(), DiagnosticsError> {
    if k < trace.len() {
        Ok(())
    } else {
        Err(DiagnosticsError::IndexOutOfRange {
            k,
            len: trace.len(),
        })
    }
}

/// Evaluates `E(k)` in the requested form. Requires a known minimizer; at
/// `k = 0` every form reduces to `r^2/2 |x_0 - x*|^2`.
pub fn lyapunov_value(
    trace: &Trace,
    k: usize,
    form: LyapunovForm,
) -> Result<f64, DiagnosticsError> {
    check_index(trace, k)?;
    let x_star = require_minimizer(trace, "the Lyapunov value")?;
    let f_star = require_f_star(trace, "the Lyapunov value")?;
    if k == 0 {
        let d0 = (&trace.x0 - x_star).norm();
        return Ok(0.5 * trace.r * trace.r * d0 * d0);
    }
    let s = trace.step_size;
    let r = trace.r;
    let kf = k as f64;
    let cur = &trace.records[k];
    let prev = &trace.records[k - 1];
    let potential = s * kf * (kf + r) * (prev.f_y - f_star);
    let mixed = match form {
        LyapunovForm::GradientCorrection => {
            kf * (&cur.y - &prev.y) + r * (&cur.y - x_star) + (s * kf) * &prev.grad_y
        }
        LyapunovForm::ImplicitVelocity => (kf - 1.0) * (&cur.x - &prev.x) + r * (&cur.x - x_star),
        LyapunovForm::Unified => kf * (&cur.y - &cur.x) + r * (&cur.y - x_star),
    };
    Ok(potential + 0.5 * mixed.norm_squared())
}

/// Per-index Lyapunov values in all three forms plus decrease-bound slacks.
#[derive(Debug, Clone)]
pub struct LyapunovSeries {
    /// `values[k] = [gc, iv, unified]` for `k = 0..trace.len()`.
    pub values: Vec<[f64; 3]>,
    /// `slacks[k]` certifies the transition `k -> k + 1`; length is
    /// `trace.len() - 1`.
    pub slacks: Vec<f64>,
}

impl LyapunovSeries {
    /// Largest relative disagreement between forms, measured against
    /// `1 + E_unified`.
    pub fn worst_form_disagreement(&self) -> (f64, usize) {
        let mut worst = 0.0;
        let mut at = 0;
        for (k, v) in self.values.iter().enumerate() {
            let scale = 1.0 + v[2].abs();
            let spread = (v[0] - v[2])
                .abs()
                .max((v[1] - v[2]).abs())
                .max((v[0] - v[1]).abs());
            if spread / scale > worst {
                worst = spread / scale;
                at = k;
            }
        }
        (worst, at)
    }
}

/// Computes the full Lyapunov series and per-step decrease slacks in one
/// pass. The slack at `k` is `RHS(k) - (E(k+1) - E(k))` with the unified
/// form as the canonical value; nonnegative up to roundoff for admissible
/// runs.
pub fn lyapunov_series(trace: &Trace) -> Result<LyapunovSeries, DiagnosticsError> {
    let n = trace.len();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        values.push([
            lyapunov_value(trace, k, LyapunovForm::GradientCorrection)?,
            lyapunov_value(trace, k, LyapunovForm::ImplicitVelocity)?,
            lyapunov_value(trace, k, LyapunovForm::Unified)?,
        ]);
    }
    let f_star = require_f_star(trace, "the decrease bound")?;
    let s = trace.step_size;
    let r = trace.r;
    let mut slacks = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let kf = k as f64;
        // The first RHS term vanishes at k = 0 through its k-factor, so the
        // k-1 gradient is only consulted for k >= 1.
        let grad_term = if k == 0 {
            0.0
        } else {
            s * s * kf * (kf + r) / 2.0 * trace.records[k - 1].grad_norm_sq
        };
        let gap_term = s * ((r - 2.0) * kf + r * r - r - 1.0) * (trace.records[k].f_y - f_star);
        let rhs = -grad_term - gap_term;
        slacks.push(rhs - (values[k + 1][2] - values[k][2]));
    }
    Ok(LyapunovSeries { values, slacks })
}

/// Slack of the Lyapunov decrease bound for the single transition
/// `k -> k + 1`; see [`lyapunov_series`].
pub fn monotone_bound_slack(trace: &Trace, k: usize) -> Result<f64, DiagnosticsError> {
    check_index(trace, k + 1)?;
    let f_star = require_f_star(trace, "the decrease bound")?;
    let s = trace.step_size;
    let r = trace.r;
    let kf = k as f64;
    let e_next = lyapunov_value(trace, k + 1, LyapunovForm::Unified)?;
    let e_cur = lyapunov_value(trace, k, LyapunovForm::Unified)?;
    let grad_term = if k == 0 {
        0.0
    } else {
        s * s * kf * (kf + r) / 2.0 * trace.records[k - 1].grad_norm_sq
    };
    let gap_term = s * ((r - 2.0) * kf + r * r - r - 1.0) * (trace.records[k].f_y - f_star);
    Ok(-grad_term - gap_term - (e_next - e_cur))
}

/// Which sequence an objective-gap envelope constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    Y,
    X,
}

/// Closed-form objective-gap envelope at index `k`:
///
/// * `y`-sequence (`k >= 0`): `r^2 d0^2 / (2 s (k+1)(k+r+1))`
/// * `x`-sequence (`k >= 1`): `r^2 d0^2 / (2 s k (k+r))`
pub fn envelope_objective(
    k: usize,
    r: f64,
    s: f64,
    d0: f64,
    seq: SequenceKind,
) -> Result<f64, DiagnosticsError> {
    let kf = k as f64;
    let denom = match seq {
        SequenceKind::Y => 2.0 * s * (kf + 1.0) * (kf + r + 1.0),
        SequenceKind::X => {
            if k == 0 {
                return Err(DiagnosticsError::XEnvelopeAtZero);
            }
            2.0 * s * kf * (kf + r)
        }
    };
    Ok(r * r * d0 * d0 / denom)
}

/// `sum_{i=0}^{k} (i+1)(i+r+1)` in exact integer arithmetic when `r` is
/// integral, else in floating point.
fn weight_sum(k: usize, r: f64) -> f64 {
    if r.fract() == 0.0 && r >= 0.0 {
        let ri = r as u128;
        let mut sum: u128 = 0;
        for i in 0..=(k as u128) {
            sum += (i + 1) * (i + ri + 1);
        }
        sum as f64
    } else {
        (0..=k)
            .map(|i| {
                let fi = i as f64;
                (fi + 1.0) * (fi + r + 1.0)
            })
            .sum()
    }
}

/// Closed form of the same sum: `(k+1)(k+2)(2k + 3r + 3)/6`.
fn weight_sum_closed(k: usize, r: f64) -> f64 {
    let kf = k as f64;
    (kf + 1.0) * (kf + 2.0) * (2.0 * kf + 3.0 * r + 3.0) / 6.0
}

/// Verifies `sum_{i=0}^{k} (i+1)(i+r+1) = (k+1)(k+2)(2k+3r+3)/6`, exactly
/// for integral `r` (both sides scaled by 6 in `u128`) and to relative
/// `1e-12` otherwise.
pub fn weight_sum_identity_holds(k: usize, r: f64) -> bool {
    if r.fract() == 0.0 && r >= 0.0 {
        let ri = r as u128;
        let ku = k as u128;
        let mut sum: u128 = 0;
        for i in 0..=ku {
            sum += (i + 1) * (i + ri + 1);
        }
        6 * sum == (ku + 1) * (ku + 2) * (2 * ku + 3 * ri + 3)
    } else {
        let sum = weight_sum(k, r);
        let closed = weight_sum_closed(k, r);
        (sum - closed).abs() <= 1e-12 * closed.abs().max(1.0)
    }
}

/// Envelope for the running minimum of `|grad f(y_i)|^2` up to `k`:
///
/// ```text
/// min_{i <= k} |grad f(y_i)|^2 <= 6 r^2 d0^2 / (s^2 (k+1)(k+2)(2k+3r+3)).
/// ```
///
/// The denominator's closed form is re-derived from the weight sum on every
/// call; disagreement is an internal error.
pub fn envelope_gradnorm(k: usize, r: f64, s: f64, d0: f64) -> Result<f64, DiagnosticsError> {
    let sum = weight_sum(k, r);
    let closed = weight_sum_closed(k, r);
    if !weight_sum_identity_holds(k, r) {
        return Err(DiagnosticsError::WeightIdentity { k, sum, closed });
    }
    Ok(r * r * d0 * d0 / (s * s * closed))
}

/// Which envelope an [`EnvelopeReport`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// `f(y_k) - f*` against the `y`-sequence envelope, `k >= 0`.
    ObjectiveY,
    /// `f(x_k) - f*` against the `x`-sequence envelope, `k >= 1`.
    ObjectiveX,
    /// `min_{i <= k} |grad f(y_i)|^2` against the gradient envelope, `k >= 0`.
    GradNormY,
    /// `min_{1 <= i <= k} |grad f(x_i)|^2` against the gradient envelope at
    /// `k - 1`; gradient steps never expand the gradient norm, so the
    /// `y`-envelope transfers with the index shifted by one.
    GradNormX,
}

impl EnvelopeKind {
    pub fn label(self) -> &'static str {
        match self {
            EnvelopeKind::ObjectiveY => "objective-y",
            EnvelopeKind::ObjectiveX => "objective-x",
            EnvelopeKind::GradNormY => "gradnorm-y",
            EnvelopeKind::GradNormX => "gradnorm-x",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EnvelopeRow {
    pub k: usize,
    pub bound: f64,
    pub measured: f64,
    pub satisfied: bool,
}

/// Bound-versus-measurement table for one envelope along a trace.
#[derive(Debug, Clone)]
pub struct EnvelopeReport {
    pub kind: EnvelopeKind,
    pub rows: Vec<EnvelopeRow>,
}

impl EnvelopeReport {
    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied)
    }

    /// Most negative `bound - measured` over the table and its index.
    pub fn worst_slack(&self) -> (f64, usize) {
        let mut worst = f64::INFINITY;
        let mut at = 0;
        for row in &self.rows {
            let slack = row.bound - row.measured;
            if slack < worst {
                worst = slack;
                at = row.k;
            }
        }
        (worst, at)
    }
}

fn envelope_rows<I>(kind: EnvelopeKind, measured: I, r: f64, s: f64, d0: f64) -> Vec<EnvelopeRow>
where
    I: Iterator<Item = (usize, f64)>,
{
    measured
        .map(|(k, m)| {
            let bound = match kind {
                EnvelopeKind::ObjectiveY => {
                    envelope_objective(k, r, s, d0, SequenceKind::Y).expect("y envelope total")
                }
                EnvelopeKind::ObjectiveX => {
                    envelope_objective(k, r, s, d0, SequenceKind::X).expect("k >= 1 by iteration")
                }
                EnvelopeKind::GradNormY => {
                    envelope_gradnorm(k, r, s, d0).expect("identity verified")
                }
                EnvelopeKind::GradNormX => {
                    envelope_gradnorm(k - 1, r, s, d0).expect("identity verified")
                }
            };
            EnvelopeRow {
                k,
                bound,
                measured: m,
                satisfied: m <= bound + ENVELOPE_TOLERANCE,
            }
        })
        .collect()
}

/// Tabulates one of the trace-measurable envelopes (`ObjectiveY`,
/// `ObjectiveX`, `GradNormY`). Requires a known minimizer for `d0`.
pub fn envelope_report(
    trace: &Trace,
    kind: EnvelopeKind,
) -> Result<EnvelopeReport, DiagnosticsError> {
    let x_star = require_minimizer(trace, "the rate envelope")?;
    let f_star = require_f_star(trace, "the rate envelope")?;
    let d0 = (&trace.x0 - x_star).norm();
    let (r, s) = (trace.r, trace.step_size);
    let rows =
        match kind {
            EnvelopeKind::ObjectiveY => {
                let it = trace.records.iter().map(|rec| (rec.k, rec.f_y - f_star));
                envelope_rows(kind, it, r, s, d0)
            }
            EnvelopeKind::ObjectiveX => {
                let it = trace
                    .records
                    .iter()
                    .skip(1)
                    .map(|rec| (rec.k, rec.f_x - f_star));
                envelope_rows(kind, it, r, s, d0)
            }
            EnvelopeKind::GradNormY => {
                let mut min = f64::INFINITY;
                let it = trace.records.iter().map(|rec| {
                    min = min.min(rec.grad_norm_sq);
                    (rec.k, min)
                });
                envelope_rows(kind, it, r, s, d0)
            }
            EnvelopeKind::GradNormX => return Err(DiagnosticsError::MinimizerUnknown {
                what: "the x-gradient envelope needs the objective; use envelope_report_gradnorm_x",
                objective: trace.objective_name.clone(),
            }),
        };
    Ok(EnvelopeReport { kind, rows })
}

/// Tabulates the `x`-sequence gradient envelope. The run never evaluates
/// `grad f(x_k)`, so this recomputes it from the objective.
pub fn envelope_report_gradnorm_x(
    obj: &crate::objectives::Objective,
    trace: &Trace,
) -> Result<EnvelopeReport, DiagnosticsError> {
    let x_star = require_minimizer(trace, "the rate envelope")?;
    let d0 = (&trace.x0 - x_star).norm();
    let (r, s) = (trace.r, trace.step_size);
    let mut min = f64::INFINITY;
    let it = trace.records.iter().skip(1).map(|rec| {
        min = min.min(obj.grad(&rec.x).norm_squared());
        (rec.k, min)
    });
    let rows = envelope_rows(EnvelopeKind::GradNormX, it, r, s, d0);
    Ok(EnvelopeReport {
        kind: EnvelopeKind::GradNormX,
        rows,
    })
}

/// Truncated summability budget
///
/// ```text
/// lhs(K) = sum_{i=0}^{K} [ s^2/2 (i+1)(i+r+1) |grad f(y_i)|^2
///                          + s ((r-2) i + r^2 - r - 1) (f(y_i) - f*) ]
/// ```
///
/// against `budget = r^2 d0^2 / 2`. Every summand is nonnegative, so
/// `lhs(K)` is nondecreasing in `K` and stays below the budget for
/// admissible runs.
pub fn series_budget(trace: &Trace, upto: usize) -> Result<(f64, f64), DiagnosticsError> {
    check_index(trace, upto)?;
    let x_star = require_minimizer(trace, "the summability budget")?;
    let f_star = require_f_star(trace, "the summability budget")?;
    let d0 = (&trace.x0 - x_star).norm();
    let (r, s) = (trace.r, trace.step_size);
    let mut lhs = 0.0;
    for rec in &trace.records[..=upto] {
        let fi = rec.k as f64;
        lhs += s * s / 2.0 * (fi + 1.0) * (fi + r + 1.0) * rec.grad_norm_sq;
        lhs += s * ((r - 2.0) * fi + r * r - r - 1.0) * (rec.f_y - f_star);
    }
    Ok((lhs, r * r * d0 * d0 / 2.0))
}

/// One-pass profile of the truncated budget: `lhs(K)` for every
/// `K < trace.len()` plus the budget, avoiding the quadratic cost of calling
/// [`series_budget`] per index.
pub fn series_budget_profile(trace: &Trace) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    let x_star = require_minimizer(trace, "the summability budget")?;
    let f_star = require_f_star(trace, "the summability budget")?;
    let d0 = (&trace.x0 - x_star).norm();
    let (r, s) = (trace.r, trace.step_size);
    let mut lhs = 0.0;
    let mut profile = Vec::with_capacity(trace.len());
    for rec in &trace.records {
        let fi = rec.k as f64;
        lhs += s * s / 2.0 * (fi + 1.0) * (fi + r + 1.0) * rec.grad_norm_sq;
        lhs += s * ((r - 2.0) * fi + r * r - r - 1.0) * (rec.f_y - f_star);
        profile.push(lhs);
    }
    Ok((profile, r * r * d0 * d0 / 2.0))
}

/// Tail quantities that witness the faster-than-polynomial decay of the
/// yardsticks: scaled running minima and the weighted tail sum
/// `T(k) = sum_{i=floor(k/2)}^{k} s^2 (i+1)(i+r+1) |grad f(y_i)|^2`.
#[derive(Debug, Clone, Copy)]
pub struct TailMetrics {
    /// `k^3 min_{i <= k} |grad f(y_i)|^2`
    pub cubic_min_grad: f64,
    /// `k^2 min_{i <= k} (f(y_i) - f*)`; NaN when `f*` is unknown.
    pub quadratic_min_gap: f64,
    /// `T(k)` as above.
    pub tail_sum: f64,
}

pub fn tail_scaled_metrics(trace: &Trace, k: usize) -> Result<TailMetrics, DiagnosticsError> {
    check_index(trace, k)?;
    let (r, s) = (trace.r, trace.step_size);
    let kf = k as f64;
    let min_grad = trace.records[..=k]
        .iter()
        .map(|rec| rec.grad_norm_sq)
        .fold(f64::INFINITY, f64::min);
    let quadratic_min_gap = match trace.f_star {
        Some(fs) => {
            let min_gap = trace.records[..=k]
                .iter()
                .map(|rec| rec.f_y - fs)
                .fold(f64::INFINITY, f64::min);
            kf * kf * min_gap
        }
        None => f64::NAN,
    };
    let mut tail_sum = 0.0;
    for rec in &trace.records[k / 2..=k] {
        let fi = rec.k as f64;
        tail_sum += s * s * (fi + 1.0) * (fi + r + 1.0) * rec.grad_norm_sq;
    }
    Ok(TailMetrics {
        cubic_min_grad: kf * kf * kf * min_grad,
        quadratic_min_gap,
        tail_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{self, Objective};
    use crate::schemes::{run, SchemeConfig, SchemeKind};
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn hand_trace(max_iter: usize) -> Trace {
        let obj = objectives::preset("quadratic-1d").unwrap();
        let cfg = SchemeConfig {
            scheme: SchemeKind::TwoSequence,
            r: 2.0,
            step_size: 0.5,
            x0: DVector::from_element(1, 1.0),
            max_iter,
        };
        run(&obj, &cfg).unwrap()
    }

    #[test]
    fn lyapunov_hand_values() {
        // f = x^2/2, s = 0.5, r = 2, x0 = 1:
        // E(0) = 2, E(1) = 1.25, E(2) = 0.53125, E(3) = 0.1396484375.
        let trace = hand_trace(3);
        let expected = [2.0, 1.25, 0.53125, 0.1396484375];
        for (k, want) in expected.iter().enumerate() {
            for form in LyapunovForm::ALL {
                let got = lyapunov_value(&trace, k, form).unwrap();
                assert_relative_eq!(got, *want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn monotone_bound_hand_slacks() {
        // Same run: slack(1) = 0.28125 and slack(2) = 0.1328125.
        let trace = hand_trace(3);
        assert_relative_eq!(
            monotone_bound_slack(&trace, 1).unwrap(),
            0.28125,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            monotone_bound_slack(&trace, 2).unwrap(),
            0.1328125,
            epsilon = 1e-12
        );
    }

    #[test]
    fn lyapunov_series_matches_pointwise_calls() {
        let trace = hand_trace(10);
        let series = lyapunov_series(&trace).unwrap();
        assert_eq!(series.values.len(), 11);
        assert_eq!(series.slacks.len(), 10);
        for k in 0..=10 {
            assert_eq!(
                series.values[k][2],
                lyapunov_value(&trace, k, LyapunovForm::Unified).unwrap()
            );
        }
        for k in 0..10 {
            assert_relative_eq!(
                series.slacks[k],
                monotone_bound_slack(&trace, k).unwrap(),
                epsilon = 1e-15
            );
        }
        let (dis, _) = series.worst_form_disagreement();
        assert!(dis <= 1e-10, "form disagreement {dis:.3e}");
    }

    #[test]
    fn envelope_hand_values() {
        // s = 0.5, r = 2, d0 = 1: y-envelope(2) = 4/15, x-envelope(2) = 0.5,
        // gradient envelope at k = 2 is 24/39 and at k = 0 is 16/3.
        assert_relative_eq!(
            envelope_objective(2, 2.0, 0.5, 1.0, SequenceKind::Y).unwrap(),
            4.0 / 15.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            envelope_objective(2, 2.0, 0.5, 1.0, SequenceKind::X).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            envelope_gradnorm(2, 2.0, 0.5, 1.0).unwrap(),
            24.0 / 39.0,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            envelope_gradnorm(0, 2.0, 0.5, 1.0).unwrap(),
            16.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn x_envelope_rejects_k_zero() {
        assert!(matches!(
            envelope_objective(0, 2.0, 0.5, 1.0, SequenceKind::X).unwrap_err(),
            DiagnosticsError::XEnvelopeAtZero
        ));
    }

    #[test]
    fn weight_sum_identity_small_case() {
        // k = 2, r = 2: 3 + 8 + 15 = 26 = 3 * 4 * 13 / 6.
        assert!(weight_sum_identity_holds(2, 2.0));
        assert_eq!(weight_sum(2, 2.0), 26.0);
        assert_eq!(weight_sum_closed(2, 2.0), 26.0);
    }

    #[test]
    fn weight_sum_identity_across_r_and_k() {
        for r in [2.0, 3.0, 4.0] {
            for k in [0, 1, 2, 5, 17, 100, 999] {
                assert!(weight_sum_identity_holds(k, r), "k = {k}, r = {r}");
            }
        }
        // Non-integer r goes through the floating path.
        assert!(weight_sum_identity_holds(1000, 2.5));
    }

    #[test]
    fn envelopes_hold_along_hand_run() {
        let trace = hand_trace(200);
        for kind in [
            EnvelopeKind::ObjectiveY,
            EnvelopeKind::ObjectiveX,
            EnvelopeKind::GradNormY,
        ] {
            let report = envelope_report(&trace, kind).unwrap();
            assert!(
                report.all_satisfied(),
                "{}: worst slack {:?}",
                kind.label(),
                report.worst_slack()
            );
        }
        let obj = objectives::preset("quadratic-1d").unwrap();
        let report = envelope_report_gradnorm_x(&obj, &trace).unwrap();
        assert!(report.all_satisfied());
    }

    #[test]
    fn series_budget_hand_values() {
        // K = 0: 0.5 * 0.25 * 1 * 3 * 1 + 0.5 * 1 * 0.5 = 0.625;
        // K = 2 accumulates to 1.01220703125; budget = 2.
        let trace = hand_trace(2);
        let (lhs0, budget) = series_budget(&trace, 0).unwrap();
        assert_relative_eq!(lhs0, 0.625, epsilon = 1e-15);
        assert_relative_eq!(budget, 2.0, epsilon = 1e-15);
        let (lhs2, _) = series_budget(&trace, 2).unwrap();
        assert_relative_eq!(lhs2, 1.01220703125, epsilon = 1e-13);
    }

    #[test]
    fn series_budget_monotone_and_bounded() {
        let trace = hand_trace(300);
        let mut prev = 0.0;
        for k in 0..=300 {
            let (lhs, budget) = series_budget(&trace, k).unwrap();
            assert!(lhs >= prev - 1e-15, "series not monotone at k = {k}");
            assert!(lhs <= budget + 1e-10, "budget exceeded at k = {k}");
            prev = lhs;
        }
    }

    #[test]
    fn series_budget_profile_matches_pointwise() {
        let trace = hand_trace(50);
        let (profile, budget) = series_budget_profile(&trace).unwrap();
        assert_eq!(profile.len(), 51);
        for k in [0, 1, 7, 50] {
            let (lhs, b) = series_budget(&trace, k).unwrap();
            assert_relative_eq!(profile[k], lhs, epsilon = 1e-12);
            assert_eq!(b, budget);
        }
    }

    #[test]
    fn tail_metrics_hand_values() {
        // k = 4: min grad^2 = y_4^2 = 0.0234375^2, scaled by 64 gives
        // 0.03515625. T(0) = s^2 * 1 * 3 * |grad f(y_0)|^2 = 0.75.
        let trace = hand_trace(4);
        let m = tail_scaled_metrics(&trace, 4).unwrap();
        assert_relative_eq!(m.cubic_min_grad, 0.03515625, epsilon = 1e-15);
        let t0 = tail_scaled_metrics(&trace, 0).unwrap();
        assert_relative_eq!(t0.tail_sum, 0.75, epsilon = 1e-15);
    }

    #[test]
    fn unknown_minimizer_is_reported() {
        let obj = objectives::preset("logistic").unwrap();
        let cfg = SchemeConfig {
            scheme: SchemeKind::TwoSequence,
            r: 2.0,
            step_size: 1.0 / obj.lipschitz(),
            x0: DVector::from_element(3, 1.0),
            max_iter: 5,
        };
        let trace = run(&obj, &cfg).unwrap();
        assert!(matches!(
            lyapunov_value(&trace, 1, LyapunovForm::Unified).unwrap_err(),
            DiagnosticsError::MinimizerUnknown { .. }
        ));
        assert!(matches!(
            series_budget(&trace, 3).unwrap_err(),
            DiagnosticsError::MinimizerUnknown { .. }
        ));
        // Tail metrics degrade gracefully: the gap column is NaN.
        let m = tail_scaled_metrics(&trace, 5).unwrap();
        assert!(m.quadratic_min_gap.is_nan());
        assert!(m.cubic_min_grad.is_finite());
    }

    #[test]
    fn estimated_f_star_enables_gap_metrics() {
        let obj = objectives::preset("logistic").unwrap();
        let x0 = DVector::from_element(3, 1.0);
        let est = crate::schemes::estimate_optimal_value(&obj, &x0, 50_000).unwrap();
        let obj = obj.with_estimated_optimum(est);
        let cfg = SchemeConfig {
            scheme: SchemeKind::TwoSequence,
            r: 2.0,
            step_size: 1.0 / obj.lipschitz(),
            x0,
            max_iter: 100,
        };
        let trace = run(&obj, &cfg).unwrap();
        let m = tail_scaled_metrics(&trace, 100).unwrap();
        assert!(m.quadratic_min_gap.is_finite());
        assert!(m.quadratic_min_gap >= 0.0);
    }

    #[test]
    fn index_out_of_range_is_reported() {
        let trace = hand_trace(3);
        assert!(matches!(
            lyapunov_value(&trace, 7, LyapunovForm::Unified).unwrap_err(),
            DiagnosticsError::IndexOutOfRange { k: 7, len: 4 }
        ));
        assert!(matches!(
            monotone_bound_slack(&trace, 3).unwrap_err(),
            DiagnosticsError::IndexOutOfRange { .. }
        ));
    }

    #[test]
    fn stationary_run_has_zero_energy() {
        let obj = objectives::preset("quadratic-2d").unwrap();
        let cfg = SchemeConfig {
            scheme: SchemeKind::TwoSequence,
            r: 3.0,
            step_size: 0.25,
            x0: DVector::zeros(2),
            max_iter: 10,
        };
        let trace = run(&obj, &cfg).unwrap();
        for k in 0..=10 {
            assert_eq!(
                lyapunov_value(&trace, k, LyapunovForm::Unified).unwrap(),
                0.0
            );
        }
        for k in 0..10 {
            assert_eq!(monotone_bound_slack(&trace, k).unwrap(), 0.0);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// On random admissible quadratic runs the three Lyapunov forms agree,
        /// E decreases, the decrease bound has nonnegative slack, and the
        /// envelopes plus the budget hold.
        #[test]
        fn prop_certificates_hold(
            eig1 in 0.2f64..6.0,
            eig2 in 0.2f64..6.0,
            x1 in -3.0f64..3.0,
            x2 in -3.0f64..3.0,
            r in 2.0f64..5.0,
            s_frac in 0.1f64..=1.0,
            scheme_idx in 0usize..3,
        ) {
            let obj = Objective::diagonal_quadratic("q", &[eig1, eig2]).unwrap();
            let cfg = SchemeConfig {
                scheme: SchemeKind::ALL[scheme_idx],
                r,
                step_size: s_frac / obj.lipschitz(),
                x0: DVector::from_column_slice(&[x1, x2]),
                max_iter: 80,
            };
            let trace = run(&obj, &cfg).unwrap();
            let series = lyapunov_series(&trace).unwrap();
            let (dis, at) = series.worst_form_disagreement();
            prop_assert!(dis <= 1e-10, "form disagreement {dis:.3e} at k = {at}");
            for k in 0..series.slacks.len() {
                prop_assert!(series.values[k + 1][2] <= series.values[k][2] + 1e-12,
                    "E increased at k = {k}");
                prop_assert!(series.slacks[k] >= -1e-10,
                    "decrease slack {:.3e} at k = {k}", series.slacks[k]);
            }
            for kind in [EnvelopeKind::ObjectiveY, EnvelopeKind::ObjectiveX, EnvelopeKind::GradNormY] {
                let report = envelope_report(&trace, kind).unwrap();
                prop_assert!(report.all_satisfied(), "{} violated", kind.label());
            }
            let (lhs, budget) = series_budget(&trace, trace.len() - 1).unwrap();
            prop_assert!(lhs <= budget + 1e-10, "budget violated: {lhs} > {budget}");
        }
    }
}
