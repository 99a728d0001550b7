//! Python bindings for the accelerated-gradient solvers and their
//! convergence certificates. The module mirrors the Rust API: build an
//! `Objective`, run a scheme to get a `Trace`, then query the trace for
//! Lyapunov values, envelope satisfaction, and tail metrics, or integrate
//! the continuous-time limit and read its rate report.

use nalgebra::DVector;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use nagcert::diagnostics::{self, EnvelopeKind, LyapunovForm};
use nagcert::harness::csv;
use nagcert::objectives::{self, Objective};
use nagcert::ode;
use nagcert::schemes::{self, SchemeConfig, SchemeKind, Trace};

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<SchemeKind> {
    match name {
        "two-sequence" => Ok(SchemeKind::TwoSequence),
        "gradient-correction" => Ok(SchemeKind::GradientCorrection),
        "implicit-velocity" => Ok(SchemeKind::ImplicitVelocity),
        other => Err(value_err(format!(
            "unknown scheme '{other}'; expected two-sequence, gradient-correction, \
             or implicit-velocity"
        ))),
    }
}

fn parse_form(name: &str) -> PyResult<LyapunovForm> {
    LyapunovForm::ALL
        .into_iter()
        .find(|form| form.label() == name)
        .ok_or_else(|| {
            value_err(format!(
                "unknown Lyapunov form '{name}'; expected gradient-correction, \
                 implicit-velocity, or unified"
            ))
        })
}

fn vector(x: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(x)
}

#[pyclass(name = "Objective", frozen)]
struct PyObjective {
    inner: Objective,
}

#[pymethods]
impl PyObjective {
    /// One of the built-in test problems: quadratic-1d, quadratic-2d,
    /// quadratic-ill, log-sum-exp, logistic.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: objectives::preset(name).map_err(value_err)?,
        })
    }

    /// Diagonal quadratic `f(x) = sum_i d_i x_i^2 / 2` with known minimizer.
    #[staticmethod]
    fn quadratic(diag: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: objectives::Objective::diagonal_quadratic("quadratic", &diag)
                .map_err(value_err)?,
        })
    }

    /// Seeded soft-max of `m` random affine forms in dimension `d`.
    #[staticmethod]
    #[pyo3(signature = (m, d, seed = 7, scale = 1.0))]
    fn log_sum_exp(m: usize, d: usize, seed: u64, scale: f64) -> PyResult<Self> {
        Ok(Self {
            inner: objectives::synthetic_log_sum_exp("log-sum-exp", m, d, seed, scale)
                .map_err(value_err)?,
        })
    }

    /// Seeded regularized logistic loss on `n` random examples in
    /// dimension `d`.
    #[staticmethod]
    #[pyo3(signature = (n, d, seed = 11, reg = 1e-3))]
    fn logistic(n: usize, d: usize, seed: u64, reg: f64) -> PyResult<Self> {
        Ok(Self {
            inner: objectives::synthetic_logistic("logistic", n, d, seed, reg)
                .map_err(value_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Certified gradient Lipschitz constant.
    #[getter]
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }

    #[getter]
    fn minimizer(&self) -> Option<Vec<f64>> {
        self.inner.minimizer().map(|m| m.iter().copied().collect())
    }

    #[getter]
    fn optimal_value(&self) -> Option<f64> {
        self.inner.optimal_value()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.check_dim(x.len())?;
        Ok(self.inner.eval(&vector(x)))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok(self.inner.grad(&vector(x)).iter().copied().collect())
    }

    /// Worst coordinate deviation between the analytic gradient and central
    /// differences of width `h` at `x`.
    #[pyo3(signature = (x, h = 1e-6))]
    fn gradient_check(&self, x: Vec<f64>, h: f64) -> PyResult<f64> {
        objectives::gradient_check(&self.inner, &vector(x), h).map_err(value_err)
    }

    /// Minimum smoothness slack over seeded random pairs; a negative value
    /// beyond roundoff refutes the certified Lipschitz constant.
    #[pyo3(signature = (num_samples = 64, seed = 0))]
    fn smoothness_certificate(&self, num_samples: usize, seed: u64) -> PyResult<f64> {
        objectives::smoothness_certificate(&self.inner, num_samples, seed).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Objective(name='{}', dim={}, lipschitz={})",
            self.inner.name(),
            self.inner.dim(),
            self.inner.lipschitz()
        )
    }
}

impl PyObjective {
    fn check_dim(&self, got: usize) -> PyResult<()> {
        if got != self.inner.dim() {
            return Err(value_err(format!(
                "point has dimension {got}, objective expects {}",
                self.inner.dim()
            )));
        }
        Ok(())
    }
}

#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: Trace,
    objective: Objective,
}

#[pymethods]
impl PyTrace {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme.label().to_string()
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }

    #[getter]
    fn step_size(&self) -> f64 {
        self.inner.step_size
    }

    /// Optimal value the gaps are measured against, when one is known or
    /// was estimated.
    #[getter]
    fn f_star(&self) -> Option<f64> {
        self.inner.f_star
    }

    /// Iterate `x_k`.
    fn iterate(&self, k: usize) -> PyResult<Vec<f64>> {
        self.record(k).map(|rec| rec.x.iter().copied().collect())
    }

    /// Lookahead point `y_k`.
    fn lookahead(&self, k: usize) -> PyResult<Vec<f64>> {
        self.record(k).map(|rec| rec.y.iter().copied().collect())
    }

    /// `f(y_k) - f*` per index; None when no optimal value is available.
    fn objective_gaps(&self) -> Option<Vec<f64>> {
        let f_star = self.inner.f_star?;
        Some(
            self.inner
                .records
                .iter()
                .map(|rec| rec.f_y - f_star)
                .collect(),
        )
    }

    /// `|grad f(y_k)|^2` per index.
    fn gradient_norms_squared(&self) -> Vec<f64> {
        self.inner
            .records
            .iter()
            .map(|rec| rec.grad_norm_sq)
            .collect()
    }

    /// Lyapunov value at `k` in the named form: gradient-correction,
    /// implicit-velocity, or unified.
    fn lyapunov(&self, k: usize, form: &str) -> PyResult<f64> {
        diagnostics::lyapunov_value(&self.inner, k, parse_form(form)?).map_err(runtime_err)
    }

    /// Slack of the certified per-step decrease bound at transition `k`.
    fn monotone_slack(&self, k: usize) -> PyResult<f64> {
        diagnostics::monotone_bound_slack(&self.inner, k).map_err(runtime_err)
    }

    /// Whether the named rate envelope holds at every index: objective-y,
    /// objective-x, gradnorm-y, or gradnorm-x.
    fn envelope_holds(&self, kind: &str) -> PyResult<bool> {
        let report = match kind {
            "objective-y" => diagnostics::envelope_report(&self.inner, EnvelopeKind::ObjectiveY),
            "objective-x" => diagnostics::envelope_report(&self.inner, EnvelopeKind::ObjectiveX),
            "gradnorm-y" => diagnostics::envelope_report(&self.inner, EnvelopeKind::GradNormY),
            "gradnorm-x" => diagnostics::envelope_report_gradnorm_x(&self.objective, &self.inner),
            other => return Err(value_err(format!("unknown envelope '{other}'"))),
        }
        .map_err(runtime_err)?;
        Ok(report.all_satisfied())
    }

    /// `(lhs(K), budget)` of the truncated summability bound at the final
    /// index.
    fn series_budget(&self) -> PyResult<(f64, f64)> {
        diagnostics::series_budget(&self.inner, self.inner.len() - 1).map_err(runtime_err)
    }

    /// `(k^3 min grad^2, k^2 min gap, weighted tail sum)` at `k`.
    fn tail_metrics(&self, k: usize) -> PyResult<(f64, f64, f64)> {
        let m = diagnostics::tail_scaled_metrics(&self.inner, k).map_err(runtime_err)?;
        Ok((m.cubic_min_grad, m.quadratic_min_gap, m.tail_sum))
    }

    /// The trace as a CSV string, identical to the harness artifact.
    fn to_csv(&self) -> String {
        csv::trace_csv_string(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(scheme='{}', r={}, step_size={}, len={})",
            self.inner.scheme.label(),
            self.inner.r,
            self.inner.step_size,
            self.inner.len()
        )
    }
}

impl PyTrace {
    fn record(&self, k: usize) -> PyResult<&nagcert::schemes::TraceRecord> {
        self.inner.records.get(k).ok_or_else(|| {
            value_err(format!(
                "index {k} out of range for {} records",
                self.inner.len()
            ))
        })
    }
}

/// Runs one scheme. `step_size` defaults to `1/L`; `x0` defaults to the
/// all-ones vector.
#[pyfunction]
#[pyo3(signature = (objective, scheme, r, max_iter, step_size = None, x0 = None))]
fn run(
    objective: &PyObjective,
    scheme: &str,
    r: f64,
    max_iter: usize,
    step_size: Option<f64>,
    x0: Option<Vec<f64>>,
) -> PyResult<PyTrace> {
    let obj = &objective.inner;
    let cfg = SchemeConfig {
        scheme: parse_scheme(scheme)?,
        r,
        step_size: step_size.unwrap_or(1.0 / obj.lipschitz()),
        x0: x0
            .map(vector)
            .unwrap_or_else(|| DVector::from_element(obj.dim(), 1.0)),
        max_iter,
    };
    Ok(PyTrace {
        inner: schemes::run(obj, &cfg).map_err(runtime_err)?,
        objective: obj.clone(),
    })
}

/// Max pairwise deviation of the three formulations on the same problem,
/// measured against `1 + max norm` per index.
#[pyfunction]
#[pyo3(signature = (objective, r, max_iter, step_size = None, x0 = None))]
fn compare_schemes(
    objective: &PyObjective,
    r: f64,
    max_iter: usize,
    step_size: Option<f64>,
    x0: Option<Vec<f64>>,
) -> PyResult<f64> {
    let obj = &objective.inner;
    let x0 = x0
        .map(vector)
        .unwrap_or_else(|| DVector::from_element(obj.dim(), 1.0));
    let mut traces = Vec::new();
    for scheme in SchemeKind::ALL {
        let cfg = SchemeConfig {
            scheme,
            r,
            step_size: step_size.unwrap_or(1.0 / obj.lipschitz()),
            x0: x0.clone(),
            max_iter,
        };
        traces.push(schemes::run(obj, &cfg).map_err(runtime_err)?);
    }
    let refs: Vec<&Trace> = traces.iter().collect();
    Ok(nagcert::harness::verify::pairwise_deviation(&refs).0)
}

/// Reference-run estimate of the optimal value for objectives without a
/// closed form.
#[pyfunction]
#[pyo3(signature = (objective, iters, x0 = None))]
fn estimate_optimal_value(
    objective: &PyObjective,
    iters: usize,
    x0: Option<Vec<f64>>,
) -> PyResult<f64> {
    let obj = &objective.inner;
    let x0 = x0
        .map(vector)
        .unwrap_or_else(|| DVector::from_element(obj.dim(), 1.0));
    schemes::estimate_optimal_value(obj, &x0, iters).map_err(runtime_err)
}

#[pyclass(name = "RateReport", frozen)]
struct PyRateReport {
    inner: ode::RateReport,
}

#[pymethods]
impl PyRateReport {
    /// Start of the certified window, `(r + 2) sqrt(s)`.
    #[getter]
    fn origin(&self) -> f64 {
        self.inner.origin
    }

    /// `E(t0)`, the constant in the `E(t0)/t^2` gap bound.
    #[getter]
    fn lyapunov_origin(&self) -> f64 {
        self.inner.lyapunov_origin
    }

    fn times(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|row| row.t).collect()
    }

    fn gaps(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|row| row.f_gap).collect()
    }

    fn bounds(&self) -> Vec<f64> {
        self.inner.rows.iter().map(|row| row.bound).collect()
    }

    fn all_bounds_satisfied(&self) -> bool {
        self.inner.all_bounds_satisfied()
    }

    /// `(worst increase, allowance)` of the continuous Lyapunov function
    /// across consecutive samples.
    fn worst_lyapunov_increase(&self) -> (f64, f64) {
        self.inner.worst_lyapunov_increase()
    }

    fn to_csv(&self) -> String {
        csv::ode_csv_string(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "RateReport(rows={}, origin={}, all_bounds_satisfied={})",
            self.inner.rows.len(),
            self.inner.origin,
            self.inner.all_bounds_satisfied()
        )
    }
}

/// Integrates the continuous-time limit and certifies its `E(t0)/t^2` rate
/// over `samples` uniform times. Needs an objective with a known minimizer.
#[pyfunction]
#[pyo3(signature = (objective, r, s, t_end, x0 = None, rel_tol = 1e-9, abs_tol = 1e-9, samples = 400))]
#[allow(clippy::too_many_arguments)]
fn integrate_ode(
    objective: &PyObjective,
    r: f64,
    s: f64,
    t_end: f64,
    x0: Option<Vec<f64>>,
    rel_tol: f64,
    abs_tol: f64,
    samples: usize,
) -> PyResult<PyRateReport> {
    let obj = &objective.inner;
    let mut cfg = ode::OdeConfig {
        r,
        s,
        rel_tol,
        abs_tol,
        t_end,
        sample_times: Vec::new(),
    };
    cfg.sample_times = ode::uniform_times(cfg.t_init(), t_end, samples);
    let x0 = x0
        .map(vector)
        .unwrap_or_else(|| DVector::from_element(obj.dim(), 1.0));
    let trajectory = ode::integrate(obj, &cfg, &x0).map_err(runtime_err)?;
    Ok(PyRateReport {
        inner: ode::continuous_rate_report(obj, &trajectory).map_err(runtime_err)?,
    })
}

#[pymodule]
fn nagcert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyRateReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(compare_schemes, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_optimal_value, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_ode, m)?)?;
    Ok(())
}
