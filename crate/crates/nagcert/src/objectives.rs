//! Smooth convex objectives with certified smoothness constants.
//!
//! Every [`Objective`] carries an upper bound `L` on the gradient Lipschitz
//! constant. Step-size admissibility (`s <= 1/L`) and the per-step descent
//! facts are stated against this certified bound, so `L` may be conservative
//! but must never understate the true constant.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;
use thiserror::Error;

/// Relative slack when deciding whether a symmetric matrix is PSD.
const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("unknown builtin objective `{0}`")]
    UnknownBuiltin(String),
    #[error("quadratic matrix must be square and symmetric")]
    NotSymmetric,
    #[error(
        "quadratic matrix has a negative eigenvalue {0:.6e}; it must be positive semidefinite"
    )]
    NotPositiveSemidefinite(f64),
    #[error("objective has zero curvature bound; a positive Lipschitz constant is required")]
    DegenerateCurvature,
    #[error("dimension mismatch: {context} has length {got}, expected {expected}")]
    DimensionMismatch {
        context: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("difference step h = {0:.6e} is outside (0, 1e-3]")]
    InvalidDifferenceStep(f64),
    #[error("objective evaluated to a non-finite value at {0}")]
    NonFiniteEval(String),
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("regularization weight {0} must be nonnegative")]
    NegativeRegularization(f64),
    #[error("synthetic data size must be positive")]
    EmptyData,
}

type EvalFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
enum ObjectiveForm {
    /// f(x) = 1/2 x'Ax - b'x with A symmetric PSD.
    Quadratic {
        matrix: DMatrix<f64>,
        linear: DVector<f64>,
    },
    /// f(x) = ln sum_i exp(a_i'x + b_i), evaluated with the max-shift trick.
    LogSumExp {
        coeffs: DMatrix<f64>,
        offsets: DVector<f64>,
    },
    /// f(x) = sum_i ln(1 + exp(-a_i'x)) + reg/2 |x|^2, labels folded into rows.
    Logistic { data: DMatrix<f64>, reg: f64 },
    /// Caller-supplied value/gradient pair, used by tests.
    Custom { eval: EvalFn, grad: GradFn },
}

/// A smooth convex function with a certified gradient Lipschitz bound.
///
/// The minimizer and optimal value are carried when they are known in closed
/// form (quadratics), or after [`Objective::with_estimated_optimum`] attaches
/// a numerical estimate of the optimal value alone.
#[derive(Clone)]
pub struct Objective {
    name: String,
    dim: usize,
    lipschitz: f64,
    minimizer: Option<DVector<f64>>,
    optimal_value: Option<f64>,
    optimal_value_estimated: bool,
    form: ObjectiveForm,
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("minimizer_known", &self.minimizer.is_some())
            .field("optimal_value", &self.optimal_value)
            .finish()
    }
}

impl Objective {
    /// Quadratic `f(x) = 1/2 x'Ax - b'x`. `A` must be symmetric PSD with a
    /// positive largest eigenvalue; `L` is that eigenvalue. The minimizer is
    /// solved by Cholesky factorization when `A` is positive definite, and is
    /// the origin when `A` is singular with `b = 0`; otherwise it is unknown.
    pub fn quadratic(
        name: &str,
        matrix: DMatrix<f64>,
        linear: DVector<f64>,
    ) -> Result<Self, ObjectiveError> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim {
            return Err(ObjectiveError::NotSymmetric);
        }
        if linear.len() != dim {
            return Err(ObjectiveError::DimensionMismatch {
                context: "linear term",
                got: linear.len(),
                expected: dim,
            });
        }
        let scale = matrix.amax().max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                    return Err(ObjectiveError::NotSymmetric);
                }
            }
        }
        let eigen = matrix.clone().symmetric_eigen();
        let lambda_max = eigen.eigenvalues.max();
        let lambda_min = eigen.eigenvalues.min();
        if lambda_min < -PSD_TOLERANCE * lambda_max.max(1.0) {
            return Err(ObjectiveError::NotPositiveSemidefinite(lambda_min));
        }
        if lambda_max <= 0.0 {
            return Err(ObjectiveError::DegenerateCurvature);
        }
        let minimizer = match nalgebra::linalg::Cholesky::new(matrix.clone()) {
            Some(chol) => Some(chol.solve(&linear)),
            None if linear.norm() == 0.0 => Some(DVector::zeros(dim)),
            None => None,
        };
        let form = ObjectiveForm::Quadratic { matrix, linear };
        let optimal_value = minimizer.as_ref().map(|m| form_eval(&form, m));
        Ok(Self {
            name: name.to_string(),
            dim,
            lipschitz: lambda_max,
            minimizer,
            optimal_value,
            optimal_value_estimated: false,
            form,
        })
    }

    /// Convenience constructor for a diagonal quadratic with `b = 0`.
    pub fn diagonal_quadratic(name: &str, diag: &[f64]) -> Result<Self, ObjectiveError> {
        let dim = diag.len();
        if dim == 0 {
            return Err(ObjectiveError::EmptyData);
        }
        let matrix = DMatrix::from_diagonal(&DVector::from_column_slice(diag));
        Self::quadratic(name, matrix, DVector::zeros(dim))
    }

    /// Log-sum-exp `f(x) = ln sum_i exp(a_i'x + b_i)` with
    /// `L = lambda_max(A'A)`, an upper bound on the Hessian spectrum.
    pub fn log_sum_exp(
        name: &str,
        coeffs: DMatrix<f64>,
        offsets: DVector<f64>,
    ) -> Result<Self, ObjectiveError> {
        let terms = coeffs.nrows();
        if terms == 0 || coeffs.ncols() == 0 {
            return Err(ObjectiveError::EmptyData);
        }
        if offsets.len() != terms {
            return Err(ObjectiveError::DimensionMismatch {
                context: "offsets",
                got: offsets.len(),
                expected: terms,
            });
        }
        let lipschitz = gram_spectral_bound(&coeffs);
        if lipschitz <= 0.0 {
            return Err(ObjectiveError::DegenerateCurvature);
        }
        Ok(Self {
            name: name.to_string(),
            dim: coeffs.ncols(),
            lipschitz,
            minimizer: None,
            optimal_value: None,
            optimal_value_estimated: false,
            form: ObjectiveForm::LogSumExp { coeffs, offsets },
        })
    }

    /// Regularized logistic loss `f(x) = sum_i ln(1 + exp(-a_i'x)) + reg/2 |x|^2`
    /// where each row `a_i` already carries its label sign. The certified bound
    /// is `L = lambda_max(A'A)/4 + reg`.
    pub fn logistic(name: &str, data: DMatrix<f64>, reg: f64) -> Result<Self, ObjectiveError> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(ObjectiveError::EmptyData);
        }
        if reg < 0.0 {
            return Err(ObjectiveError::NegativeRegularization(reg));
        }
        let lipschitz = gram_spectral_bound(&data) / 4.0 + reg;
        if lipschitz <= 0.0 {
            return Err(ObjectiveError::DegenerateCurvature);
        }
        Ok(Self {
            name: name.to_string(),
            dim: data.ncols(),
            lipschitz,
            minimizer: None,
            optimal_value: None,
            optimal_value_estimated: false,
            form: ObjectiveForm::Logistic { data, reg },
        })
    }

    /// Caller-supplied value/gradient pair with a claimed Lipschitz bound.
    /// No admissibility checks are performed; tests use this to exercise
    /// divergence and stiffness paths with deliberately wrong claims.
    pub fn custom(
        name: &str,
        dim: usize,
        lipschitz: f64,
        eval: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            dim,
            lipschitz,
            minimizer: None,
            optimal_value: None,
            optimal_value_estimated: false,
            form: ObjectiveForm::Custom {
                eval: Arc::new(eval),
                grad: Arc::new(grad),
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Certified upper bound on the gradient Lipschitz constant.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn minimizer(&self) -> Option<&DVector<f64>> {
        self.minimizer.as_ref()
    }

    pub fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    /// True when the stored optimal value is a numerical estimate rather than
    /// a closed-form optimum.
    pub fn optimal_value_is_estimate(&self) -> bool {
        self.optimal_value_estimated
    }

    /// Attaches an externally estimated optimal value (no minimizer).
    pub fn with_estimated_optimum(mut self, value: f64) -> Self {
        self.optimal_value = Some(value);
        self.optimal_value_estimated = true;
        self
    }

    /// Overrides the known minimizer and optimal value; tests use this to
    /// build custom objectives whose optimum is known analytically.
    pub fn with_known_optimum(mut self, minimizer: DVector<f64>, value: f64) -> Self {
        self.minimizer = Some(minimizer);
        self.optimal_value = Some(value);
        self.optimal_value_estimated = false;
        self
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        form_eval(&self.form, x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.form {
            ObjectiveForm::Quadratic { matrix, linear } => matrix * x - linear,
            ObjectiveForm::LogSumExp { coeffs, offsets } => {
                let weights = softmax(&(coeffs * x + offsets));
                coeffs.transpose() * weights
            }
            ObjectiveForm::Logistic { data, reg } => {
                let margins = data * x;
                // w_i = 1/(1 + exp(u_i)) stays in [0, 1] for any finite u_i.
                let weights = margins.map(|u| 1.0 / (1.0 + u.exp()));
                data.transpose() * (-weights) + *reg * x
            }
            ObjectiveForm::Custom { grad, .. } => grad(x),
        }
    }
}

fn form_eval(form: &ObjectiveForm, x: &DVector<f64>) -> f64 {
    match form {
        ObjectiveForm::Quadratic { matrix, linear } => 0.5 * (matrix * x).dot(x) - linear.dot(x),
        ObjectiveForm::LogSumExp { coeffs, offsets } => {
            let z = coeffs * x + offsets;
            let m = z.max();
            m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
        }
        ObjectiveForm::Logistic { data, reg } => {
            let margins = data * x;
            let loss: f64 = margins.iter().map(|&u| softplus_neg(u)).sum();
            loss + 0.5 * reg * x.norm_squared()
        }
        ObjectiveForm::Custom { eval, .. } => eval(x),
    }
}

/// ln(1 + exp(-u)) computed without overflow on either tail.
fn softplus_neg(u: f64) -> f64 {
    if u >= 0.0 {
        (-u).exp().ln_1p()
    } else {
        -u + u.exp().ln_1p()
    }
}

fn softmax(z: &DVector<f64>) -> DVector<f64> {
    let m = z.max();
    let exps = z.map(|v| (v - m).exp());
    let total = exps.sum();
    exps / total
}

/// Largest eigenvalue of `A'A`, i.e. the squared spectral norm of `A`.
fn gram_spectral_bound(a: &DMatrix<f64>) -> f64 {
    let gram = a.transpose() * a;
    gram.symmetric_eigen().eigenvalues.max()
}

/// Builds the log-sum-exp objective from seeded Gaussian data: rows are
/// `scale * N(0, I)` and offsets are standard normal draws.
pub fn synthetic_log_sum_exp(
    name: &str,
    terms: usize,
    dim: usize,
    seed: u64,
    scale: f64,
) -> Result<Objective, ObjectiveError> {
    if terms == 0 || dim == 0 {
        return Err(ObjectiveError::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = gaussian_matrix(terms, dim, scale, &mut rng);
    let offsets = DVector::from_fn(terms, |_, _| rng.sample::<f64, _>(StandardNormal));
    Objective::log_sum_exp(name, coeffs, offsets)
}

/// Builds the logistic objective from seeded Gaussian features with labels
/// `sign(features * w + noise/2)` folded into the rows.
pub fn synthetic_logistic(
    name: &str,
    samples: usize,
    dim: usize,
    seed: u64,
    reg: f64,
) -> Result<Objective, ObjectiveError> {
    if samples == 0 || dim == 0 {
        return Err(ObjectiveError::EmptyData);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = gaussian_matrix(samples, dim, 1.0, &mut rng);
    let teacher = DVector::from_element(dim, 1.0 / (dim as f64).sqrt());
    let mut data = features.clone();
    for i in 0..samples {
        let margin =
            features.row(i).transpose().dot(&teacher) + 0.5 * rng.sample::<f64, _>(StandardNormal);
        let label = if margin < 0.0 { -1.0 } else { 1.0 };
        for j in 0..dim {
            data[(i, j)] = label * features[(i, j)];
        }
    }
    Objective::logistic(name, data, reg)
}

/// Named builtin objectives used by the default verification matrix.
pub fn preset(name: &str) -> Result<Objective, ObjectiveError> {
    match name {
        "quadratic-1d" => Objective::diagonal_quadratic("quadratic-1d", &[1.0]),
        "quadratic-2d" => Objective::diagonal_quadratic("quadratic-2d", &[1.0, 4.0]),
        "quadratic-ill" => {
            Objective::diagonal_quadratic("quadratic-ill", &[1.0, 10.0, 100.0, 1000.0])
        }
        "log-sum-exp" => synthetic_log_sum_exp("log-sum-exp", 8, 2, 7, 1.0),
        "logistic" => synthetic_logistic("logistic", 8, 3, 11, 1e-3),
        other => Err(ObjectiveError::UnknownBuiltin(other.to_string())),
    }
}

/// Default starting point paired with each preset.
pub fn preset_start(name: &str) -> Result<DVector<f64>, ObjectiveError> {
    let obj = preset(name)?;
    Ok(DVector::from_element(obj.dim(), 1.0))
}

/// Declarative objective description, deserialized from experiment configs.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    /// `diag` or a full symmetric `matrix`, with an optional linear term.
    Quadratic {
        #[serde(default)]
        diag: Option<Vec<f64>>,
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
    },
    LogSumExp {
        terms: usize,
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_scale")]
        scale: f64,
    },
    Logistic {
        samples: usize,
        dim: usize,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_reg")]
        reg: f64,
    },
    Preset {
        name: String,
    },
}

fn default_scale() -> f64 {
    1.0
}

fn default_reg() -> f64 {
    1e-3
}

impl ObjectiveSpec {
    /// Instantiates the described objective. `fallback_seed` seeds synthetic
    /// data when the declaration does not pin its own seed.
    pub fn build(&self, fallback_seed: u64) -> Result<Objective, ObjectiveError> {
        match self {
            ObjectiveSpec::Quadratic {
                diag,
                matrix,
                linear,
            } => {
                let a = match (diag, matrix) {
                    (Some(d), None) => {
                        if d.is_empty() {
                            return Err(ObjectiveError::EmptyData);
                        }
                        DMatrix::from_diagonal(&DVector::from_column_slice(d))
                    }
                    (None, Some(rows)) => {
                        let n = rows.len();
                        if n == 0 || rows.iter().any(|r| r.len() != n) {
                            return Err(ObjectiveError::NotSymmetric);
                        }
                        DMatrix::from_fn(n, n, |i, j| rows[i][j])
                    }
                    _ => return Err(ObjectiveError::NotSymmetric),
                };
                let b = match linear {
                    Some(v) => DVector::from_column_slice(v),
                    None => DVector::zeros(a.nrows()),
                };
                Objective::quadratic("quadratic", a, b)
            }
            ObjectiveSpec::LogSumExp {
                terms,
                dim,
                seed,
                scale,
            } => synthetic_log_sum_exp(
                "log-sum-exp",
                *terms,
                *dim,
                seed.unwrap_or(fallback_seed),
                *scale,
            ),
            ObjectiveSpec::Logistic {
                samples,
                dim,
                seed,
                reg,
            } => synthetic_logistic(
                "logistic",
                *samples,
                *dim,
                seed.unwrap_or(fallback_seed),
                *reg,
            ),
            ObjectiveSpec::Preset { name } => preset(name),
        }
    }
}

/// Compares the analytic gradient against central differences coordinate by
/// coordinate and returns the worst absolute deviation. `h` must lie in
/// `(0, 1e-3]`; the expected deviation scales like `O(h^2)` plus roundoff.
pub fn gradient_check(
    obj: &Objective,
    point: &DVector<f64>,
    h: f64,
) -> Result<f64, ObjectiveError> {
    if !(h > 0.0 && h <= 1e-3) {
        return Err(ObjectiveError::InvalidDifferenceStep(h));
    }
    if point.len() != obj.dim() {
        return Err(ObjectiveError::DimensionMismatch {
            context: "probe point",
            got: point.len(),
            expected: obj.dim(),
        });
    }
    let analytic = obj.grad(point);
    let mut worst = 0.0f64;
    let mut probe = point.clone();
    for i in 0..obj.dim() {
        probe[i] = point[i] + h;
        let fp = obj.eval(&probe);
        probe[i] = point[i] - h;
        let fm = obj.eval(&probe);
        probe[i] = point[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(ObjectiveError::NonFiniteEval(format_point(&probe)));
        }
        worst = worst.max(((fp - fm) / (2.0 * h) - analytic[i]).abs());
    }
    Ok(worst)
}

/// Slack of the cocoercivity-strengthened upper bound implied by convexity
/// plus `L`-smoothness at the ordered pair `(a, b)`:
///
/// ```text
/// slack = <grad f(b), b - a> - |grad f(b) - grad f(a)|^2 / (2L) - (f(b) - f(a))
/// ```
///
/// Nonnegative (up to roundoff) whenever `L` really bounds the gradient
/// Lipschitz constant; `a = b` gives exactly zero.
pub fn smoothness_slack(obj: &Objective, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ga = obj.grad(a);
    let gb = obj.grad(b);
    let rhs = gb.dot(&(b - a)) - (&gb - &ga).norm_squared() / (2.0 * obj.lipschitz());
    rhs - (obj.eval(b) - obj.eval(a))
}

/// Minimum smoothness slack over `num_samples` seeded Gaussian pairs. A
/// negative result beyond roundoff refutes the certified `L`.
pub fn smoothness_certificate(
    obj: &Objective,
    num_samples: usize,
    seed: u64,
) -> Result<f64, ObjectiveError> {
    if num_samples == 0 {
        return Err(ObjectiveError::EmptySample);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..num_samples {
        let a = gaussian_vector(obj.dim(), 2.0, &mut rng);
        let b = gaussian_vector(obj.dim(), 2.0, &mut rng);
        worst = worst.min(smoothness_slack(obj, &a, &b));
    }
    Ok(worst)
}

/// Convexity gap `f(b) - f(a) - <grad f(a), b - a>`; nonnegative for convex f.
pub fn convexity_gap(obj: &Objective, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    obj.eval(b) - obj.eval(a) - obj.grad(a).dot(&(b - a))
}

fn gaussian_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // Row-major fill order is part of the determinism contract.
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = scale * rng.sample::<f64, _>(StandardNormal);
        }
    }
    m
}

fn gaussian_vector(dim: usize, scale: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn format_point(p: &DVector<f64>) -> String {
    let mut s = String::from("(");
    for (i, v) in p.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{v:.6e}");
    }
    s.push(')');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_closed_form() {
        let obj = Objective::diagonal_quadratic("q", &[1.0, 4.0]).unwrap();
        assert_eq!(obj.dim(), 2);
        assert_eq!(obj.lipschitz(), 4.0);
        let x = DVector::from_column_slice(&[1.0, 1.0]);
        assert_relative_eq!(obj.eval(&x), 2.5);
        assert_eq!(obj.grad(&x), DVector::from_column_slice(&[1.0, 4.0]));
        assert_eq!(obj.minimizer().unwrap(), &DVector::zeros(2));
        assert_eq!(obj.optimal_value().unwrap(), 0.0);
    }

    #[test]
    fn quadratic_with_linear_term_minimizer() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_column_slice(&[1.0, -1.0]);
        let obj = Objective::quadratic("q", a.clone(), b.clone()).unwrap();
        let xs = obj.minimizer().unwrap();
        assert!((&a * xs - &b).norm() < 1e-12);
        // grad at the minimizer vanishes
        assert!(obj.grad(xs).norm() < 1e-12);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let err = Objective::quadratic("q", a, DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, ObjectiveError::NotSymmetric));
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let err = Objective::quadratic("q", a, DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, ObjectiveError::NotPositiveSemidefinite(_)));
    }

    #[test]
    fn singular_quadratic_keeps_origin_when_unforced() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let obj = Objective::quadratic("q", a.clone(), DVector::zeros(2)).unwrap();
        assert_eq!(obj.minimizer().unwrap(), &DVector::zeros(2));
        let forced = Objective::quadratic("q", a, DVector::from_column_slice(&[0.0, 1.0])).unwrap();
        assert!(forced.minimizer().is_none());
        assert!(forced.optimal_value().is_none());
    }

    #[test]
    fn unknown_builtin_is_rejected() {
        let err = preset("cubic-regularized").unwrap_err();
        assert!(matches!(err, ObjectiveError::UnknownBuiltin(_)));
    }

    #[test]
    fn gradient_check_matches_quadratic_exactly() {
        // Spec oracle: central differences are exact for quadratics up to
        // roundoff, so the deviation is ~1e-10 or smaller at h = 1e-5.
        let obj = preset("quadratic-2d").unwrap();
        let dev = gradient_check(&obj, &DVector::from_column_slice(&[0.3, -0.7]), 1e-5).unwrap();
        assert!(dev <= 1e-9, "deviation {dev:.3e} too large");
    }

    #[test]
    fn gradient_check_logistic_seeded() {
        let obj = preset("logistic").unwrap();
        let dev = gradient_check(&obj, &DVector::zeros(3), 1e-5).unwrap();
        assert!(dev <= 1e-8, "deviation {dev:.3e} too large");
    }

    #[test]
    fn gradient_check_rejects_bad_step() {
        let obj = preset("quadratic-1d").unwrap();
        for h in [0.0, -1e-5, 2e-3] {
            let err = gradient_check(&obj, &DVector::zeros(1), h).unwrap_err();
            assert!(matches!(err, ObjectiveError::InvalidDifferenceStep(_)));
        }
    }

    #[test]
    fn gradient_check_reports_non_finite_point() {
        let obj = Objective::custom(
            "sqrt-barrier",
            1,
            1.0,
            |x| -(1.0 - x[0]).sqrt(),
            |x| DVector::from_element(1, 0.5 / (1.0 - x[0]).sqrt()),
        );
        let err = gradient_check(&obj, &DVector::from_element(1, 1.0), 1e-4).unwrap_err();
        match err {
            ObjectiveError::NonFiniteEval(p) => assert!(p.contains('1')),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn smoothness_slack_zero_at_identical_points() {
        let obj = preset("quadratic-2d").unwrap();
        let a = DVector::from_column_slice(&[1.0, 2.0]);
        assert_eq!(smoothness_slack(&obj, &a, &a), 0.0);
    }

    #[test]
    fn smoothness_slack_hand_value() {
        // For f with A = diag(1, 4), L = 4, a = (1, 0), b = (0, 0):
        // rhs = 0 - |(-1, 0)|^2 / 8 = -1/8, lhs = f(b) - f(a) = -1/2,
        // so the slack is 3/8.
        let obj = preset("quadratic-2d").unwrap();
        let a = DVector::from_column_slice(&[1.0, 0.0]);
        let b = DVector::zeros(2);
        assert_relative_eq!(smoothness_slack(&obj, &a, &b), 0.375, epsilon = 1e-15);
    }

    #[test]
    fn smoothness_certificate_nonnegative_for_certified_bounds() {
        for name in ["quadratic-2d", "quadratic-ill", "log-sum-exp", "logistic"] {
            let obj = preset(name).unwrap();
            let worst = smoothness_certificate(&obj, 200, 42).unwrap();
            assert!(
                worst >= -1e-10,
                "{name}: certificate violated with slack {worst:.3e}"
            );
        }
    }

    #[test]
    fn smoothness_certificate_detects_understated_bound() {
        // Claim L = 1 for a function whose true constant is 4.
        let obj = Objective::custom(
            "understated",
            1,
            1.0,
            |x| 2.0 * x[0] * x[0],
            |x| DVector::from_element(1, 4.0 * x[0]),
        );
        let worst = smoothness_certificate(&obj, 100, 3).unwrap();
        assert!(worst < -1e-6, "expected refutation, got {worst:.3e}");
    }

    #[test]
    fn smoothness_certificate_rejects_empty_sample() {
        let obj = preset("quadratic-1d").unwrap();
        assert!(matches!(
            smoothness_certificate(&obj, 0, 0).unwrap_err(),
            ObjectiveError::EmptySample
        ));
    }

    #[test]
    fn synthetic_data_is_seed_deterministic() {
        let a = preset("log-sum-exp").unwrap();
        let b = preset("log-sum-exp").unwrap();
        let x = DVector::from_column_slice(&[0.25, -0.75]);
        assert_eq!(a.eval(&x).to_bits(), b.eval(&x).to_bits());
        assert_eq!(a.lipschitz().to_bits(), b.lipschitz().to_bits());
        let c = synthetic_log_sum_exp("lse", 8, 2, 8, 1.0).unwrap();
        assert_ne!(a.eval(&x).to_bits(), c.eval(&x).to_bits());
    }

    #[test]
    fn logistic_stays_finite_on_extreme_margins() {
        let obj = preset("logistic").unwrap();
        let far = DVector::from_element(3, 400.0);
        assert!(obj.eval(&far).is_finite());
        assert!(obj.grad(&far).iter().all(|v| v.is_finite()));
        let near = DVector::from_element(3, -400.0);
        assert!(obj.eval(&near).is_finite());
        assert!(obj.grad(&near).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn convexity_gap_nonnegative_on_presets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in ["quadratic-ill", "log-sum-exp", "logistic"] {
            let obj = preset(name).unwrap();
            for _ in 0..50 {
                let a = gaussian_vector(obj.dim(), 2.0, &mut rng);
                let b = gaussian_vector(obj.dim(), 2.0, &mut rng);
                let gap = convexity_gap(&obj, &a, &b);
                assert!(gap >= -1e-10, "{name}: convexity gap {gap:.3e}");
            }
        }
    }

    #[test]
    fn objective_is_shareable_across_threads() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<Objective>();
    }
}
