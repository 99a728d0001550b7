//! Acceptance suite: every quantitative convergence claim the library
//! certifies, exercised end to end at its stated tolerance. One test per
//! criterion; each prints the worst observed margin on failure.
//!
//! Most criteria read the shared default verification matrix (24 cells:
//! four preset objectives crossed with momentum 2, 3, 4 and step sizes 1/L
//! and 1/(2L), each traced for 10001 steps). The continuous-time and
//! discretization criteria run fresh integrations.

use std::process::Command as Process;
use std::sync::OnceLock;

use nalgebra::DVector;

use nagcert::diagnostics::{self, LyapunovForm};
use nagcert::harness::verify::{self, MatrixReport, VerifyOptions};
use nagcert::objectives;
use nagcert::ode;
use nagcert::schemes::{self, SchemeConfig, SchemeKind};

fn matrix() -> &'static MatrixReport {
    static MATRIX: OnceLock<MatrixReport> = OnceLock::new();
    MATRIX.get_or_init(|| {
        verify::run_default_matrix(&VerifyOptions::default()).expect("default matrix runs")
    })
}

/// Asserts that `check` has exactly `expected` asserted rows in the matrix
/// and that all of them passed.
fn assert_matrix_check(check: &str, expected: usize) {
    let rows = matrix().results_for(check);
    let asserted = rows.iter().filter(|r| r.asserted).count();
    assert_eq!(
        asserted, expected,
        "{check}: expected {expected} asserted cells, found {asserted}"
    );
    for row in rows {
        if row.asserted {
            assert!(row.passed, "{}", row.line());
        }
    }
}

#[test]
fn criterion_01_three_formulations_agree() {
    // 4 objectives x 3 momentum values x 2 step sizes.
    assert_matrix_check("scheme-equivalence", 24);
    assert_matrix_check("interleave-identity", 24);
}

#[test]
fn criterion_02_lyapunov_forms_and_initial_value() {
    // Known-minimizer cells only: both quadratics, 6 cells each.
    assert_matrix_check("lyapunov-identity", 12);
}

#[test]
fn criterion_03_lyapunov_decrease_with_frozen_values() {
    assert_matrix_check("lyapunov-monotone", 12);
    assert_matrix_check("monotone-bound", 12);

    // Hand-computed reference: unit quadratic, r = 2, s = 1/2, x0 = 1.
    let obj = objectives::preset("quadratic-1d").unwrap();
    let cfg = SchemeConfig {
        scheme: SchemeKind::TwoSequence,
        r: 2.0,
        step_size: 0.5,
        x0: DVector::from_element(1, 1.0),
        max_iter: 3,
    };
    let trace = schemes::run(&obj, &cfg).unwrap();
    let expected = [2.0, 1.25, 0.53125, 0.1396484375];
    for (k, want) in expected.iter().enumerate() {
        for form in LyapunovForm::ALL {
            let got = diagnostics::lyapunov_value(&trace, k, form).unwrap();
            assert!(
                (got - want).abs() <= 1e-12,
                "E({k}) in form {}: got {got}, want {want}",
                form.label()
            );
        }
    }
    for (k, want) in [(1, 0.28125), (2, 0.1328125)] {
        let got = diagnostics::monotone_bound_slack(&trace, k).unwrap();
        assert!(
            (got - want).abs() <= 1e-12,
            "decrease slack at k={k}: got {got}, want {want}"
        );
    }
}

#[test]
fn criterion_04_rate_envelopes_hold_everywhere() {
    assert_matrix_check("envelope-objective-y", 12);
    assert_matrix_check("envelope-objective-x", 12);
    assert_matrix_check("envelope-gradnorm-y", 12);
    assert_matrix_check("envelope-gradnorm-x", 12);
}

#[test]
fn criterion_05_series_budget_and_weight_identity() {
    assert_matrix_check("series-budget", 12);
    // One exact integer sweep per momentum value.
    assert_matrix_check("weight-sum-identity", 3);
}

#[test]
fn criterion_06_gradient_tail_decays_faster_than_cubic() {
    // Quadratics and log-sum-exp (18 cells); the logistic cells stay
    // informational because their contraction is too slow to certify at
    // the evaluation index.
    assert_matrix_check("grad-cubic-ratio", 18);
    assert_matrix_check("tail-sum-ratio", 18);
}

#[test]
fn criterion_07_gap_tail_decays_faster_than_quadratic() {
    // All four objectives at r = 3 and r = 4 (16 cells); r = 2 rows are
    // informational since the o(1/k^2) claim needs r > 2.
    assert_matrix_check("gap-quadratic-ratio", 16);
    let informational = matrix()
        .results_for("gap-quadratic-ratio")
        .iter()
        .filter(|r| !r.asserted)
        .count();
    assert_eq!(
        informational, 8,
        "expected the eight r=2 cells as informational"
    );
}

#[test]
fn criterion_08_per_step_facts_hold_at_every_iteration() {
    assert_matrix_check("descent-fact", 24);
    assert_matrix_check("gradient-contraction", 24);
}

#[test]
fn criterion_09_continuous_certificate() {
    for (name, r) in [
        ("quadratic-1d", 2.0),
        ("quadratic-1d", 3.0),
        ("quadratic-2d", 2.0),
        ("quadratic-2d", 3.0),
    ] {
        let obj = objectives::preset(name).unwrap();
        let mut cfg = ode::OdeConfig {
            r,
            s: 1e-2,
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            t_end: 10.0,
            sample_times: Vec::new(),
        };
        cfg.sample_times = ode::uniform_times(cfg.t_init(), cfg.t_end, 400);
        let x0 = DVector::from_element(obj.dim(), 1.0);
        let trajectory = ode::integrate(&obj, &cfg, &x0).unwrap();
        let report = ode::continuous_rate_report(&obj, &trajectory).unwrap();
        let cell = format!("{name} r={r}");

        assert!(
            !report.rows.is_empty(),
            "{cell}: no samples past the rate origin"
        );
        for row in &report.rows {
            assert!(
                row.bound_satisfied,
                "{cell}: gap {:.3e} above bound {:.3e} at t={:.3}",
                row.f_gap, row.bound, row.t
            );
        }
        let (increase, allowance) = report.worst_lyapunov_increase();
        assert!(
            increase <= allowance,
            "{cell}: Lyapunov increased by {increase:.3e}, allowance {allowance:.3e}"
        );

        let last = report.rows.last().unwrap();
        let max_cubic = report
            .rows
            .iter()
            .map(|row| row.cubic_inf_grad)
            .fold(0.0, f64::max);
        assert!(
            last.cubic_inf_grad <= 0.05 * max_cubic,
            "{cell}: t^3 inf grad^2 ratio {:.3e}",
            last.cubic_inf_grad / max_cubic
        );
        if r > 2.0 {
            let max_quad = report
                .rows
                .iter()
                .map(|row| row.quadratic_inf_gap)
                .fold(0.0, f64::max);
            assert!(
                last.quadratic_inf_gap <= 0.05 * max_quad,
                "{cell}: t^2 inf gap ratio {:.3e}",
                last.quadratic_inf_gap / max_quad
            );
        }
    }
}

#[test]
fn criterion_10_iterates_track_the_trajectory_as_s_shrinks() {
    // Fixed horizon K sqrt(s) = 10 with r = 2: halving sqrt(s) (quartering
    // s) must shrink the worst iterate-vs-trajectory distance.
    let obj = objectives::preset("quadratic-2d").unwrap();
    let x0 = DVector::from_element(2, 1.0);
    let deviation = |s: f64, steps: usize| -> f64 {
        let sqrt_s = s.sqrt();
        let cfg = SchemeConfig {
            scheme: SchemeKind::TwoSequence,
            r: 2.0,
            step_size: s,
            x0: x0.clone(),
            max_iter: steps,
        };
        let trace = schemes::run(&obj, &cfg).unwrap();
        let ode_cfg = ode::OdeConfig {
            r: 2.0,
            s,
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            t_end: (steps as f64 + 1.0) * sqrt_s,
            sample_times: Vec::new(),
        };
        let trajectory = ode::integrate(&obj, &ode_cfg, &x0).unwrap();
        let mut worst = 0.0f64;
        for k in 1..=steps {
            let state = trajectory.state_at(k as f64 * sqrt_s).unwrap();
            worst = worst.max((&trace.records[k].x - state.position).norm());
        }
        worst
    };
    let coarse = deviation(1e-2, 100);
    let fine = deviation(2.5e-3, 200);
    assert!(
        fine < coarse,
        "deviation must shrink with s: coarse {coarse:.3e}, fine {fine:.3e}"
    );
    assert!(
        fine <= 0.75 * coarse,
        "expected a clear reduction: coarse {coarse:.3e}, fine {fine:.3e}"
    );
}

#[test]
fn criterion_11_cli_verifies_and_reruns_bit_identically() {
    let bin = env!("CARGO_BIN_EXE_nagcert");
    let dir = tempfile::tempdir().unwrap();

    let verify_out = dir.path().join("verify");
    let status = Process::new(bin)
        .args(["verify-all", "--quiet", "--out"])
        .arg(&verify_out)
        .status()
        .unwrap();
    assert!(status.success(), "verify-all exited with {status}");
    assert!(verify_out.join("summary.txt").is_file());

    let config_path = dir.path().join("experiment.toml");
    std::fs::write(
        &config_path,
        "[objective]\nkind = \"preset\"\nname = \"log-sum-exp\"\n\n\
         [[scheme]]\nscheme = \"gradient-correction\"\nr = 3.0\nx0 = [1.0, 1.0]\nmax_iter = 400\n",
    )
    .unwrap();
    let mut csv_bytes = Vec::new();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let status = Process::new(bin)
            .arg("run")
            .arg(&config_path)
            .args(["--quiet", "--seed", "123", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "run exited with {status}");
        csv_bytes.push(std::fs::read(out.join("trace_0_gradient-correction.csv")).unwrap());
    }
    assert!(!csv_bytes[0].is_empty());
    assert_eq!(csv_bytes[0], csv_bytes[1], "reruns must be byte-identical");
}
