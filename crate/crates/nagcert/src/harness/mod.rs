//! Config-driven experiment harness.
//!
//! Ties the solvers and certificates together: loads a declarative
//! experiment description, runs the requested schemes and the continuous
//! trajectory, applies the selected checks, and emits CSV tables, plots,
//! and a one-line-per-check summary.

pub mod config;
pub mod csv;
pub mod svg;
pub mod verify;

use std::env;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsError, SequenceKind};
use crate::objectives::{Objective, ObjectiveError};
use crate::ode::{self, OdeError};
use crate::schemes::{self, SchemeConfig, SchemeError, Trace};

use config::{ConfigError, ExperimentConfig, OdeSection, SchemeSection};
use verify::{CheckResult, CheckToggles, MatrixReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("cannot write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Mismatch(String),
}

/// Command-line overrides layered over the config file.
#[derive(Debug, Clone, Default)]
pub struct EmitOptions {
    pub out_dir: Option<PathBuf>,
    pub csv: Option<bool>,
    pub svg: Option<bool>,
    pub seed: Option<u64>,
}

/// Output directory precedence: command line, then config, then the
/// `NAGCERT_OUT` environment variable, then the working directory.
pub fn resolve_output_dir(flag: Option<&Path>, config_dir: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = config_dir {
        return dir.to_path_buf();
    }
    match env::var_os("NAGCERT_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("."),
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub results: Vec<CheckResult>,
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentOutcome {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed || !r.asserted)
    }

    pub fn summary_text(&self) -> String {
        MatrixReport {
            results: self.results.clone(),
        }
        .summary_text()
    }
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    csv::write_atomic(path, text.as_bytes()).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `summary.txt` into `dir`, creating the directory if needed.
pub fn write_summary(dir: &Path, text: &str) -> Result<PathBuf, HarnessError> {
    ensure_dir(dir)?;
    let path = dir.join("summary.txt");
    write_text(&path, text)?;
    Ok(path)
}

fn scheme_config(obj: &Objective, section: &SchemeSection) -> Result<SchemeConfig, HarnessError> {
    let step_size = section.step_size(obj.lipschitz())?;
    Ok(SchemeConfig {
        scheme: section.scheme,
        r: section.r,
        step_size,
        x0: DVector::from_vec(section.x0.clone()),
        max_iter: section.max_iter,
    })
}

fn build_objective(
    config: &ExperimentConfig,
    opts: &EmitOptions,
    estimate: bool,
) -> Result<Objective, HarnessError> {
    let seed = opts.seed.or(config.seed).unwrap_or(0);
    let mut obj = config.objective.build(seed)?;
    if estimate && obj.optimal_value().is_none() {
        if let Some(section) = config.schemes.first() {
            let x0 = DVector::from_vec(section.x0.clone());
            let est = schemes::estimate_optimal_value(&obj, &x0, config.f_star_estimate_iters)?;
            obj = obj.with_estimated_optimum(est);
        }
    }
    Ok(obj)
}

/// Runs every scheme section of a config, applies the selected checks,
/// emits the requested artifacts, and writes `summary.txt`.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &EmitOptions,
) -> Result<ExperimentOutcome, HarnessError> {
    if config.schemes.is_empty() && config.ode.is_none() {
        return Err(HarnessError::Mismatch(
            "the experiment declares neither a [[scheme]] section nor an [ode] section".into(),
        ));
    }
    let obj = build_objective(config, opts, true)?;
    let out_dir = resolve_output_dir(opts.out_dir.as_deref(), config.output_dir.as_deref());
    ensure_dir(&out_dir)?;
    let emit_csv = opts.csv.unwrap_or(config.emit_csv);
    let emit_svg = opts.svg.unwrap_or(config.emit_svg);
    let toggles = CheckToggles::report_only_tails(
        config.verify.per_step,
        config.verify.lyapunov,
        config.verify.envelopes,
        config.verify.series,
        config.verify.tails,
    );

    let mut results = Vec::new();
    let mut artifacts = Vec::new();
    let mut traces = Vec::new();
    for (i, section) in config.schemes.iter().enumerate() {
        let cfg = scheme_config(&obj, section)?;
        let trace = schemes::run(&obj, &cfg)?;
        let cell = format!("{}[{i}]", section.scheme.label());
        results.extend(verify::check_trace(&obj, &trace, &cell, &toggles)?);
        if emit_csv {
            let path = out_dir.join(format!("trace_{i}_{}.csv", section.scheme.label()));
            csv::emit_trace_csv(&trace, &path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            artifacts.push(path);
        }
        traces.push(trace);
    }

    match config.verify.equivalence {
        Some(false) => {}
        want => {
            let comparable =
                config.schemes.len() >= 2 && sections_comparable(&obj, &config.schemes)?;
            if comparable {
                let refs: Vec<&Trace> = traces.iter().collect();
                let (dev, at) = verify::pairwise_deviation(&refs);
                results.push(CheckResult {
                    cell: "experiment".into(),
                    check: "scheme-equivalence",
                    passed: dev <= 1e-9,
                    asserted: true,
                    worst: dev,
                    at: Some(at),
                    note: format!(
                        "max pairwise deviation across {} scheme sections; <= 1e-9",
                        traces.len()
                    ),
                });
            } else if want == Some(true) {
                return Err(HarnessError::Mismatch(
                    "equivalence was requested but the scheme sections differ in momentum, \
                     step size, start, or length"
                        .into(),
                ));
            }
        }
    }

    if emit_svg && !traces.is_empty() {
        artifacts.extend(emit_trace_plots(&out_dir, &traces)?);
    }

    if let Some(section) = &config.ode {
        let (ode_results, ode_artifacts) =
            run_ode_section(&obj, section, &out_dir, emit_csv, emit_svg)?;
        results.extend(ode_results);
        artifacts.extend(ode_artifacts);
    }

    let summary = out_dir.join("summary.txt");
    write_text(
        &summary,
        &MatrixReport {
            results: results.clone(),
        }
        .summary_text(),
    )?;
    artifacts.push(summary);
    Ok(ExperimentOutcome { results, artifacts })
}

fn sections_comparable(obj: &Objective, sections: &[SchemeSection]) -> Result<bool, HarnessError> {
    let first = &sections[0];
    let s0 = first.step_size(obj.lipschitz())?;
    for section in &sections[1..] {
        if section.r != first.r
            || section.step_size(obj.lipschitz())? != s0
            || section.x0 != first.x0
            || section.max_iter != first.max_iter
        {
            return Ok(false);
        }
    }
    Ok(true)
}

fn emit_trace_plots(out_dir: &Path, traces: &[Trace]) -> Result<Vec<PathBuf>, HarnessError> {
    let mut artifacts = Vec::new();
    let plot = |path: &Path, title: &str, y_label: &str, series: &[svg::Series<'_>]| {
        svg::write_log_log_plot(path, title, "k", y_label, series).map_err(|source| {
            HarnessError::Io {
                path: path.to_path_buf(),
                source,
            }
        })
    };

    // Objective gap with the certified envelope overlaid when available.
    let mut gap_sets: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        if trace.f_star.is_none() {
            continue;
        }
        let pts: Vec<(f64, f64)> = trace
            .records
            .iter()
            .filter_map(|rec| Some((rec.k as f64, trace.f_gap_y(rec.k)?)))
            .collect();
        gap_sets.push((format!("{}[{i}]", trace.scheme.label()), pts));
    }
    if let Some(first) = traces.first() {
        if let Some(d0) = first.d0() {
            let (r, s) = (first.r, first.step_size);
            let pts: Vec<(f64, f64)> = first
                .records
                .iter()
                .filter_map(|rec| {
                    let bound =
                        diagnostics::envelope_objective(rec.k, r, s, d0, SequenceKind::Y).ok()?;
                    Some((rec.k as f64, bound))
                })
                .collect();
            gap_sets.push(("certified envelope".into(), pts));
        }
    }
    if !gap_sets.is_empty() {
        let series: Vec<svg::Series<'_>> = gap_sets
            .iter()
            .map(|(label, pts)| svg::Series { label, points: pts })
            .collect();
        let path = out_dir.join("gap.svg");
        plot(&path, "objective gap along y", "f(y_k) - f*", &series)?;
        artifacts.push(path);
    }

    // Cubic-scaled running-min gradient, the o(1/k^3) witness.
    let tail_sets: Vec<(String, Vec<(f64, f64)>)> = traces
        .iter()
        .enumerate()
        .map(|(i, trace)| {
            let mut min = f64::INFINITY;
            let pts = trace
                .records
                .iter()
                .map(|rec| {
                    min = min.min(rec.grad_norm_sq);
                    let kf = rec.k as f64;
                    (kf, kf * kf * kf * min)
                })
                .collect();
            (format!("{}[{i}]", trace.scheme.label()), pts)
        })
        .collect();
    let series: Vec<svg::Series<'_>> = tail_sets
        .iter()
        .map(|(label, pts)| svg::Series { label, points: pts })
        .collect();
    let path = out_dir.join("gradtail.svg");
    plot(
        &path,
        "cubic-scaled gradient minimum",
        "k^3 min |grad|^2",
        &series,
    )?;
    artifacts.push(path);

    // Lyapunov decay, when the distance to the minimizer is available.
    let mut lyap_sets: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        if trace.minimizer.is_none() {
            continue;
        }
        let values = diagnostics::lyapunov_series(trace)?.values;
        let pts = values
            .iter()
            .enumerate()
            .map(|(k, v)| (k as f64, v[2]))
            .collect();
        lyap_sets.push((format!("{}[{i}]", trace.scheme.label()), pts));
    }
    if !lyap_sets.is_empty() {
        let series: Vec<svg::Series<'_>> = lyap_sets
            .iter()
            .map(|(label, pts)| svg::Series { label, points: pts })
            .collect();
        let path = out_dir.join("lyapunov.svg");
        plot(&path, "discrete Lyapunov decay", "E(k)", &series)?;
        artifacts.push(path);
    }
    Ok(artifacts)
}

fn run_ode_section(
    obj: &Objective,
    section: &OdeSection,
    out_dir: &Path,
    emit_csv: bool,
    emit_svg: bool,
) -> Result<(Vec<CheckResult>, Vec<PathBuf>), HarnessError> {
    if obj.minimizer().is_none() {
        return Err(HarnessError::Mismatch(format!(
            "the continuous certificate needs a known minimizer, which '{}' does not have",
            obj.name()
        )));
    }
    let s = section.step_parameter(obj.lipschitz())?;
    let mut cfg = ode::OdeConfig {
        r: section.r,
        s,
        rel_tol: section.rel_tol,
        abs_tol: section.abs_tol,
        t_end: section.t_end,
        sample_times: Vec::new(),
    };
    cfg.sample_times = ode::uniform_times(cfg.t_init(), section.t_end, section.samples);
    let x0 = DVector::from_vec(section.x0.clone());
    let trajectory = ode::integrate(obj, &cfg, &x0)?;
    let report = ode::continuous_rate_report(obj, &trajectory)?;

    let mut results = Vec::new();
    let (mut worst_gap, mut worst_at) = (f64::INFINITY, 0);
    for (i, row) in report.rows.iter().enumerate() {
        let slack = row.bound - row.f_gap;
        if slack < worst_gap {
            worst_gap = slack;
            worst_at = i;
        }
    }
    if report.rows.is_empty() {
        worst_gap = 0.0;
    }
    results.push(CheckResult {
        cell: "ode".into(),
        check: "ode-gap-bound",
        passed: report.all_bounds_satisfied(),
        asserted: true,
        worst: worst_gap,
        at: Some(worst_at),
        note: format!(
            "min (E(t0)/t^2 - gap) over {} samples past t0, within integrator tolerance",
            report.rows.len()
        ),
    });
    let (increase, allowance) = report.worst_lyapunov_increase();
    results.push(CheckResult {
        cell: "ode".into(),
        check: "ode-lyapunov-monotone",
        passed: increase <= allowance,
        asserted: true,
        worst: increase,
        at: None,
        note: format!("max increase of E(t) between samples; allowance {allowance:.3e}"),
    });

    let mut artifacts = Vec::new();
    if emit_csv {
        let path = out_dir.join("ode_trace.csv");
        csv::emit_ode_csv(&report, &path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        artifacts.push(path);
    }
    if emit_svg {
        let gap: Vec<(f64, f64)> = report.rows.iter().map(|row| (row.t, row.f_gap)).collect();
        let bound: Vec<(f64, f64)> = report.rows.iter().map(|row| (row.t, row.bound)).collect();
        let path = out_dir.join("ode_gap.svg");
        svg::write_log_log_plot(
            &path,
            "continuous objective gap",
            "t",
            "f - f*",
            &[
                svg::Series {
                    label: "measured",
                    points: &gap,
                },
                svg::Series {
                    label: "E(t0)/t^2",
                    points: &bound,
                },
            ],
        )
        .map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        artifacts.push(path);
    }
    Ok((results, artifacts))
}

/// Runs only the `[ode]` section of a config.
pub fn run_ode_experiment(
    config: &ExperimentConfig,
    opts: &EmitOptions,
) -> Result<ExperimentOutcome, HarnessError> {
    let section = config.ode.as_ref().ok_or_else(|| {
        HarnessError::Mismatch("the config has no [ode] section to integrate".into())
    })?;
    let obj = build_objective(config, opts, false)?;
    let out_dir = resolve_output_dir(opts.out_dir.as_deref(), config.output_dir.as_deref());
    ensure_dir(&out_dir)?;
    let emit_csv = opts.csv.unwrap_or(config.emit_csv);
    let emit_svg = opts.svg.unwrap_or(config.emit_svg);
    let (results, mut artifacts) = run_ode_section(&obj, section, &out_dir, emit_csv, emit_svg)?;
    let summary = out_dir.join("summary.txt");
    write_text(
        &summary,
        &MatrixReport {
            results: results.clone(),
        }
        .summary_text(),
    )?;
    artifacts.push(summary);
    Ok(ExperimentOutcome { results, artifacts })
}

#[derive(Debug)]
pub struct CompareOutcome {
    pub labels: Vec<String>,
    /// Max pairwise deviation over all indices, against `1 + max norm`.
    pub deviation: f64,
    pub at: usize,
    /// Deviation profile per index.
    pub per_k: Vec<f64>,
}

/// Runs every scheme section on the same problem and measures how far the
/// iterate sequences drift apart. The sections must agree on momentum,
/// step size, start, and length for the comparison to be meaningful.
pub fn compare_schemes(
    config: &ExperimentConfig,
    opts: &EmitOptions,
) -> Result<CompareOutcome, HarnessError> {
    if config.schemes.len() < 2 {
        return Err(HarnessError::Mismatch(format!(
            "comparison needs at least two [[scheme]] sections, found {}",
            config.schemes.len()
        )));
    }
    let obj = build_objective(config, opts, false)?;
    if !sections_comparable(&obj, &config.schemes)? {
        return Err(HarnessError::Mismatch(
            "the [[scheme]] sections differ in momentum, step size, start, or length; \
             align them to compare the formulations"
                .into(),
        ));
    }
    let mut traces = Vec::new();
    let mut labels = Vec::new();
    for section in &config.schemes {
        let cfg = scheme_config(&obj, section)?;
        traces.push(schemes::run(&obj, &cfg)?);
        labels.push(section.scheme.label().to_string());
    }
    let refs: Vec<&Trace> = traces.iter().collect();
    let per_k = verify::pairwise_deviation_profile(&refs);
    let (mut deviation, mut at) = (0.0, 0);
    for (k, d) in per_k.iter().enumerate() {
        if *d > deviation {
            deviation = *d;
            at = k;
        }
    }
    Ok(CompareOutcome {
        labels,
        deviation,
        at,
        per_k,
    })
}
