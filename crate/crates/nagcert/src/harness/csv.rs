//! CSV emission with a fixed column contract and atomic writes.
//!
//! Floats are rendered with `{:.16e}` (17 significant digits), so parsing a
//! file back reproduces the original values bit for bit. Undefined cells
//! (e.g. Lyapunov columns without a known minimizer) hold `NaN`. Rows are
//! LF-terminated; files are written to a temporary sibling and renamed into
//! place so readers never observe a partial file.

use std::io;
use std::path::Path;

use crate::diagnostics::{envelope_gradnorm, envelope_objective, lyapunov_series, SequenceKind};
use crate::ode::RateReport;
use crate::schemes::Trace;

pub const TRACE_HEADER: [&str; 15] = [
    "k",
    "f_gap_y",
    "f_gap_x",
    "grad_norm_sq_y",
    "min_grad_norm_sq",
    "min_f_gap",
    "k3_min_grad",
    "k2_min_gap",
    "lyap_gc",
    "lyap_iv",
    "lyap_unified",
    "decrease_slack",
    "env_obj_y",
    "env_grad",
    "cross_term",
];

pub const ODE_HEADER: [&str; 6] = [
    "t",
    "f_gap",
    "lyap",
    "bound_E0_over_t2",
    "t3_inf_grad",
    "t2_inf_gap",
];

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

/// Renders the per-iteration diagnostic table for a trace. Lyapunov and
/// envelope columns require a known minimizer and are NaN otherwise; gap
/// columns require f* (closed-form or estimated).
pub fn trace_csv_string(trace: &Trace) -> String {
    let mut out = String::with_capacity(trace.len().saturating_mul(280) + 256);
    out.push_str(&TRACE_HEADER.join(","));
    out.push('\n');
    let lyapunov = lyapunov_series(trace).ok();
    let d0 = trace.d0();
    let (r, s) = (trace.r, trace.step_size);
    let mut min_grad = f64::INFINITY;
    let mut min_gap = f64::INFINITY;
    for (k, rec) in trace.records.iter().enumerate() {
        let kf = k as f64;
        min_grad = min_grad.min(rec.grad_norm_sq);
        let f_gap_y = trace.f_gap_y(k).unwrap_or(f64::NAN);
        let f_gap_x = trace.f_gap_x(k).unwrap_or(f64::NAN);
        min_gap = min_gap.min(f_gap_y);
        let (lyap_gc, lyap_iv, lyap_unified) = match &lyapunov {
            Some(series) => {
                let v = series.values[k];
                (v[0], v[1], v[2])
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        };
        let decrease_slack = match &lyapunov {
            Some(series) if k < series.slacks.len() => series.slacks[k],
            _ => f64::NAN,
        };
        let env_obj_y = match d0 {
            Some(d0) => envelope_objective(k, r, s, d0, SequenceKind::Y).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        let env_grad = match d0 {
            Some(d0) => envelope_gradnorm(k, r, s, d0).unwrap_or(f64::NAN),
            None => f64::NAN,
        };
        let cells = [
            kf,
            f_gap_y,
            f_gap_x,
            rec.grad_norm_sq,
            min_grad,
            min_gap,
            kf * kf * kf * min_grad,
            kf * kf * min_gap,
            lyap_gc,
            lyap_iv,
            lyap_unified,
            decrease_slack,
            env_obj_y,
            env_grad,
            rec.cross_term,
        ];
        push_row(&mut out, &cells);
    }
    out
}

/// Renders the continuous rate report with `t` in place of `k`.
pub fn ode_csv_string(report: &RateReport) -> String {
    let mut out = String::with_capacity(report.rows.len() * 120 + 64);
    out.push_str(&ODE_HEADER.join(","));
    out.push('\n');
    for row in &report.rows {
        push_row(
            &mut out,
            &[
                row.t,
                row.f_gap,
                row.lyapunov,
                row.bound,
                row.cubic_inf_grad,
                row.quadratic_inf_gap,
            ],
        );
    }
    out
}

fn push_row(out: &mut String, cells: &[f64]) {
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format_float(*cell));
    }
    out.push('\n');
}

pub fn emit_trace_csv(trace: &Trace, path: &Path) -> io::Result<()> {
    write_atomic(path, trace_csv_string(trace).as_bytes())
}

pub fn emit_ode_csv(report: &RateReport, path: &Path) -> io::Result<()> {
    write_atomic(path, ode_csv_string(report).as_bytes())
}

/// Parses a CSV produced by this module back into header and numeric rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| "empty file".to_string())?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|e| format!("row {}: bad cell `{cell}`: {e}", i + 2))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "row {} has {} cells, header has {}",
                i + 2,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
