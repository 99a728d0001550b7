//! TOML experiment configuration.
//!
//! ```toml
//! seed = 0
//! output_dir = "out"        # optional; flag and NAGCERT_OUT also apply
//! emit_csv = true
//! emit_svg = false
//!
//! [objective]
//! kind = "preset"            # preset | quadratic | log-sum-exp | logistic
//! name = "quadratic-2d"
//!
//! [[scheme]]
//! scheme = "two-sequence"    # two-sequence | gradient-correction | implicit-velocity
//! r = 2.0
//! s_frac = 1.0               # or: s = 0.25 (exactly one of the two)
//! x0 = [1.0, 1.0]
//! max_iter = 1000
//!
//! [ode]
//! r = 2.0
//! s = 1e-2
//! x0 = [1.0, 1.0]
//! t_end = 10.0
//! samples = 400
//!
//! [verify]
//! per_step = true
//! lyapunov = true
//! envelopes = true
//! series = true
//! tails = false
//! equivalence = true         # omit to compare automatically when possible
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::objectives::ObjectiveSpec;
use crate::schemes::SchemeKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config `{path}`:\n{message}")]
    Parse { path: String, message: String },
    #[error("config error: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seeds synthetic objective data unless the objective pins its own seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_true")]
    pub emit_csv: bool,
    #[serde(default)]
    pub emit_svg: bool,
    /// Iterations of the reference run that estimates f* when the objective
    /// has no closed-form optimum.
    #[serde(default = "default_estimate_iters")]
    pub f_star_estimate_iters: usize,
    pub objective: ObjectiveSpec,
    #[serde(default, rename = "scheme")]
    pub schemes: Vec<SchemeSection>,
    #[serde(default)]
    pub ode: Option<OdeSection>,
    #[serde(default)]
    pub verify: VerifySection,
}

fn default_true() -> bool {
    true
}

fn default_estimate_iters() -> usize {
    1_000_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub scheme: SchemeKind,
    pub r: f64,
    #[serde(default)]
    pub s: Option<f64>,
    /// Step size as a fraction of 1/L; defaults to 1 when neither is given.
    #[serde(default)]
    pub s_frac: Option<f64>,
    pub x0: Vec<f64>,
    pub max_iter: usize,
}

impl SchemeSection {
    pub fn step_size(&self, lipschitz: f64) -> Result<f64, ConfigError> {
        match (self.s, self.s_frac) {
            (Some(s), None) => Ok(s),
            (None, Some(frac)) => {
                if frac > 0.0 && frac.is_finite() {
                    Ok(frac / lipschitz)
                } else {
                    Err(ConfigError::Invalid(format!(
                        "s_frac = {frac} must be positive and finite"
                    )))
                }
            }
            (None, None) => Ok(1.0 / lipschitz),
            (Some(_), Some(_)) => Err(ConfigError::Invalid(
                "give either `s` or `s_frac`, not both".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    pub r: f64,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub s_frac: Option<f64>,
    pub x0: Vec<f64>,
    pub t_end: f64,
    #[serde(default = "default_tolerance")]
    pub rel_tol: f64,
    #[serde(default = "default_tolerance")]
    pub abs_tol: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl OdeSection {
    pub fn step_parameter(&self, lipschitz: f64) -> Result<f64, ConfigError> {
        match (self.s, self.s_frac) {
            (Some(s), None) => Ok(s),
            (None, Some(frac)) if frac > 0.0 && frac.is_finite() => Ok(frac / lipschitz),
            (None, None) => Ok(1.0 / lipschitz),
            _ => Err(ConfigError::Invalid(
                "give either `s` or `s_frac`, not both".into(),
            )),
        }
    }
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    400
}

/// Per-trace verification toggles. `equivalence = None` compares schemes
/// automatically whenever at least two identically parameterized sections
/// are present.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub equivalence: Option<bool>,
    pub per_step: bool,
    pub lyapunov: bool,
    pub envelopes: bool,
    pub series: bool,
    pub tails: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            equivalence: None,
            per_step: true,
            lyapunov: true,
            envelopes: true,
            series: true,
            tails: false,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text).map_err(|message| ConfigError::Parse {
        path: path.display().to_string(),
        message,
    })
}

/// Parses a config from TOML text; the error string carries the line/column
/// span reported by the parser.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[objective]
kind = "preset"
name = "quadratic-2d"

[[scheme]]
scheme = "two-sequence"
r = 2.0
x0 = [1.0, 1.0]
max_iter = 100
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert!(cfg.emit_csv);
        assert!(!cfg.emit_svg);
        assert_eq!(cfg.schemes.len(), 1);
        assert_eq!(cfg.schemes[0].step_size(4.0).unwrap(), 0.25);
        assert!(cfg.verify.per_step);
        assert!(!cfg.verify.tails);
        assert_eq!(cfg.f_star_estimate_iters, 1_000_000);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let bad = format!("{MINIMAL}\nnuisance = 3\n");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.contains("nuisance"), "message: {err}");
    }

    #[test]
    fn unknown_scheme_kind_is_rejected() {
        let bad = MINIMAL.replace("two-sequence", "three-sequence");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.contains("three-sequence") || err.contains("unknown variant"));
    }

    #[test]
    fn step_size_forms_are_exclusive() {
        let cfg = parse_config(&format!("{MINIMAL}s = 0.1\ns_frac = 0.5\n")).unwrap();
        assert!(cfg.schemes[0].step_size(4.0).is_err());
        let cfg = parse_config(&format!("{MINIMAL}s_frac = 0.5\n")).unwrap();
        assert_eq!(cfg.schemes[0].step_size(4.0).unwrap(), 0.125);
        let cfg = parse_config(&format!("{MINIMAL}s = 0.1\n")).unwrap();
        assert_eq!(cfg.schemes[0].step_size(4.0).unwrap(), 0.1);
    }

    #[test]
    fn ode_section_parses() {
        let text = format!("{MINIMAL}\n[ode]\nr = 2.0\ns = 1e-2\nx0 = [1.0, 1.0]\nt_end = 10.0\n");
        let cfg = parse_config(&text).unwrap();
        let ode = cfg.ode.unwrap();
        assert_eq!(ode.samples, 400);
        assert_eq!(ode.rel_tol, 1e-9);
        assert_eq!(ode.step_parameter(4.0).unwrap(), 1e-2);
    }
}
