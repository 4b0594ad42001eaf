use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::{Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::homodyne::AcquisitionConfig;
use crate::modes::MIN_CERTIFY_CYCLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(severity: Severity, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

fn field_of(err: &Error) -> String {
    match err {
        Error::InvalidParameter { name, .. } => name.to_string(),
        Error::QndLimit | Error::ImaginaryXiRegime { .. } => "couplings.xi_squared".into(),
        Error::StepTooCoarse { .. } => "acquisition.sample_rate_hz".into(),
        _ => "config".into(),
    }
}

/// Reads and checks a scenario file. Fails only if the file cannot be read.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path)?;
    Ok(validate_str(&text, path))
}

/// All diagnostics for a scenario text, most severe first.
pub fn validate_str(text: &str, path: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let scenario = match Scenario::from_toml(text, path) {
        Ok(s) => s,
        Err(Error::Config { message, .. }) => {
            out.push(Diagnostic::new(Severity::Error, "config", message));
            return out;
        }
        Err(e) => {
            out.push(Diagnostic::new(Severity::Error, "config", e.to_string()));
            return out;
        }
    };

    let table: toml::Table = text.parse().unwrap_or_default();
    let given = table.get("acquisition").and_then(|v| v.as_table());
    let defaults = serde_json::to_value(AcquisitionConfig::default()).unwrap_or_default();
    if let Some(obj) = defaults.as_object() {
        for (key, value) in obj {
            if given.is_none_or(|t| !t.contains_key(key)) {
                out.push(Diagnostic::new(
                    Severity::Info,
                    format!("acquisition.{key}"),
                    format!("not set, using default {value}"),
                ));
            }
        }
    }

    match scenario.validate() {
        Ok(params) => {
            let acq = &scenario.acquisition;
            if let Some(p) = params {
                let gdt = p.gamma_sw * acq.dt();
                if gdt > 0.05 {
                    out.push(Diagnostic::new(
                        Severity::Warning,
                        "acquisition.sample_rate_hz",
                        format!("gamma_sw*dt = {gdt:.3} is close to the accuracy guard"),
                    ));
                }
            }
            let analyzes_modes = matches!(
                scenario.kind,
                ScenarioKind::ModeSpectrum | ScenarioKind::VacuumReference
            );
            if analyzes_modes && acq.n_cycles < MIN_CERTIFY_CYCLES {
                out.push(Diagnostic::new(
                    Severity::Warning,
                    "acquisition.n_cycles",
                    format!("fewer than {MIN_CERTIFY_CYCLES} cycles: no inseparability test"),
                ));
            }
            if acq.shot_noise_ref_cycles < acq.n_cycles {
                out.push(Diagnostic::new(
                    Severity::Warning,
                    "acquisition.shot_noise_ref_cycles",
                    "reference has fewer cycles than the signal; its noise will dominate",
                ));
            }
            if analyzes_modes && !scenario.analysis.whitening {
                out.push(Diagnostic::new(
                    Severity::Warning,
                    "analysis.whitening",
                    "off: filter correlations of the shot noise appear as spurious modes",
                ));
            }
            if let Some(note) = &scenario.calibration_note {
                out.push(Diagnostic::new(Severity::Info, "calibration_note", note.clone()));
            }
        }
        Err(e) => out.push(Diagnostic::new(Severity::Error, field_of(&e), e.to_string())),
    }
    out.sort_by(|a, b| b.severity.cmp(&a.severity));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(text: &str) -> Vec<Diagnostic> {
        validate_str(text, Path::new("t.toml"))
    }

    fn errors(d: &[Diagnostic]) -> Vec<&Diagnostic> {
        d.iter().filter(|d| d.severity == Severity::Error).collect()
    }

    const BASE: &str = "name = \"t\"\nkind = \"mode_spectrum\"\n";

    #[test]
    fn missing_sample_rate_is_info_with_default() {
        let d = check(&format!("{BASE}[couplings]\ngamma_sw_per_s = 175.4\nxi_squared = 0.16\n"));
        assert!(errors(&d).is_empty(), "{d:?}");
        let sr = d.iter().find(|d| d.field == "acquisition.sample_rate_hz").unwrap();
        assert_eq!(sr.severity, Severity::Info);
        assert!(sr.message.contains("12500"), "{}", sr.message);
    }

    #[test]
    fn imaginary_xi_is_an_error() {
        let d = check(&format!("{BASE}[couplings]\ngamma_sw_per_s = 175.4\nxi_squared = 1.5\n"));
        let e = errors(&d);
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].field, "couplings.xi_squared");
        assert!(e[0].message.contains("entanglement between the light and atoms"));
    }

    #[test]
    fn syntax_error_carries_line() {
        let d = check(&format!("{BASE}[couplings\n"));
        assert!(errors(&d)[0].message.contains("line"), "{d:?}");
    }

    #[test]
    fn coarse_step_rejected() {
        let text = format!(
            "{BASE}[couplings]\ngamma_sw_per_s = 5000.0\nxi_squared = 0.16\n\
             [acquisition]\nsample_rate_hz = 12500.0\n"
        );
        let d = check(&text);
        assert_eq!(errors(&d)[0].field, "acquisition.sample_rate_hz");
    }

    #[test]
    fn vacuum_needs_no_couplings() {
        let d = check("name = \"v\"\nkind = \"vacuum_reference\"\n");
        assert!(errors(&d).is_empty(), "{d:?}");
    }
}
