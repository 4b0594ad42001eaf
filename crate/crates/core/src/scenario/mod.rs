//! Scenario files, validation, analysis pipelines and artifact writing.
//!
//! A scenario is a TOML file:
//!
//! ```toml
//! name = "fig5_mode_spectrum"
//! kind = "mode_spectrum"          # mean_decay | power_spectrum | mode_spectrum | vacuum_reference
//!
//! [couplings]                     # or an [atomic] table with the polarizability inputs
//! gamma_sw_per_s = 256.41
//! xi_squared = 0.15873
//! gamma_dec_per_s = 77.52
//!
//! [acquisition]
//! detection_efficiency = 0.66
//!
//! [analysis]
//! whitening = true
//! ```

mod analysis;
mod run;
mod validate;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::homodyne::{AcquisitionConfig, InitialAtoms};
use crate::interaction::{couplings_from_physics, AtomicConfig, SwapParams};
use crate::modes::CovarianceOptions;

pub use analysis::{
    dip_width, mean_decay_analysis, mode_analysis, spectrum_analysis, MeanDecayReport,
    ModeEntry, ModeReport, SpectrumReport,
};
pub use run::{analyze_records, run_scenario, RunReport, RunSummary};
pub use validate::{validate_config, validate_str, Diagnostic, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Ensemble-mean decay of both output quadratures after an RF displacement.
    MeanDecay,
    /// Noise power spectrum relative to shot noise.
    PowerSpectrum,
    /// Temporal-mode spectrum, fits and the inseparability test (plus the spectrum).
    ModeSpectrum,
    /// Atoms decoupled: the vacuum control for every analysis.
    VacuumReference,
}

fn default_larmor() -> f64 {
    322e3
}

/// Couplings given directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsConfig {
    pub gamma_sw_per_s: f64,
    pub xi_squared: f64,
    #[serde(default)]
    pub gamma_dec_per_s: f64,
    #[serde(default = "default_larmor")]
    pub larmor_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceConfig {
    pub gamma_dec_per_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    #[default]
    Css,
    /// Mean offset of both atomic quadratures in units where vacuum variance is 1/2.
    Displaced { x: f64, p: f64 },
}

impl InitialConfig {
    pub fn atoms(&self) -> InitialAtoms {
        match *self {
            InitialConfig::Css => InitialAtoms::Css,
            InitialConfig::Displaced { x, p } => InitialAtoms::Displaced { x, p },
        }
    }
}

fn default_resamples() -> usize {
    200
}
fn default_modes_reported() -> usize {
    8
}
fn default_fit_skip() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Samples averaged into one analysis bin.
    #[serde(default = "default_bin")]
    pub bin: usize,
    #[serde(default = "default_whitening")]
    pub whitening: bool,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_modes_reported")]
    pub modes_reported: usize,
    /// Initial stretch excluded from mean-decay fits, s.
    #[serde(default = "default_fit_skip")]
    pub fit_skip_s: f64,
}

fn default_bin() -> usize {
    CovarianceOptions::default().bin
}
fn default_whitening() -> bool {
    CovarianceOptions::default().whitening
}

impl AnalysisConfig {
    pub fn covariance(&self) -> CovarianceOptions {
        CovarianceOptions {
            bin: self.bin,
            whitening: self.whitening,
        }
    }
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin: default_bin(),
            whitening: default_whitening(),
            bootstrap_resamples: default_resamples(),
            modes_reported: default_modes_reported(),
            fit_skip_s: default_fit_skip(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
}

/// Parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub description: Option<String>,
    /// Shown in reports when parameters were tuned to reproduce measured numbers.
    #[serde(default)]
    pub calibration_note: Option<String>,
    #[serde(default)]
    pub couplings: Option<CouplingsConfig>,
    #[serde(default)]
    pub atomic: Option<AtomicConfig>,
    /// Decoherence for scenarios defined through `[atomic]`.
    #[serde(default)]
    pub decoherence: Option<DecoherenceConfig>,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: Option<OutputConfig>,
}

impl Scenario {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path)
    }

    /// Couplings for this scenario, checked against the acquisition grid.
    pub fn swap_params(&self) -> Result<SwapParams> {
        let t = self.acquisition.pulse_duration_s;
        let p = match (&self.couplings, &self.atomic) {
            (Some(c), None) => {
                if self.decoherence.is_some() {
                    return Err(Error::invalid(
                        "decoherence",
                        "set gamma_dec_per_s inside [couplings] instead",
                    ));
                }
                SwapParams::from_xi_squared(c.gamma_sw_per_s, c.xi_squared, t)?
                    .with_decoherence(c.gamma_dec_per_s)?
                    .with_larmor_hz(c.larmor_hz)
            }
            (None, Some(a)) => {
                let g = self.decoherence.as_ref().map_or(0.0, |d| d.gamma_dec_per_s);
                couplings_from_physics(a, t)?.with_decoherence(g)?
            }
            (Some(_), Some(_)) => {
                return Err(Error::invalid(
                    "couplings",
                    "give either [couplings] or [atomic], not both",
                ))
            }
            (None, None) => {
                return Err(Error::invalid(
                    "couplings",
                    "one of [couplings] or [atomic] is required",
                ))
            }
        };
        self.acquisition.check_step(&p)?;
        Ok(p)
    }

    /// Checks every field and returns the couplings; `None` only for a vacuum
    /// reference without couplings.
    pub fn validate(&self) -> Result<Option<SwapParams>> {
        if !is_safe_name(&self.name) {
            return Err(Error::invalid(
                "name",
                "must be nonempty and use only letters, digits, '-', '_' or '.'",
            ));
        }
        self.acquisition.validate()?;
        let p = match (self.kind, &self.couplings, &self.atomic) {
            (ScenarioKind::VacuumReference, None, None) => None,
            _ => Some(self.swap_params()?),
        };
        let a = &self.analysis;
        if a.bin == 0 || a.bin > self.acquisition.n_samples() / 2 {
            return Err(Error::invalid("analysis.bin", "bin outside 1..=n_samples/2"));
        }
        if a.modes_reported == 0 {
            return Err(Error::invalid("analysis.modes_reported", "need at least 1"));
        }
        if a.bootstrap_resamples < 2 {
            return Err(Error::invalid("analysis.bootstrap_resamples", "need at least 2"));
        }
        if !(a.fit_skip_s >= 0.0 && a.fit_skip_s < 0.5 * self.acquisition.pulse_duration_s) {
            return Err(Error::invalid("analysis.fit_skip_s", "must lie in [0, T/2)"));
        }
        Ok(p)
    }

    /// SHA-256 of the canonical JSON form of the effective scenario.
    pub fn config_hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}

pub(crate) fn is_safe_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
