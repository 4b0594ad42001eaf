//! Two-time covariance estimation and temporal-mode (Karhunen-Loève) analysis.

mod certify;
mod covariance;
mod fit;
mod kl;
mod resample;

use serde::{Deserialize, Serialize};

pub use certify::{certify_entanglement, Certification, MIN_CERTIFY_CYCLES, MODE_MATCH_OVERLAP};
pub use covariance::{estimate_covariance, CovarianceEstimate};
pub use fit::{fit_exponential_mode, ExponentialFit};
pub use kl::{kl_decompose, ModeSpectrum, CLAMP_BELOW};
pub use resample::{bootstrap_intervals, cross_fit, BootstrapIntervals, CrossFit};

/// Which channel(s) a covariance is estimated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Cosine,
    Sine,
    /// Both channels pooled as independent samples of the same process.
    Combined,
}

impl Channel {
    pub(crate) fn indices(self) -> &'static [usize] {
        match self {
            Channel::Cosine => &[0],
            Channel::Sine => &[1],
            Channel::Combined => &[0, 1],
        }
    }
}

fn default_bin() -> usize {
    6
}
fn default_whitening() -> bool {
    true
}

/// How records are reduced before decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceOptions {
    /// Consecutive samples averaged into one analysis bin.
    #[serde(default = "default_bin")]
    pub bin: usize,
    /// Whiten by the reference covariance instead of scaling by its mean diagonal.
    #[serde(default = "default_whitening")]
    pub whitening: bool,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        Self {
            bin: default_bin(),
            whitening: default_whitening(),
        }
    }
}

/// Converts a variance ratio to dB.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
