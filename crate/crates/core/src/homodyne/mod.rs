//! Stochastic homodyne records of the cascaded two-cell system.
//!
//! Records are written in the rotating frame: each cycle yields one cosine and one
//! sine channel sample series. Samples are bin averages over `dt = 1/sample_rate`
//! scaled so that `sum_i u(t_i) y_i dt` has unit variance for vacuum input and any
//! normalized mode `u` (shot noise = 1).

mod analytic;
mod discretize;
mod filter;
mod io;
mod rng;
mod simulate;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::interaction::SwapParams;

pub use analytic::{analytic_moments, analytic_reference_covariance, ChannelMoments};
pub use discretize::{phi1, StepConstants};
pub use filter::{Detector, GaussianFir, MIN_FILTER_SIGMA_SAMPLES};
pub use io::{read_records, sidecar_path, write_records, RecordHeader};
pub use rng::{cycle_rng, RngDomain};
pub use simulate::{
    simulate_cycle, simulate_ensemble, shot_noise_reference, unfiltered_reference_cycle,
    vacuum_ensemble, CycleSimulator,
};
pub use spectrum::{expected_periodogram, power_spectrum, PowerSpectrum};

/// Largest `gamma_sw * dt` accepted by the simulator.
pub const MAX_GAMMA_DT: f64 = 0.1;

/// Scale applied to raw bin-averaged quadratures so vacuum reads as unit shot noise.
pub const CALIBRATION: f64 = std::f64::consts::SQRT_2;

fn default_sample_rate() -> f64 {
    12_500.0
}
fn default_pulse() -> f64 {
    0.015
}
fn default_cycles() -> usize {
    10_000
}
fn default_bandwidth() -> f64 {
    2_500.0
}
fn default_ref_cycles() -> usize {
    20_000
}
fn default_efficiency() -> f64 {
    1.0
}

/// Acquisition settings shared by signal and reference ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_pulse")]
    pub pulse_duration_s: f64,
    #[serde(default = "default_cycles")]
    pub n_cycles: usize,
    #[serde(default)]
    pub rng_seed: u64,
    /// Single-sided frequency at which the detection filter's power response is 1/2.
    #[serde(default = "default_bandwidth")]
    pub detection_bandwidth_hz: f64,
    #[serde(default = "default_ref_cycles")]
    pub shot_noise_ref_cycles: usize,
    /// Overall detection efficiency; losses mix in vacuum.
    #[serde(default = "default_efficiency")]
    pub detection_efficiency: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: default_sample_rate(),
            pulse_duration_s: default_pulse(),
            n_cycles: default_cycles(),
            rng_seed: 0,
            detection_bandwidth_hz: default_bandwidth(),
            shot_noise_ref_cycles: default_ref_cycles(),
            detection_efficiency: default_efficiency(),
        }
    }
}

impl AcquisitionConfig {
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn n_samples(&self) -> usize {
        (self.sample_rate_hz * self.pulse_duration_s).round() as usize
    }

    pub fn with_cycles(mut self, n: usize) -> Self {
        self.n_cycles = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample_rate_hz", "must be positive"));
        }
        if !(self.pulse_duration_s.is_finite() && self.pulse_duration_s > 0.0) {
            return Err(Error::invalid("pulse_duration_s", "must be positive"));
        }
        if self.n_samples() < 8 {
            return Err(Error::invalid(
                "pulse_duration_s",
                format!("pulse holds {} samples, need at least 8", self.n_samples()),
            ));
        }
        if self.n_cycles < 2 {
            return Err(Error::invalid("n_cycles", "need at least 2 cycles"));
        }
        if self.shot_noise_ref_cycles < 2 {
            return Err(Error::invalid("shot_noise_ref_cycles", "need at least 2 cycles"));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.detection_bandwidth_hz > 0.0 && self.detection_bandwidth_hz < nyquist) {
            return Err(Error::invalid(
                "detection_bandwidth_hz",
                format!("must lie in (0, {nyquist}) Hz"),
            ));
        }
        if !(self.detection_efficiency > 0.0 && self.detection_efficiency <= 1.0) {
            return Err(Error::invalid("detection_efficiency", "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Rejects time steps too coarse for the interaction rates.
    pub fn check_step(&self, params: &SwapParams) -> Result<()> {
        let gamma_dt = params.gamma_sw * self.dt();
        if gamma_dt > MAX_GAMMA_DT {
            return Err(Error::StepTooCoarse {
                gamma_dt,
                limit: MAX_GAMMA_DT,
            });
        }
        Ok(())
    }

    /// Signal and reference ensembles must share the time grid and filter.
    pub fn check_compatible(&self, other: &AcquisitionConfig) -> Result<()> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same(self.sample_rate_hz, other.sample_rate_hz) {
            return Err(Error::ConfigMismatch("sample_rate_hz differs".into()));
        }
        if self.n_samples() != other.n_samples() {
            return Err(Error::ConfigMismatch("samples per record differ".into()));
        }
        if !same(self.detection_bandwidth_hz, other.detection_bandwidth_hz) {
            return Err(Error::ConfigMismatch("detection_bandwidth_hz differs".into()));
        }
        Ok(())
    }
}

/// Which output light quadrature is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrature {
    X,
    P,
}

impl std::str::FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Quadrature::X),
            "p" | "P" => Ok(Quadrature::P),
            other => Err(Error::invalid(
                "quadrature",
                format!("expected X or P, got `{other}`"),
            )),
        }
    }
}

/// Atomic state at the start of the pulse.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialAtoms {
    /// Coherent spin state in both channels.
    Css,
    /// Coherent spin state displaced equally in both channels, as after a short RF pulse.
    Displaced { x: f64, p: f64 },
    /// One-mode state used for both channels, or a two-mode state `(cosine, sine)`.
    State(GaussianState),
}

impl InitialAtoms {
    /// Mean and variance of the atomic quadrature that drives the recorded output
    /// quadrature: `X_b` for P-selection, `P_b` for X-selection.
    pub(crate) fn moments(&self, channel: usize, quadrature: Quadrature) -> Result<(f64, f64)> {
        let q = match quadrature {
            Quadrature::P => 0,
            Quadrature::X => 1,
        };
        match self {
            InitialAtoms::Css => Ok((0.0, crate::gaussian::VACUUM_VARIANCE)),
            InitialAtoms::Displaced { x, p } => {
                Ok(([*x, *p][q], crate::gaussian::VACUUM_VARIANCE))
            }
            InitialAtoms::State(s) => {
                let mode = match s.modes() {
                    1 => 0,
                    2 => channel,
                    m => {
                        return Err(Error::DimensionMismatch {
                            expected: 2,
                            found: m,
                        })
                    }
                };
                let i = 2 * mode + q;
                Ok((s.mean()[i], s.cov()[(i, i)]))
            }
        }
    }
}

/// One acquisition cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    /// Cosine channel.
    pub pc: Vec<f64>,
    /// Sine channel.
    pub ps: Vec<f64>,
    pub dt: f64,
    pub cycle_id: u64,
    pub calibration: f64,
}

impl HomodyneRecord {
    pub fn len(&self) -> usize {
        self.pc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pc.is_empty()
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        if index == 0 {
            &self.pc
        } else {
            &self.ps
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pc.len() != self.ps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.pc.len(),
                found: self.ps.len(),
            });
        }
        if self.pc.iter().chain(&self.ps).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "homodyne record",
            });
        }
        Ok(())
    }
}

/// Records from one acquisition configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordEnsemble {
    pub acquisition: AcquisitionConfig,
    pub records: Vec<HomodyneRecord>,
}

impl RecordEnsemble {
    pub fn new(acquisition: AcquisitionConfig, records: Vec<HomodyneRecord>) -> Result<Self> {
        let n = acquisition.n_samples();
        for r in &records {
            r.validate()?;
            if r.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        Ok(Self {
            acquisition,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_samples(&self) -> usize {
        self.acquisition.n_samples()
    }

    pub fn dt(&self) -> f64 {
        self.acquisition.dt()
    }

    /// Cycle-averaged record of one channel.
    pub fn mean(&self, channel: usize) -> Vec<f64> {
        let n = self.n_samples();
        let mut acc = vec![0.0; n];
        for r in &self.records {
            for (a, v) in acc.iter_mut().zip(r.channel(channel)) {
                *a += v;
            }
        }
        let k = self.records.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        acc
    }

    /// Sub-ensemble holding the given cycles, in the given order.
    pub fn select(&self, cycles: &[usize]) -> Self {
        Self {
            acquisition: self.acquisition.clone(),
            records: cycles.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}
