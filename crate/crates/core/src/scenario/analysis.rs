use serde::Serialize;

use super::AnalysisConfig;
use crate::error::{Error, Result};
use crate::homodyne::{
    analytic_moments, analytic_reference_covariance, expected_periodogram, power_spectrum,
    AcquisitionConfig, Detector, InitialAtoms, Quadrature, RecordEnsemble,
};
use crate::interaction::{ModeFunction, SwapParams};
use crate::modes::{
    bootstrap_intervals, certify_entanglement, cross_fit, estimate_covariance,
    fit_exponential_mode, kl_decompose, to_db, Certification, Channel, CovarianceEstimate,
    CrossFit, ExponentialFit,
};

/// Ensemble-mean output quadratures and their exponential fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanDecayReport {
    pub rate_x: f64,
    pub rate_p: f64,
    pub amplitude_x: f64,
    pub amplitude_p: f64,
    /// `|A_x / A_p|`.
    pub amplitude_ratio: f64,
    pub expected_rate: f64,
    /// `1 / xi^2`.
    pub expected_ratio: f64,
    pub fit_start_s: f64,
    pub fit_end_s: f64,
    pub cycles: usize,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub mean_x: Vec<f64>,
    #[serde(skip)]
    pub mean_p: Vec<f64>,
    #[serde(skip)]
    pub expected_x: Vec<f64>,
    #[serde(skip)]
    pub expected_p: Vec<f64>,
}

fn channel_average(ens: &RecordEnsemble) -> Vec<f64> {
    ens.mean(0)
        .iter()
        .zip(ens.mean(1))
        .map(|(a, b)| 0.5 * (a + b))
        .collect()
}

fn signed_fit(samples: &[f64], dt: f64, start: f64) -> Result<ExponentialFit> {
    let mode = ModeFunction::new(samples.to_vec(), dt).with_start(start);
    let mut fit = fit_exponential_mode(&mode)?;
    let peak = samples
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    fit.amplitude *= peak.signum();
    Ok(fit)
}

/// Fits `A exp(-r t)` to the cycle-averaged X and P records. The first `skip_s` and
/// the samples the filter mixes with post-pulse vacuum are excluded.
pub fn mean_decay_analysis(
    params: &SwapParams,
    ens_x: &RecordEnsemble,
    ens_p: &RecordEnsemble,
    initial: &InitialAtoms,
    skip_s: f64,
) -> Result<MeanDecayReport> {
    let acq = &ens_p.acquisition;
    let n = acq.n_samples();
    let dt = acq.dt();
    let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz)?;
    let first = (skip_s / dt).ceil() as usize;
    let last = n.saturating_sub(detector.edge_samples());
    if last < first + 3 {
        return Err(Error::invalid("fit_skip_s", "leaves too few samples to fit"));
    }
    let times: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * dt).collect();
    let mean_x = channel_average(ens_x);
    let mean_p = channel_average(ens_p);
    let fx = signed_fit(&mean_x[first..last], dt, times[first])?;
    let fp = signed_fit(&mean_p[first..last], dt, times[first])?;
    let expected_x = analytic_moments(params, &ens_x.acquisition, initial, Quadrature::X, 0)?
        .mean
        .iter()
        .copied()
        .collect();
    let expected_p = analytic_moments(params, acq, initial, Quadrature::P, 0)?
        .mean
        .iter()
        .copied()
        .collect();
    Ok(MeanDecayReport {
        rate_x: fx.rate,
        rate_p: fp.rate,
        amplitude_x: fx.amplitude,
        amplitude_p: fp.amplitude,
        amplitude_ratio: (fx.amplitude / fp.amplitude).abs(),
        expected_rate: params.gamma_sw + params.gamma_dec,
        expected_ratio: 1.0 / params.xi_squared(),
        fit_start_s: times[first],
        fit_end_s: times[last - 1],
        cycles: ens_p.len().min(ens_x.len()),
        times,
        mean_x,
        mean_p,
        expected_x,
        expected_p,
    })
}

/// Measured and predicted noise spectra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub zero_offset_db: f64,
    pub analytic_zero_offset_db: f64,
    /// Full width of the dip where the power deficit exceeds 10% of its peak value.
    pub dip_width_hz: Option<f64>,
    /// Largest in-band deviation of the measured reference from its expectation.
    pub reference_max_deviation_db: f64,
    pub bandwidth_hz: f64,
    #[serde(skip)]
    pub offsets_hz: Vec<f64>,
    #[serde(skip)]
    pub measured_db: Vec<f64>,
    #[serde(skip)]
    pub analytic_db: Vec<f64>,
    #[serde(skip)]
    pub reference_deviation_db: Vec<f64>,
}

/// Full width around zero offset where `1 - ratio` stays above 10% of its value at
/// zero, with linear interpolation between bins. `None` without a dip.
pub fn dip_width(offsets_hz: &[f64], ratio: &[f64]) -> Option<f64> {
    let i0 = offsets_hz
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?
        .0;
    let deficit: Vec<f64> = ratio.iter().map(|r| 1.0 - r).collect();
    let d0 = deficit[i0];
    if !(d0 > 0.0) {
        return None;
    }
    let thr = 0.1 * d0;
    let crossing = |step: isize| -> Option<f64> {
        let mut i = i0 as isize;
        loop {
            let j = i + step;
            if j < 0 || j as usize >= deficit.len() {
                return None;
            }
            let (a, b) = (i as usize, j as usize);
            if deficit[b] < thr {
                let f = (thr - deficit[a]) / (deficit[b] - deficit[a]);
                return Some(offsets_hz[a] + f * (offsets_hz[b] - offsets_hz[a]));
            }
            i = j;
        }
    };
    Some(crossing(1)? - crossing(-1)?)
}

/// Power spectrum against its exact expectation. `params = None` means the atoms
/// are decoupled.
pub fn spectrum_analysis(
    params: Option<&SwapParams>,
    initial: &InitialAtoms,
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
) -> Result<SpectrumReport> {
    let acq: &AcquisitionConfig = &records.acquisition;
    let ps = power_spectrum(records, reference, None)?;
    let n = acq.n_samples();
    let dt = acq.dt();
    let floor = analytic_reference_covariance(acq)?;
    let zeros = nalgebra::DVector::zeros(n);
    let (_, ref_a) = expected_periodogram(&floor, &zeros, dt, n);
    let sig_a = match params {
        Some(p) => {
            let m = analytic_moments(p, acq, initial, Quadrature::P, 0)?;
            expected_periodogram(&m.cov, &m.mean, dt, n).1
        }
        None => ref_a.clone(),
    };
    let analytic_db: Vec<f64> = sig_a.iter().zip(&ref_a).map(|(s, r)| to_db(s / r)).collect();
    // Measured spectra sum both channels.
    let reference_deviation_db: Vec<f64> = ps
        .reference
        .iter()
        .zip(&ref_a)
        .map(|(m, e)| to_db(m / (2.0 * e)))
        .collect();
    let band = acq.detection_bandwidth_hz;
    let reference_max_deviation_db = ps
        .offsets_hz
        .iter()
        .zip(&reference_deviation_db)
        .filter(|(f, _)| f.abs() <= band)
        .map(|(_, d)| d.abs())
        .fold(0.0, f64::max);
    let ratio = ps.ratio();
    let i0 = ps
        .offsets_hz
        .iter()
        .position(|f| *f == 0.0)
        .ok_or_else(|| Error::invalid("spectrum", "no zero-offset bin"))?;
    Ok(SpectrumReport {
        zero_offset_db: to_db(ratio[i0]),
        analytic_zero_offset_db: analytic_db[i0],
        dip_width_hz: dip_width(&ps.offsets_hz, &ratio),
        reference_max_deviation_db,
        bandwidth_hz: band,
        measured_db: ps.db(),
        offsets_hz: ps.offsets_hz,
        analytic_db,
        reference_deviation_db,
    })
}

/// One reported temporal mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeEntry {
    pub index: usize,
    /// In-sample eigenvalue (ratio to shot noise).
    pub variance: f64,
    pub db: f64,
    /// Variance scored on held-out cycles, both channels averaged.
    pub held_out_variance: f64,
    pub held_out_db: f64,
    /// Bootstrap standard error of the held-out variance.
    pub error: f64,
    /// 95% bootstrap interval of the in-sample eigenvalue.
    pub bootstrap_ci: [f64; 2],
    pub fit: ExponentialFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeReport {
    pub whitened: bool,
    pub bin: usize,
    pub dt_s: f64,
    pub n_cycles: usize,
    pub modes: Vec<ModeEntry>,
    /// Modes whose held-out variance lies more than 3 errors below shot noise.
    pub significant: Vec<usize>,
    pub duan: Option<Certification>,
    pub duan_error: Option<String>,
    /// Squared overlap of the leading mode with the bin-averaged `exp(-gamma_sw t)`.
    pub leading_fidelity: Option<f64>,
    /// Full-swap variance without decoherence or loss, dB.
    pub ideal_db: Option<f64>,
    /// Leading mode variances from the exact covariance, dB.
    pub population_db: Option<Vec<f64>>,
    pub times_s: Vec<f64>,
    pub mode_functions: Vec<Vec<f64>>,
    /// All in-sample eigenvalues, ascending.
    pub spectrum: Vec<f64>,
}

/// Temporal-mode analysis of an ensemble. `params` enables the model predictions.
pub fn mode_analysis(
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
    analysis: &AnalysisConfig,
    params: Option<(&SwapParams, &InitialAtoms)>,
    seed: u64,
) -> Result<(ModeReport, CrossFit, CovarianceEstimate)> {
    let opts = analysis.covariance();
    let cf = cross_fit(records, reference, opts, analysis.bootstrap_resamples, seed)?;
    let est = estimate_covariance(records, reference, Channel::Combined, opts)?;
    let boot = bootstrap_intervals(records, &est, analysis.bootstrap_resamples, seed)?;
    let spec = &cf.in_sample;
    let shown = analysis.modes_reported.min(spec.len());
    let modes = (0..shown)
        .map(|i| {
            Ok(ModeEntry {
                index: i,
                variance: spec.variances[i],
                db: to_db(spec.variances[i]),
                held_out_variance: cf.combined.variances[i],
                held_out_db: to_db(cf.combined.variances[i]),
                error: cf.combined.errors[i],
                bootstrap_ci: [boot.lower[i], boot.upper[i]],
                fit: fit_exponential_mode(&spec.modes[i])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (duan, duan_error) = match certify_entanglement(&cf.cosine, &cf.sine, 0) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (mut leading_fidelity, mut ideal_db, mut population_db) = (None, None, None);
    if let Some((p, initial)) = params {
        let k = spec.modes[0].len();
        let expo = ModeFunction::exponential(p.gamma_sw, est.dt, k)?;
        leading_fidelity = Some(spec.modes[0].overlap(&expo)?.powi(2));
        ideal_db = Some(to_db(p.ideal_output_variance_ratio()?));
        let acq = &records.acquisition;
        let m = analytic_moments(p, acq, initial, Quadrature::P, 0)?;
        let floor = analytic_reference_covariance(acq)?;
        let pop = CovarianceEstimate::from_population(&m.cov, &floor, acq.dt(), opts)?;
        population_db = Some(kl_decompose(&pop)?.db()[..shown].to_vec());
    }
    let report = ModeReport {
        whitened: opts.whitening,
        bin: opts.bin,
        dt_s: est.dt,
        n_cycles: records.len(),
        significant: cf.combined.significant_below_shot_noise(3.0),
        duan,
        duan_error,
        leading_fidelity,
        ideal_db,
        population_db,
        times_s: est.times(),
        mode_functions: spec.modes[..shown].iter().map(|m| m.samples.clone()).collect(),
        spectrum: spec.variances.clone(),
        modes,
    };
    Ok((report, cf, est))
}
