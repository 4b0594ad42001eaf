//! Exact first and second moments of recorded samples, propagated with the same
//! per-step constants the sampler uses.

use nalgebra::{DMatrix, DVector};

use super::discretize::StepConstants;
use super::filter::Detector;
use super::simulate::channel_couplings;
use super::{AcquisitionConfig, InitialAtoms, Quadrature, CALIBRATION};
use crate::error::Result;
use crate::interaction::SwapParams;

/// Mean and covariance of one channel's filtered record.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// Moments of the chosen channel's filtered record.
pub fn analytic_moments(
    params: &SwapParams,
    acq: &AcquisitionConfig,
    initial: &InitialAtoms,
    quadrature: Quadrature,
    channel: usize,
) -> Result<ChannelMoments> {
    acq.validate()?;
    params.validate()?;
    acq.check_step(params)?;
    let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz)?;
    let (c, d) = channel_couplings(params, quadrature);
    let h = acq.dt() / detector.oversample() as f64;
    let k = StepConstants::new(c, d, params.gamma_sw + params.gamma_dec, params.gamma_dec, h);
    let (mean0, var0) = initial.moments(channel, quadrature)?;

    let n = acq.n_samples() * detector.oversample();
    let pad = detector.pad();
    let total = n + 2 * pad;
    let eta = acq.detection_efficiency;
    let scale2 = CALIBRATION * CALIBRATION;
    let vac = 1.0 / h;

    let q = &k.noise_cov;
    let (a, m) = (k.decay, k.mean_factor);
    let mut raw = DMatrix::<f64>::zeros(total, total);
    let mut mean = DVector::<f64>::zeros(total);
    for i in 0..pad {
        raw[(i, i)] = vac;
        raw[(pad + n + i, pad + n + i)] = vac;
    }
    let (mut v, mut mu) = (var0, mean0);
    for i in 0..n {
        let var_y = q[0][0] + c * c * (m * m * v + q[2][2]) + 2.0 * c * q[0][2];
        let ii = pad + i;
        raw[(ii, ii)] = eta * scale2 * var_y + (1.0 - eta) * vac;
        mean[ii] = eta.sqrt() * CALIBRATION * c * m * mu;
        // Cov(y_i, X_{i+1}), then geometric decay for later samples.
        let mut cross = a * c * m * v + q[0][1] + c * q[1][2];
        for j in i + 1..n {
            let cov = eta * scale2 * c * m * cross;
            raw[(ii, pad + j)] = cov;
            raw[(pad + j, ii)] = cov;
            cross *= a;
        }
        v = a * a * v + q[1][1];
        mu *= a;
    }

    let hm = detector.matrix(acq.n_samples());
    let cov = &hm * raw * hm.transpose();
    Ok(ChannelMoments {
        mean: &hm * mean,
        cov: (&cov + cov.transpose()) * 0.5,
    })
}

/// Covariance of a filtered shot-noise record.
pub fn analytic_reference_covariance(acq: &AcquisitionConfig) -> Result<DMatrix<f64>> {
    acq.validate()?;
    let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz)?;
    let hm = detector.matrix(acq.n_samples());
    let h = acq.dt() / detector.oversample() as f64;
    Ok(&hm * hm.transpose() / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force oracle: the bin is split into `sub` fine steps with the input held
    /// constant on each; every sample is written as an explicit linear combination of
    /// independent noises, and the covariance is the Gram matrix. Richardson
    /// extrapolation in `sub` removes the leading discretization error.
    fn fine_grid_cov(
        c: f64,
        d: f64,
        g: f64,
        gd: f64,
        var0: f64,
        h: f64,
        n: usize,
        sub: usize,
    ) -> DMatrix<f64> {
        let hf = h / sub as f64;
        let m = n * sub;
        let cols = 1 + 2 * m;
        let mut rows = DMatrix::<f64>::zeros(n, cols);
        let mut x = DVector::<f64>::zeros(cols);
        x[0] = var0.sqrt();
        let a = (-g * hf).exp();
        let win = (0.5 / hf).sqrt();
        for k in 0..m {
            let mut row = DVector::<f64>::zeros(cols);
            row[1 + k] = win;
            // average of X over the fine step, input held constant
            let gain = if g > 0.0 { (1.0 - a) / (g * hf) } else { 1.0 };
            let forced = if g > 0.0 {
                d * win * (1.0 - gain) / g
            } else {
                d * win * hf / 2.0
            };
            row += &x * (c * gain);
            row[1 + k] += c * forced;
            let r = k / sub;
            for j in 0..cols {
                rows[(r, j)] += row[j] / sub as f64;
            }
            x *= a;
            x[1 + k] += if g > 0.0 { d * win * (1.0 - a) / g } else { d * win * hf };
            if gd > 0.0 {
                x[1 + m + k] += (gd * (1.0 - a * a) / (2.0 * g)).sqrt();
            }
        }
        &rows * rows.transpose() * 2.0
    }

    #[test]
    fn propagation_matches_fine_grid_oracle() {
        let p = SwapParams::new(1.0 / 5.7e-3, (1.0f64 / 6.3).sqrt(), 1.2e-3)
            .unwrap()
            .with_decoherence(1.0 / 12e-3)
            .unwrap();
        let acq = AcquisitionConfig {
            sample_rate_hz: 10_000.0,
            pulse_duration_s: 1.2e-3,
            detection_bandwidth_hz: 4_999.0,
            n_cycles: 2,
            ..Default::default()
        };
        let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz).unwrap();
        let pad = detector.pad();
        let h = acq.dt() / detector.oversample() as f64;
        let mut acq_nf = acq.clone();
        acq_nf.detection_efficiency = 1.0;
        let (c, d) = channel_couplings(&p, Quadrature::P);
        let g = p.gamma_sw + p.gamma_dec;
        let n = acq.n_samples() * detector.oversample();
        let coarse = fine_grid_cov(c, d, g, p.gamma_dec, 0.5, h, n, 32);
        let fine = fine_grid_cov(c, d, g, p.gamma_dec, 0.5, h, n, 64);
        let oracle_raw = &fine * 2.0 - &coarse;
        let mut padded = DMatrix::<f64>::identity(n + 2 * pad, n + 2 * pad) / h;
        padded.view_mut((pad, pad), (n, n)).copy_from(&oracle_raw);
        let hm = detector.matrix(acq.n_samples());
        let oracle = &hm * padded * hm.transpose();
        let got = analytic_moments(&p, &acq_nf, &InitialAtoms::Css, Quadrature::P, 0)
            .unwrap()
            .cov;
        // Compare the atom-induced part against its own scale, not the shot-noise floor.
        let floor = analytic_reference_covariance(&acq_nf).unwrap();
        let atomic = &oracle - &floor;
        let scale = atomic.abs().max();
        assert!(scale > 1.0);
        for i in 0..acq.n_samples() {
            for j in 0..acq.n_samples() {
                assert!(
                    (got[(i, j)] - oracle[(i, j)]).abs() < 1e-4 * scale,
                    "({i},{j}) {} vs {}",
                    got[(i, j)],
                    oracle[(i, j)]
                );
            }
        }
    }

    #[test]
    fn reference_covariance_matches_decoupled_moments() {
        let acq = AcquisitionConfig::default();
        let f = analytic_reference_covariance(&acq).unwrap();
        let idle = SwapParams::new(1e-9, 0.4, 0.015).unwrap();
        let m = analytic_moments(&idle, &acq, &InitialAtoms::Css, Quadrature::P, 0).unwrap();
        let rel = (&f - &m.cov).abs().max() / f.abs().max();
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn mean_follows_exponential_decay() {
        let p = SwapParams::operating_point();
        let acq = AcquisitionConfig::default();
        let init = InitialAtoms::Displaced { x: 3.0, p: 3.0 };
        let m = analytic_moments(&p, &acq, &init, Quadrature::P, 0).unwrap();
        let r = m.mean[120] / m.mean[60];
        assert_relative_eq!(r, (-p.gamma_sw * 60.0 * acq.dt()).exp(), max_relative = 1e-9);
    }
}
