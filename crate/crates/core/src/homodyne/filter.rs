use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Filter standard deviation, in internal samples, below which the detection chain
/// oversamples.
pub const MIN_FILTER_SIGMA_SAMPLES: f64 = 2.5;

/// Zero-phase FIR low-pass with a Gaussian magnitude response.
///
/// The power response falls to 1/2 at the bandwidth `B`, so the Gaussian frequency
/// width is `B / sqrt(ln 2)`. Taps extend to five time-domain standard deviations and
/// are normalized to unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFir {
    taps: Vec<f64>,
    half: usize,
    sample_rate: f64,
}

impl GaussianFir {
    pub fn new(bandwidth_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz < sample_rate_hz / 2.0) {
            return Err(Error::invalid(
                "detection_bandwidth_hz",
                "must lie between 0 and the Nyquist frequency",
            ));
        }
        let sigma_f = bandwidth_hz / 2f64.ln().sqrt();
        let sigma_n = sample_rate_hz / (2.0 * PI * sigma_f);
        let half = (5.0 * sigma_n).ceil() as usize;
        let mut taps: Vec<f64> = (-(half as i64)..=half as i64)
            .map(|n| (-(n * n) as f64 / (2.0 * sigma_n * sigma_n)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        Ok(Self {
            taps,
            half,
            sample_rate: sample_rate_hz,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Number of taps on either side of the centre.
    pub fn half_width(&self) -> usize {
        self.half
    }

    /// Filters a record padded by `half_width()` samples on both sides; returns the
    /// unpadded length.
    pub fn apply(&self, padded: &[f64]) -> Vec<f64> {
        let n = padded.len().saturating_sub(2 * self.half);
        (0..n)
            .map(|i| {
                self.taps
                    .iter()
                    .zip(&padded[i..i + self.taps.len()])
                    .map(|(t, x)| t * x)
                    .sum()
            })
            .collect()
    }

    /// Power response `|H(f)|^2` of the actual taps.
    pub fn power_response(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate;
        // Taps are symmetric, so the response is real.
        let h: f64 = self
            .taps
            .iter()
            .enumerate()
            .map(|(k, t)| t * (w * (k as f64 - self.half as f64)).cos())
            .sum();
        h * h
    }
}

/// Detection chain: the Gaussian low-pass acts on an internal grid `oversample`
/// times finer than the record, and each recorded sample averages `oversample`
/// filtered values like an integrating ADC. The chain then approximates one fixed
/// analog filter whatever the sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    fir: GaussianFir,
    oversample: usize,
}

impl Detector {
    pub fn new(bandwidth_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0 && bandwidth_hz < sample_rate_hz / 2.0) {
            return Err(Error::invalid(
                "detection_bandwidth_hz",
                "must lie between 0 and the Nyquist frequency",
            ));
        }
        let sigma_n = sample_rate_hz * 2f64.ln().sqrt() / (2.0 * PI * bandwidth_hz);
        let oversample = ((MIN_FILTER_SIGMA_SAMPLES / sigma_n).ceil() as usize).max(1);
        Ok(Self {
            fir: GaussianFir::new(bandwidth_hz, sample_rate_hz * oversample as f64)?,
            oversample,
        })
    }

    pub fn fir(&self) -> &GaussianFir {
        &self.fir
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    /// Internal samples of padding needed on each side of the pulse.
    pub fn pad(&self) -> usize {
        self.fir.half_width()
    }

    /// Record samples at each end that the filter mixes with the vacuum padding.
    pub fn edge_samples(&self) -> usize {
        self.pad().div_ceil(self.oversample)
    }

    /// Internal samples for an `n`-sample record, padding included.
    pub fn raw_len(&self, n: usize) -> usize {
        n * self.oversample + 2 * self.pad()
    }

    /// Filters and decimates a padded internal record.
    pub fn apply(&self, padded: &[f64]) -> Vec<f64> {
        let m = self.oversample;
        self.fir
            .apply(padded)
            .chunks_exact(m)
            .map(|c| c.iter().sum::<f64>() / m as f64)
            .collect()
    }

    /// Power response of the whole chain at `freq_hz`, ignoring aliasing of the
    /// filter tails.
    pub fn power_response(&self, freq_hz: f64) -> f64 {
        let m = self.oversample as f64;
        let x = PI * freq_hz / self.fir.sample_rate;
        let adc = if x.sin().abs() < 1e-300 {
            1.0
        } else {
            ((m * x).sin() / (m * x.sin())).powi(2)
        };
        self.fir.power_response(freq_hz) * adc
    }

    /// Linear map from a padded internal record to the `n` recorded samples.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let m = self.oversample;
        let taps = self.fir.taps();
        let mut h = DMatrix::zeros(n, self.raw_len(n));
        for i in 0..n {
            for s in 0..m {
                for (k, t) in taps.iter().enumerate() {
                    h[(i, i * m + s + k)] += t / m as f64;
                }
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_power_at_bandwidth() {
        for b in [600.0, 2500.0] {
            let f = GaussianFir::new(b, 12_500.0).unwrap();
            assert_relative_eq!(f.power_response(0.0), 1.0, epsilon = 1e-12);
            assert!((f.power_response(b) - 0.5).abs() < 0.01, "{}", f.power_response(b));
        }
    }

    #[test]
    fn taps_symmetric_and_normalized() {
        let f = GaussianFir::new(600.0, 12_500.0).unwrap();
        let t = f.taps();
        assert_eq!(t.len(), 2 * f.half_width() + 1);
        assert_relative_eq!(t.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        for i in 0..t.len() {
            assert_eq!(t[i], t[t.len() - 1 - i]);
        }
    }

    #[test]
    fn constant_passes_unchanged() {
        let f = GaussianFir::new(2500.0, 12_500.0).unwrap();
        let out = f.apply(&vec![3.0; 40]);
        assert_eq!(out.len(), 40 - 2 * f.half_width());
        for v in out {
            assert_relative_eq!(v, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detector_resolves_the_filter() {
        let d = Detector::new(2500.0, 12_500.0).unwrap();
        assert_eq!(d.oversample(), 4);
        let d2 = Detector::new(2500.0, 25_000.0).unwrap();
        assert_eq!(d2.oversample(), 2);
        assert_eq!(d.fir(), d2.fir());
        assert_eq!(Detector::new(600.0, 12_500.0).unwrap().oversample(), 1);
    }

    #[test]
    fn detector_matrix_matches_apply() {
        let d = Detector::new(2500.0, 12_500.0).unwrap();
        let n = 7;
        let x: Vec<f64> = (0..d.raw_len(n)).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let direct = d.apply(&x);
        let via = d.matrix(n) * nalgebra::DVector::from_vec(x);
        assert_eq!(direct.len(), n);
        for (a, b) in direct.iter().zip(via.iter()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
    }
}
