use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use super::RecordEnsemble;
use crate::error::{Error, Result};

const CHUNK: usize = 256;

/// Cycle-averaged power of `pc^2 + ps^2` relative to the shot-noise reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpectrum {
    /// Offset from the Larmor frequency, ascending.
    pub offsets_hz: Vec<f64>,
    pub signal: Vec<f64>,
    pub reference: Vec<f64>,
}

impl PowerSpectrum {
    pub fn ratio(&self) -> Vec<f64> {
        self.signal
            .iter()
            .zip(&self.reference)
            .map(|(s, r)| s / r)
            .collect()
    }

    pub fn db(&self) -> Vec<f64> {
        self.ratio().iter().map(|r| 10.0 * r.log10()).collect()
    }

    /// Value at the bin closest to zero offset.
    pub fn at_zero(&self) -> (f64, f64) {
        let i = self
            .offsets_hz
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        (self.offsets_hz[i], self.signal[i] / self.reference[i])
    }
}

/// Frequencies of FFT bins, in FFT order.
fn bin_frequencies(n_fft: usize, sample_rate: f64) -> Vec<f64> {
    (0..n_fft)
        .map(|k| {
            let k = if k <= (n_fft - 1) / 2 { k as i64 } else { k as i64 - n_fft as i64 };
            k as f64 * sample_rate / n_fft as f64
        })
        .collect()
}

fn shifted_order(freqs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..freqs.len()).collect();
    idx.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]));
    idx
}

/// Mean periodogram of both channels, summed, in FFT order.
fn mean_periodogram(ens: &RecordEnsemble, n_fft: usize) -> Vec<f64> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let n = ens.n_samples();
    let norm = ens.dt() / n as f64;
    let chunk_sums: Vec<Vec<f64>> = ens
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; n_fft];
            let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
            for rec in chunk {
                for ch in [&rec.pc, &rec.ps] {
                    buf.iter_mut().for_each(|b| *b = Complex::new(0.0, 0.0));
                    for (b, v) in buf.iter_mut().zip(ch.iter()) {
                        b.re = *v;
                    }
                    fft.process(&mut buf);
                    for (a, b) in acc.iter_mut().zip(&buf) {
                        *a += b.norm_sqr() * norm;
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n_fft];
    for c in chunk_sums {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    let k = ens.len() as f64;
    total.iter_mut().for_each(|t| *t /= k);
    total
}

/// Averaged rectangular-window periodogram of `pc^2 + ps^2`, normalized by the
/// reference's. `n_fft` defaults to the record length (no zero padding).
pub fn power_spectrum(
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
    n_fft: Option<usize>,
) -> Result<PowerSpectrum> {
    if records.len() < 2 || reference.len() < 2 {
        return Err(Error::InsufficientCycles {
            required: 2,
            found: records.len().min(reference.len()),
        });
    }
    records.acquisition.check_compatible(&reference.acquisition)?;
    let n_fft = n_fft.unwrap_or(records.n_samples());
    if n_fft < records.n_samples() {
        return Err(Error::invalid("n_fft", "shorter than the record"));
    }
    let sig = mean_periodogram(records, n_fft);
    let refp = mean_periodogram(reference, n_fft);
    let freqs = bin_frequencies(n_fft, records.acquisition.sample_rate_hz);
    let order = shifted_order(&freqs);
    Ok(PowerSpectrum {
        offsets_hz: order.iter().map(|&i| freqs[i]).collect(),
        signal: order.iter().map(|&i| sig[i]).collect(),
        reference: order.iter().map(|&i| refp[i]).collect(),
    })
}

/// Expected periodogram `E|sum_k x_k e^{-i w k}|^2 dt / n` of a Gaussian record with
/// the given moments, at ascending offsets matching [`power_spectrum`].
pub fn expected_periodogram(
    cov: &DMatrix<f64>,
    mean: &DVector<f64>,
    dt: f64,
    n_fft: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n = cov.nrows();
    let freqs = bin_frequencies(n_fft, 1.0 / dt);
    let order = shifted_order(&freqs);
    let values = order
        .iter()
        .map(|&i| {
            let w = 2.0 * PI * freqs[i] * dt;
            let (cs, sn): (Vec<f64>, Vec<f64>) =
                (0..n).map(|k| ((w * k as f64).cos(), (w * k as f64).sin())).unzip();
            let cv = DVector::from_vec(cs);
            let sv = DVector::from_vec(sn);
            let quad = cv.dot(&(cov * &cv)) + sv.dot(&(cov * &sv));
            let m = cv.dot(mean).powi(2) + sv.dot(mean).powi(2);
            (quad + m) * dt / n as f64
        })
        .collect();
    (order.iter().map(|&i| freqs[i]).collect(), values)
}
