//! Resampling error bars and held-out mode variances.
//!
//! The most squeezed eigenvalue of a sample covariance is biased low because the
//! eigenvector is fitted to the same noise it is scored on. Held-out variances use
//! modes found on one half of the cycles and evaluate them on the other half.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::covariance::estimate_covariance;
use super::kl::{kl_decompose, sorted_eigen};
use super::{Channel, CovarianceEstimate, CovarianceOptions, ModeSpectrum};
use crate::error::{Error, Result};
use crate::homodyne::{cycle_rng, RecordEnsemble, RngDomain};

/// Percentile intervals and spreads of bootstrapped eigenvalues (ascending order).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapIntervals {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub std: Vec<f64>,
    pub resamples: usize,
}

/// Normalized coordinates of every cycle of one channel, one row per cycle.
fn normalized_rows(records: &RecordEnsemble, est: &CovarianceEstimate, ch: usize) -> DMatrix<f64> {
    let k = est.dim();
    let rows: Vec<Vec<f64>> = records
        .records
        .par_iter()
        .map(|r| est.normalize(r.channel(ch)).iter().copied().collect())
        .collect();
    DMatrix::from_fn(records.len(), k, |i, j| rows[i][j])
}

fn gather(z: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), z.ncols(), |i, j| z[(idx[i], j)])
}

/// Centred scatter `X^T X` of the rows.
fn scatter(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for j in 0..c.ncols() {
        let m = c.column(j).mean();
        c.column_mut(j).add_scalar_mut(-m);
    }
    c.transpose() * &c
}

/// Unbiased per-column variances.
fn column_variances(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols())
        .map(|j| {
            let col = x.column(j);
            let m = col.mean();
            col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
        })
        .collect()
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn resample_indices(seed: u64, draw: u64, n: usize) -> Vec<usize> {
    let mut rng = cycle_rng(seed, RngDomain::Bootstrap, draw);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Bootstrap over cycles of the eigenvalues of `est` (95% percentile intervals).
pub fn bootstrap_intervals(
    records: &RecordEnsemble,
    est: &CovarianceEstimate,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapIntervals> {
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least 2"));
    }
    if records.len() < 2 {
        return Err(Error::InsufficientCycles {
            required: 2,
            found: records.len(),
        });
    }
    let chans = est.channel.indices();
    let zs: Vec<DMatrix<f64>> = chans.iter().map(|&c| normalized_rows(records, est, c)).collect();
    let n = records.len();
    let draws: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let idx = resample_indices(seed, b, n);
            let mut s = DMatrix::zeros(est.dim(), est.dim());
            for z in &zs {
                s += scatter(&gather(z, &idx));
            }
            let c = s / (chans.len() * (n - 1)) as f64;
            sorted_eigen(&((&c + c.transpose()) * 0.5)).0
        })
        .collect();
    let k = est.dim();
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut std = Vec::with_capacity(k);
    for m in 0..k {
        let mut v: Vec<f64> = draws.iter().map(|d| d[m]).collect();
        v.sort_by(f64::total_cmp);
        lower.push(percentile(&v, 0.025));
        upper.push(percentile(&v, 0.975));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        std.push((v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt());
    }
    Ok(BootstrapIntervals {
        lower,
        upper,
        std,
        resamples,
    })
}

/// Spectra whose variances are scored on held-out cycles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossFit {
    pub cosine: ModeSpectrum,
    pub sine: ModeSpectrum,
    pub combined: ModeSpectrum,
    /// Ordinary decomposition of all cycles, channels pooled.
    pub in_sample: ModeSpectrum,
}

struct Fold {
    /// Projections of test cycles on the train modes, per channel.
    proj: [DMatrix<f64>; 2],
}

/// Two-fold cross-fit: modes from the pooled channels of even cycles are scored on odd
/// cycles and vice versa; the two scores are averaged. Errors come from `resamples`
/// bootstrap draws of the test cycles. Reported mode functions are those of the
/// full in-sample decomposition.
pub fn cross_fit(
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
    options: CovarianceOptions,
    resamples: usize,
    seed: u64,
) -> Result<CrossFit> {
    if records.len() < 8 {
        return Err(Error::InsufficientCycles {
            required: 8,
            found: records.len(),
        });
    }
    if resamples < 2 {
        return Err(Error::invalid("resamples", "need at least 2"));
    }
    let est = estimate_covariance(records, reference, Channel::Combined, options)?;
    let in_sample = kl_decompose(&est)?;
    let z = [
        normalized_rows(records, &est, 0),
        normalized_rows(records, &est, 1),
    ];
    let even: Vec<usize> = (0..records.len()).step_by(2).collect();
    let odd: Vec<usize> = (1..records.len()).step_by(2).collect();
    let folds: Vec<Fold> = [(&even, &odd), (&odd, &even)]
        .iter()
        .map(|(train, test)| {
            let s = scatter(&gather(&z[0], train)) + scatter(&gather(&z[1], train));
            let c = s / (2 * (train.len() - 1)) as f64;
            let (_, v, _) = sorted_eigen(&((&c + c.transpose()) * 0.5));
            Fold {
                proj: [gather(&z[0], test) * &v, gather(&z[1], test) * &v],
            }
        })
        .collect();

    let score = |idx: Option<&[Vec<usize>]>| -> [Vec<f64>; 2] {
        let mut out = [vec![0.0; est.dim()], vec![0.0; est.dim()]];
        for (f, fold) in folds.iter().enumerate() {
            for ch in 0..2 {
                let p = match idx {
                    Some(i) => gather(&fold.proj[ch], &i[f]),
                    None => fold.proj[ch].clone(),
                };
                for (o, v) in out[ch].iter_mut().zip(column_variances(&p)) {
                    *o += v / folds.len() as f64;
                }
            }
        }
        out
    };
    let point = score(None);
    let draws: Vec<[Vec<f64>; 2]> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let idx: Vec<Vec<usize>> = folds
                .iter()
                .enumerate()
                .map(|(f, fold)| {
                    resample_indices(seed, b * 2 + f as u64, fold.proj[0].nrows())
                })
                .collect();
            score(Some(&idx))
        })
        .collect();
    let spread = |pick: &dyn Fn(&[Vec<f64>; 2], usize) -> f64| -> Vec<f64> {
        (0..est.dim())
            .map(|m| {
                let v: Vec<f64> = draws.iter().map(|d| pick(d, m)).collect();
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            })
            .collect()
    };
    let make = |channel: Channel, variances: Vec<f64>, errors: Vec<f64>| ModeSpectrum {
        channel,
        variances,
        errors,
        modes: in_sample.modes.clone(),
        n_cycles: records.len(),
        whitened: options.whitening,
        held_out: true,
        clamped: 0,
    };
    let combined: Vec<f64> = (0..est.dim())
        .map(|m| 0.5 * (point[0][m] + point[1][m]))
        .collect();
    Ok(CrossFit {
        cosine: make(Channel::Cosine, point[0].clone(), spread(&|d, m| d[0][m])),
        sine: make(Channel::Sine, point[1].clone(), spread(&|d, m| d[1][m])),
        combined: make(
            Channel::Combined,
            combined,
            spread(&|d, m| 0.5 * (d[0][m] + d[1][m])),
        ),
        in_sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::{shot_noise_reference, AcquisitionConfig};

    #[test]
    fn vacuum_cross_fit_is_unbiased() {
        let acq = AcquisitionConfig {
            shot_noise_ref_cycles: 2000,
            rng_seed: 21,
            ..Default::default()
        };
        let r = shot_noise_reference(&acq).unwrap();
        let acq2 = acq.clone().with_seed(22);
        let s = shot_noise_reference(&acq2).unwrap();
        let cf = cross_fit(&s, &r, CovarianceOptions::default(), 50, 1).unwrap();
        // In-sample leading eigenvalue sits well below 1 from sampling alone.
        assert!(cf.in_sample.variances[0] < 0.9);
        let v = cf.combined.variances[0];
        assert!((v - 1.0).abs() < 4.0 * cf.combined.errors[0], "{v}");
    }

    #[test]
    fn bootstrap_is_seed_deterministic() {
        let acq = AcquisitionConfig {
            shot_noise_ref_cycles: 200,
            ..Default::default()
        };
        let r = shot_noise_reference(&acq).unwrap();
        let est = estimate_covariance(&r, &r, Channel::Cosine, CovarianceOptions::default())
            .unwrap();
        let a = bootstrap_intervals(&r, &est, 20, 9).unwrap();
        let b = bootstrap_intervals(&r, &est, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.lower.iter().zip(&a.upper).all(|(l, u)| l <= u));
    }
}
