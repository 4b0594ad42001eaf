use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{Channel, CovarianceOptions};
use crate::error::{Error, Result};
use crate::homodyne::RecordEnsemble;

const CHUNK: usize = 512;

/// Shot-noise-normalized two-time covariance of binned records.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Covariance in normalized coordinates; vacuum gives the identity when whitened.
    pub c: DMatrix<f64>,
    /// Analysis bin width, s.
    pub dt: f64,
    pub n_cycles: usize,
    pub channel: Channel,
    /// Reference covariance of the binned records, times `dt` (identity for unfiltered
    /// shot noise).
    pub shot_floor: DMatrix<f64>,
    /// Maps a raw record to normalized coordinates: `z = transform * record`.
    pub transform: DMatrix<f64>,
    pub options: CovarianceOptions,
    /// Condition number of `shot_floor`.
    pub floor_condition: f64,
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// Centre time of each analysis bin.
    pub fn times(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| (j as f64 + 0.5) * self.dt).collect()
    }

    /// Normalized coordinates of one record channel.
    pub fn normalize(&self, samples: &[f64]) -> DVector<f64> {
        &self.transform * DVector::from_column_slice(samples)
    }

    /// Builds an estimate from known signal and reference covariances of the raw
    /// records, as if from infinitely many cycles.
    pub fn from_population(
        signal: &DMatrix<f64>,
        reference: &DMatrix<f64>,
        sample_dt: f64,
        options: CovarianceOptions,
    ) -> Result<Self> {
        if signal.shape() != reference.shape() {
            return Err(Error::DimensionMismatch {
                expected: reference.nrows(),
                found: signal.nrows(),
            });
        }
        let (transform, floor, cond, dt) =
            normalizer(reference, signal.nrows(), sample_dt, options)?;
        let c = &transform * signal * transform.transpose();
        Ok(Self {
            c: symmetrize(c),
            dt,
            n_cycles: usize::MAX,
            channel: Channel::Combined,
            shot_floor: floor,
            transform,
            options,
            floor_condition: cond,
        })
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn binning_matrix(n: usize, bin: usize) -> DMatrix<f64> {
    let k = n / bin;
    let mut b = DMatrix::zeros(k, n);
    for j in 0..k {
        for i in 0..bin {
            b[(j, j * bin + i)] = 1.0 / bin as f64;
        }
    }
    b
}

/// Returns `(transform, floor, condition, dt_bin)` where `transform = T B` maps raw
/// records to normalized coordinates.
fn normalizer(
    reference_cov: &DMatrix<f64>,
    n: usize,
    sample_dt: f64,
    options: CovarianceOptions,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64, f64)> {
    if options.bin == 0 || options.bin > n / 2 {
        return Err(Error::invalid(
            "bin",
            format!("must lie in 1..={} for {n}-sample records", n / 2),
        ));
    }
    let dt = sample_dt * options.bin as f64;
    let b = binning_matrix(n, options.bin);
    let floor = symmetrize(&b * reference_cov * b.transpose() * dt);
    let eig = SymmetricEigen::new(floor.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::NonFinite {
            context: "reference covariance",
        });
    }
    let cond = max / min.max(f64::MIN_POSITIVE);
    let t = if options.whitening {
        let inv_sqrt = eig
            .eigenvalues
            .map(|l| l.max(1e-12 * max).sqrt().recip());
        let v = &eig.eigenvectors;
        v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose() * dt.sqrt()
    } else {
        let mean_diag = floor.diagonal().mean();
        DMatrix::identity(b.nrows(), b.nrows()) * (dt / mean_diag).sqrt()
    };
    Ok((&t * &b, floor, cond, dt))
}

/// Per-channel column means and centred scatter matrix, reduced over fixed chunks.
fn scatter(ens: &RecordEnsemble, channel: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = ens.n_samples();
    let k = ens.len() as f64;
    let sum = ens
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = DVector::<f64>::zeros(n);
            for r in chunk {
                s += DVector::from_column_slice(r.channel(channel));
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(DVector::zeros(n), |a, b| a + b);
    let mean = sum / k;
    if mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "record samples",
        });
    }
    let parts: Vec<DMatrix<f64>> = ens
        .records
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut x = DMatrix::<f64>::zeros(n, chunk.len());
            for (j, r) in chunk.iter().enumerate() {
                let col = DVector::from_column_slice(r.channel(channel)) - &mean;
                x.set_column(j, &col);
            }
            &x * x.transpose()
        })
        .collect();
    let s = parts.into_iter().fold(DMatrix::zeros(n, n), |a, b| a + b);
    Ok((mean, s))
}

/// Unbiased sample covariance of the raw records (both channels of the reference are
/// always pooled).
pub(crate) fn raw_covariance(ens: &RecordEnsemble, channel: Channel) -> Result<DMatrix<f64>> {
    let idx = channel.indices();
    let n = ens.n_samples();
    let mut total = DMatrix::<f64>::zeros(n, n);
    for &ch in idx {
        total += scatter(ens, ch)?.1;
    }
    Ok(symmetrize(total / (idx.len() * (ens.len() - 1)) as f64))
}

/// Averages a covariance along its diagonals. The shot-noise reference is stationary,
/// so this removes most of its sampling noise before it is used for whitening.
pub(crate) fn toeplitz_average(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let lags: Vec<f64> = (0..n)
        .map(|l| (0..n - l).map(|i| c[(i, i + l)]).sum::<f64>() / (n - l) as f64)
        .collect();
    DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)])
}

/// Sample covariance of `channel`, binned and normalized to the reference's shot noise.
pub fn estimate_covariance(
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
    channel: Channel,
    options: CovarianceOptions,
) -> Result<CovarianceEstimate> {
    for ens in [records, reference] {
        if ens.len() < 2 {
            return Err(Error::InsufficientCycles {
                required: 2,
                found: ens.len(),
            });
        }
    }
    records.acquisition.check_compatible(&reference.acquisition)?;
    let n = records.n_samples();
    let s = raw_covariance(records, channel)?;
    let f = toeplitz_average(&raw_covariance(reference, Channel::Combined)?);
    let (transform, floor, cond, dt) = normalizer(&f, n, records.dt(), options)?;
    let c = symmetrize(&transform * s * transform.transpose());
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "covariance estimate",
        });
    }
    Ok(CovarianceEstimate {
        c,
        dt,
        n_cycles: records.len(),
        channel,
        shot_floor: floor,
        transform,
        options,
        floor_condition: cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::{shot_noise_reference, AcquisitionConfig, HomodyneRecord};

    fn reference(cycles: usize) -> RecordEnsemble {
        let acq = AcquisitionConfig {
            shot_noise_ref_cycles: cycles,
            rng_seed: 5,
            ..Default::default()
        };
        shot_noise_reference(&acq).unwrap()
    }

    #[test]
    fn reference_against_itself_has_unit_diagonal() {
        let r = reference(400);
        for whitening in [true, false] {
            let opts = CovarianceOptions { bin: 6, whitening };
            let est = estimate_covariance(&r, &r, Channel::Combined, opts).unwrap();
            let d = est.c.diagonal();
            assert!((d.mean() - 1.0).abs() < 0.02, "{}", d.mean());
            if whitening {
                let id = DMatrix::<f64>::identity(est.dim(), est.dim());
                assert!((&est.c - id).abs().max() < 0.2);
            }
        }
    }

    #[test]
    fn constant_records_have_zero_covariance() {
        let r = reference(10);
        let mut flat = r.clone();
        for rec in &mut flat.records {
            *rec = HomodyneRecord {
                pc: vec![2.5; rec.pc.len()],
                ps: vec![-1.0; rec.ps.len()],
                ..rec.clone()
            };
        }
        let est =
            estimate_covariance(&flat, &r, Channel::Cosine, CovarianceOptions::default()).unwrap();
        assert!(est.c.abs().max() < 1e-20);
    }

    #[test]
    fn too_few_cycles_rejected() {
        let r = reference(10);
        let one = r.select(&[0]);
        assert!(matches!(
            estimate_covariance(&one, &r, Channel::Cosine, CovarianceOptions::default()),
            Err(Error::InsufficientCycles { .. })
        ));
    }

    #[test]
    fn toeplitz_average_keeps_stationary_matrices() {
        let m = DMatrix::from_fn(5, 5, |i, j| 0.5f64.powi(i.abs_diff(j) as i32));
        assert_eq!(toeplitz_average(&m), m);
    }

    #[test]
    fn binning_preserves_constants() {
        let b = binning_matrix(188, 6);
        assert_eq!(b.shape(), (31, 188));
        let ones = DVector::from_element(188, 1.0);
        assert!((b * ones).iter().all(|v| (v - 1.0).abs() < 1e-15));
    }
}
