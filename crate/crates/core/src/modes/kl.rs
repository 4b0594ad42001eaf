use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{to_db, Channel, CovarianceEstimate};
use crate::error::{Error, Result};
use crate::gaussian::{check_symmetric, SYMMETRY_TOL};
use crate::interaction::ModeFunction;

/// Eigenvalues with magnitude below this are set to zero.
pub const CLAMP_BELOW: f64 = 1e-10;

/// Mode variances (ratios to shot noise) and mode functions, most squeezed first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub channel: Channel,
    pub variances: Vec<f64>,
    /// One standard error of each variance.
    pub errors: Vec<f64>,
    /// Modes on the analysis grid with `sum u^2 dt = 1`, sign chosen so the largest
    /// sample is positive.
    pub modes: Vec<ModeFunction>,
    pub n_cycles: usize,
    pub whitened: bool,
    /// Whether variances come from cycles not used to find the modes.
    pub held_out: bool,
    /// Number of eigenvalues clamped to zero.
    pub clamped: usize,
}

impl ModeSpectrum {
    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn db(&self) -> Vec<f64> {
        self.variances.iter().map(|&v| to_db(v)).collect()
    }

    /// Indices of modes whose variance lies below shot noise by more than `k` errors.
    pub fn significant_below_shot_noise(&self, k: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.variances[i] + k * self.errors[i] < 1.0)
            .collect()
    }

    /// Spectrum in descending eigenvalue order.
    pub fn descending(&self) -> Vec<f64> {
        let mut v = self.variances.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// Eigendecomposition sorted ascending, modes sign-aligned. Returns
/// `(eigenvalues, eigenvector columns, clamped)`.
pub(crate) fn sorted_eigen(c: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>, usize) {
    let eig = SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..c.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = Vec::with_capacity(order.len());
    let mut vecs = DMatrix::zeros(c.nrows(), c.ncols());
    let mut clamped = 0;
    for (j, &i) in order.iter().enumerate() {
        let mut l = eig.eigenvalues[i];
        if l.abs() < CLAMP_BELOW {
            l = 0.0;
            clamped += 1;
        }
        vals.push(l);
        let mut col = eig.eigenvectors.column(i).into_owned();
        let peak = col.iamax();
        if col[peak] < 0.0 {
            col = -col;
        }
        vecs.set_column(j, &col);
    }
    (vals, vecs, clamped)
}

pub(crate) fn check_matrix(c: &DMatrix<f64>) -> Result<()> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "covariance matrix",
        });
    }
    check_symmetric(c, SYMMETRY_TOL)
}

pub(crate) fn effective_cycles(est: &CovarianceEstimate) -> usize {
    let per = est.channel.indices().len();
    est.n_cycles.saturating_mul(per)
}

/// Karhunen-Loève decomposition `C(t, t') = sum_n xi_n u_n(t) u_n(t')`.
///
/// Standard errors assume Gaussian data: `xi_n sqrt(2 / (n - 1))`.
pub fn kl_decompose(est: &CovarianceEstimate) -> Result<ModeSpectrum> {
    check_matrix(&est.c)?;
    let (vals, vecs, clamped) = sorted_eigen(&est.c);
    let scale = est.dt.sqrt().recip();
    let modes = (0..vals.len())
        .map(|j| ModeFunction {
            samples: vecs.column(j).iter().map(|v| v * scale).collect(),
            dt: est.dt,
            start: 0.5 * est.dt,
            normalized: true,
        })
        .collect();
    let n = effective_cycles(est);
    let rel = if n > 1 && n < usize::MAX {
        (2.0 / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ModeSpectrum {
        channel: est.channel,
        errors: vals.iter().map(|v| v * rel).collect(),
        variances: vals,
        modes,
        n_cycles: est.n_cycles,
        whitened: est.options.whitening,
        held_out: false,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::CovarianceOptions;
    use approx::assert_relative_eq;

    fn estimate(c: DMatrix<f64>, dt: f64) -> CovarianceEstimate {
        let n = c.nrows();
        CovarianceEstimate {
            c,
            dt,
            n_cycles: 1000,
            channel: Channel::Cosine,
            shot_floor: DMatrix::identity(n, n),
            transform: DMatrix::identity(n, n),
            options: CovarianceOptions::default(),
            floor_condition: 1.0,
        }
    }

    #[test]
    fn identity_gives_shot_noise() {
        let s = kl_decompose(&estimate(DMatrix::identity(12, 12), 1e-3)).unwrap();
        for (v, d) in s.variances.iter().zip(s.db()) {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-12);
            assert!(d.abs() < 1e-10);
        }
    }

    #[test]
    fn planted_rank_one() {
        let n = 40;
        let dt = 5e-4;
        let u = ModeFunction::exponential(175.0, dt, n).unwrap();
        let v = nalgebra::DVector::from_iterator(n, u.samples.iter().map(|x| x * dt.sqrt()));
        let xi1 = 0.16;
        let c = DMatrix::identity(n, n) + &v * v.transpose() * (xi1 - 1.0);
        let s = kl_decompose(&estimate(c, dt)).unwrap();
        assert!((s.variances[0] - xi1).abs() < 1e-6);
        let ov = s.modes[0].overlap(&u).unwrap();
        assert!(ov * ov > 0.9999);
    }

    #[test]
    fn rejects_asymmetric_and_nan() {
        let mut c = DMatrix::<f64>::identity(4, 4);
        c[(0, 1)] = 0.1;
        assert!(matches!(
            kl_decompose(&estimate(c.clone(), 1.0)),
            Err(Error::NotSymmetric { .. })
        ));
        c[(0, 1)] = f64::NAN;
        assert!(kl_decompose(&estimate(c, 1.0)).is_err());
    }

    #[test]
    fn tiny_eigenvalues_clamped() {
        let mut c = DMatrix::<f64>::identity(3, 3);
        c[(2, 2)] = 1e-13;
        let s = kl_decompose(&estimate(c, 1.0)).unwrap();
        assert_eq!(s.clamped, 1);
        assert_eq!(s.variances[0], 0.0);
    }
}
