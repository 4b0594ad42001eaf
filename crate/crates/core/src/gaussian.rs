//! Gaussian-state algebra over quadrature pairs.
//!
//! Every state and map uses the global ordering `(X1, P1, X2, P2, ...)` and the
//! convention `[X, P] = i`, so the vacuum variance is 1/2 per quadrature. Reported
//! squeezing figures elsewhere in the crate are always ratios to that vacuum level.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum variance of a single quadrature.
pub const VACUUM_VARIANCE: f64 = 0.5;
/// Entrywise tolerance on `S^T Omega S = Omega`.
pub const SYMPLECTIC_TOL: f64 = 1e-10;
/// Relative tolerance on covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack on the symplectic-eigenvalue floor of 1/2.
pub const HEISENBERG_TOL: f64 = 1e-9;

/// Standard symplectic form for `modes` quadrature pairs.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Mean vector and covariance matrix of a multimode Gaussian state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    labels: Vec<String>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, checking dimensions, symmetry and the uncertainty bound.
    pub fn new(labels: Vec<String>, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = 2 * labels.len();
        if labels.is_empty() {
            return Err(Error::invalid("labels", "at least one mode is required"));
        }
        if mean.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: mean.len(),
            });
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: cov.nrows().max(cov.ncols()),
            });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "Gaussian state",
            });
        }
        check_symmetric(&cov, SYMMETRY_TOL)?;
        let nu = symplectic_spectrum(&cov)?;
        let smallest = nu.iter().copied().fold(f64::INFINITY, f64::min);
        if smallest < VACUUM_VARIANCE - HEISENBERG_TOL {
            return Err(Error::Unphysical { smallest });
        }
        Ok(Self { labels, mean, cov })
    }

    /// Vacuum over `modes` modes labelled `mode0`, `mode1`, ...
    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::invalid("modes", "vacuum needs at least one mode"));
        }
        let labels = (0..modes).map(|k| format!("mode{k}")).collect();
        Ok(Self {
            labels,
            mean: DVector::zeros(2 * modes),
            cov: DMatrix::identity(2 * modes, 2 * modes) * VACUUM_VARIANCE,
        })
    }

    /// Replaces the mode labels, keeping moments untouched.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Returns a copy with the first moments replaced.
    pub fn displaced(&self, mean: DVector<f64>) -> Result<Self> {
        if mean.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: mean.len(),
            });
        }
        Ok(Self {
            labels: self.labels.clone(),
            mean,
            cov: self.cov.clone(),
        })
    }

    pub fn modes(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Index of a labelled mode.
    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Variance of quadrature `q` (0 for X, 1 for P) of `mode`, as a ratio to vacuum.
    pub fn variance_ratio(&self, mode: usize, q: usize) -> f64 {
        self.cov[(2 * mode + q, 2 * mode + q)] / VACUUM_VARIANCE
    }

    pub fn apply(&self, map: &SymplecticMap) -> Result<Self> {
        apply_map(self, map)
    }

    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        // Construction already validated the covariance.
        symplectic_spectrum(&self.cov).expect("validated covariance")
    }
}

/// Affine symplectic transformation `r -> S r + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMap {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticMap {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || dim % 2 != 0 || matrix.ncols() != dim {
            return Err(Error::invalid(
                "matrix",
                format!("expected an even square matrix, got {}x{}", dim, matrix.ncols()),
            ));
        }
        if displacement.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: displacement.len(),
            });
        }
        let deviation = symplectic_deviation(&matrix);
        if !(deviation < SYMPLECTIC_TOL) {
            return Err(Error::NotSymplectic { deviation });
        }
        Ok(Self {
            matrix,
            displacement,
        })
    }

    /// Homogeneous map (no displacement).
    pub fn linear(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(matrix, DVector::zeros(dim))
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * modes, 2 * modes),
            displacement: DVector::zeros(2 * modes),
        }
    }

    /// Phase-space rotation by `theta` of one mode, identity elsewhere.
    pub fn phase_rotation(modes: usize, mode: usize, theta: f64) -> Result<Self> {
        if mode >= modes {
            return Err(Error::DimensionMismatch {
                expected: modes,
                found: mode + 1,
            });
        }
        let mut m = DMatrix::identity(2 * modes, 2 * modes);
        let (s, c) = theta.sin_cos();
        let i = 2 * mode;
        m[(i, i)] = c;
        m[(i, i + 1)] = -s;
        m[(i + 1, i)] = s;
        m[(i + 1, i + 1)] = c;
        Self::linear(m)
    }

    /// Single-mode squeezer scaling X by `1/r` and P by `r`.
    pub fn squeezer(modes: usize, mode: usize, r: f64) -> Result<Self> {
        if !(r > 0.0) || mode >= modes {
            return Err(Error::invalid("r", "squeeze factor must be positive"));
        }
        let mut m = DMatrix::identity(2 * modes, 2 * modes);
        m[(2 * mode, 2 * mode)] = 1.0 / r;
        m[(2 * mode + 1, 2 * mode + 1)] = r;
        Self::linear(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.displacement
    }

    /// The map `next ∘ self`: first `self`, then `next`.
    pub fn then(&self, next: &SymplecticMap) -> Result<Self> {
        if next.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: next.dim(),
            });
        }
        Self::new(
            &next.matrix * &self.matrix,
            &next.matrix * &self.displacement + &next.displacement,
        )
    }

    /// Largest entry of `|S^T Omega S - Omega|`.
    pub fn deviation(&self) -> f64 {
        symplectic_deviation(&self.matrix)
    }
}

fn symplectic_deviation(s: &DMatrix<f64>) -> f64 {
    let omega = symplectic_form(s.nrows() / 2);
    (s.transpose() * &omega * s - omega).amax()
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asymmetry = (m - m.transpose()).amax() / scale;
    if asymmetry > tol {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Vacuum state of `modes` modes: zero mean, covariance `I/2`.
pub fn vacuum_state(modes: usize) -> Result<GaussianState> {
    GaussianState::vacuum(modes)
}

/// Pushes a state through an affine symplectic map.
pub fn apply_map(state: &GaussianState, map: &SymplecticMap) -> Result<GaussianState> {
    if map.dim() != state.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: state.mean.len(),
            found: map.dim(),
        });
    }
    let s = &map.matrix;
    let mut cov = s * &state.cov * s.transpose();
    // Re-symmetrize rounding noise from the triple product.
    cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState {
        labels: state.labels.clone(),
        mean: s * &state.mean + &map.displacement,
        cov,
    })
}

/// Swap coupling `kappa = (1/xi) sqrt(1 - exp(-2 gamma_sw T))`.
pub fn kappa(gamma_sw: f64, xi: f64, duration: f64) -> Result<f64> {
    if !gamma_sw.is_finite() || gamma_sw <= 0.0 {
        return Err(Error::invalid("gamma_sw", "swap rate must be positive"));
    }
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::invalid("duration", "pulse duration must be non-negative"));
    }
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::invalid("xi", "xi must be a non-negative real"));
    }
    if xi == 0.0 {
        return Err(Error::QndLimit);
    }
    if xi * xi >= 1.0 {
        return Err(Error::ImaginaryXiRegime {
            xi_squared: xi * xi,
        });
    }
    // -expm1(-x) keeps precision for short pulses.
    Ok((-(-2.0 * gamma_sw * duration).exp_m1()).sqrt() / xi)
}

/// Two-mode input-output map over `(X_A, P_A, X_L, P_L)`:
///
/// ```text
/// X'_A = t X_A + kappa P_L        X'_L = t X_L + kappa P_A
/// P'_A = t P_A - xi^2 kappa X_L   P'_L = t P_L - xi^2 kappa X_A
/// ```
///
/// with `t = sqrt(1 - xi^2 kappa^2)`.
pub fn swap_io_map(xi: f64, kappa: f64) -> Result<SymplecticMap> {
    if !xi.is_finite() || !kappa.is_finite() || xi < 0.0 || kappa < 0.0 {
        return Err(Error::invalid("xi/kappa", "must be finite and non-negative"));
    }
    if xi * xi >= 1.0 {
        return Err(Error::ImaginaryXiRegime {
            xi_squared: xi * xi,
        });
    }
    let coupling = xi * xi * kappa * kappa;
    if coupling > 1.0 + 1e-12 {
        return Err(Error::CouplingOutOfRange { value: coupling });
    }
    let t = (1.0 - coupling).max(0.0).sqrt();
    let x2k = xi * xi * kappa;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        t,    0.0,  0.0,  kappa,
        0.0,  t,    -x2k, 0.0,
        0.0,  kappa, t,   0.0,
        -x2k, 0.0,  0.0,  t,
    ]);
    SymplecticMap::linear(m)
}

/// Symplectic eigenvalues of a state's covariance, ascending.
pub fn symplectic_eigenvalues(state: &GaussianState) -> Vec<f64> {
    state.symplectic_eigenvalues()
}

/// Symplectic spectrum of a positive-definite covariance, ascending.
///
/// Uses `A = sqrt(cov) Omega sqrt(cov)`, whose singular values are the symplectic
/// eigenvalues, each appearing twice.
pub fn symplectic_spectrum(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 || cov.ncols() != dim {
        return Err(Error::invalid("cov", "expected an even square matrix"));
    }
    check_symmetric(cov, SYMMETRY_TOL)?;
    let eig = SymmetricEigen::new(cov.clone());
    let min_eig = eig.eigenvalues.min();
    if !(min_eig > 0.0) {
        return Err(Error::Unphysical { smallest: min_eig });
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let a = &root * symplectic_form(dim / 2) * &root;
    let gram = a.transpose() * &a;
    let mut nu: Vec<f64> = SymmetricEigen::new((&gram + gram.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    nu.sort_by(f64::total_cmp);
    Ok(nu.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_moments() {
        let v = vacuum_state(1).unwrap();
        assert_eq!(v.cov(), &DMatrix::from_diagonal_element(2, 2, 0.5));
        let v = vacuum_state(2).unwrap();
        assert!(v.mean().iter().all(|&m| m == 0.0));
        let nu = vacuum_state(3).unwrap().symplectic_eigenvalues();
        assert_eq!(nu.len(), 3);
        for n in nu {
            assert_relative_eq!(n, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn vacuum_rejects_zero_modes() {
        assert!(vacuum_state(0).is_err());
    }

    #[test]
    fn identity_and_rotation_leave_vacuum_alone() {
        let v = vacuum_state(2).unwrap();
        assert_eq!(v.apply(&SymplecticMap::identity(2)).unwrap(), v);
        let rot = SymplecticMap::phase_rotation(2, 1, std::f64::consts::FRAC_PI_2).unwrap();
        let out = v.apply(&rot).unwrap();
        assert!((out.cov() - v.cov()).amax() < 1e-15);
    }

    #[test]
    fn squeezed_pure_state_has_half_symplectic_eigenvalue() {
        let s = 3.7;
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![s / 2.0, 1.0 / (2.0 * s)]));
        let st = GaussianState::new(vec!["a".into()], DVector::zeros(2), cov).unwrap();
        assert_relative_eq!(st.symplectic_eigenvalues()[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn state_rejects_sub_vacuum_product() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.2]));
        let err = GaussianState::new(vec!["a".into()], DVector::zeros(2), cov).unwrap_err();
        assert!(matches!(err, Error::Unphysical { .. }));
    }

    #[test]
    fn state_rejects_asymmetric_cov() {
        let mut cov = DMatrix::identity(2, 2);
        cov[(0, 1)] = 1e-6;
        let err = GaussianState::new(vec!["a".into()], DVector::zeros(2), cov).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let v = vacuum_state(1).unwrap();
        assert!(matches!(
            v.apply(&SymplecticMap::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_symplectic_matrix_rejected() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0]));
        assert!(matches!(
            SymplecticMap::linear(m),
            Err(Error::NotSymplectic { .. })
        ));
    }

    #[test]
    fn kappa_limits() {
        assert_eq!(kappa(100.0, 0.4, 0.0).unwrap(), 0.0);
        let k = kappa(100.0, 0.4, 10.0).unwrap();
        assert_relative_eq!(k, 1.0 / 0.4, epsilon = 1e-14);
        assert!(matches!(kappa(100.0, 0.0, 1.0), Err(Error::QndLimit)));
        assert!(kappa(-1.0, 0.4, 1.0).is_err());
        assert!(kappa(1.0, 0.4, -1.0).is_err());
        assert!(matches!(
            kappa(1.0, 1.2, 1.0),
            Err(Error::ImaginaryXiRegime { .. })
        ));
    }

    #[test]
    fn kappa_operating_point() {
        let gamma = 1.0 / 5.7e-3;
        let xi = (1.0f64 / 6.3).sqrt();
        let expected = 6.3f64.sqrt() * (1.0 - (-30.0f64 / 5.7).exp()).sqrt();
        assert_relative_eq!(kappa(gamma, xi, 15e-3).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn zero_kappa_is_identity() {
        let m = swap_io_map(0.5, 0.0).unwrap();
        assert_eq!(m.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn full_swap_squeezes_light_to_xi_squared() {
        let xi2 = 1.0 / 6.3;
        let xi = f64::sqrt(xi2);
        let map = swap_io_map(xi, 1.0 / xi).unwrap();
        let out = vacuum_state(2).unwrap().apply(&map).unwrap();
        assert_relative_eq!(out.variance_ratio(1, 1), xi2, max_relative = 1e-12);
    }

    #[test]
    fn coupling_above_one_rejected() {
        assert!(matches!(
            swap_io_map(0.5, 2.5),
            Err(Error::CouplingOutOfRange { .. })
        ));
    }

    #[test]
    fn swap_output_respects_uncertainty() {
        let map = swap_io_map(0.6, 1.2).unwrap();
        let out = vacuum_state(2).unwrap().apply(&map).unwrap();
        for nu in out.symplectic_eigenvalues() {
            assert!(nu >= 0.5 - HEISENBERG_TOL);
        }
    }

    #[test]
    fn twice_applied_equals_composed() {
        let a = swap_io_map(0.5, 1.1).unwrap();
        let s0 = vacuum_state(2).unwrap();
        let twice = s0.apply(&a).unwrap().apply(&a).unwrap();
        let once = s0.apply(&a.then(&a).unwrap()).unwrap();
        assert!((twice.cov() - once.cov()).amax() < 1e-12);
    }
}
