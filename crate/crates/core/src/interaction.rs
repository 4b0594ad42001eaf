//! Coupling constants and continuous-time dynamics of the two-cell swap interaction.
//!
//! In the cosine (or, identically, sine) channel the atomic quadratures `(X_b, P_b)`
//! and the light quadratures obey
//!
//! ```text
//! dX_b/dt = (chi_p + chi_a) p_in - gamma_sw X_b      x_out = x_in + (chi_p + chi_a) P_b
//! dP_b/dt = -(chi_p - chi_a) x_in - gamma_sw P_b     p_out = p_in - (chi_p - chi_a) X_b
//! ```
//!
//! with `chi_p + chi_a = sqrt(2 gamma_sw) / xi` and `chi_p - chi_a = sqrt(2 gamma_sw) xi`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{self, SymplecticMap};

/// Atomic and optical inputs from which the couplings follow.
///
/// `a0` (scalar polarizability) is accepted for completeness but does not enter the
/// swap dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicConfig {
    #[serde(default)]
    pub a0: Option<f64>,
    pub a1: f64,
    pub a2: f64,
    pub photon_flux_per_s: f64,
    pub atom_count: f64,
    pub beam_area_m2: f64,
    pub detuning_hz: f64,
    pub linewidth_hz: f64,
    pub wavelength_m: f64,
    pub larmor_hz: f64,
    pub cell_length_m: f64,
}

const PLANCK: f64 = 6.626_070_15e-34;
const LIGHT_SPEED: f64 = 299_792_458.0;

impl AtomicConfig {
    /// Caesium vapour cells driven 855 MHz off resonance, with `a1`, `a2` back-solved
    /// so that `gamma_sw = 1/(5.7 ms)` and `xi^2 = 1/6.3`.
    ///
    /// The polarizabilities here are a calibration against the measured operating
    /// point, not first-principles values.
    pub fn cesium_operating_point() -> Self {
        let wavelength_m = 852.3e-9;
        let power_w = 5e-3;
        let base = Self {
            a0: None,
            a1: 1.0,
            a2: 1.0 / 14.0,
            photon_flux_per_s: power_w * wavelength_m / (PLANCK * LIGHT_SPEED),
            atom_count: 3.6e11,
            beam_area_m2: PI * 0.01 * 0.01,
            detuning_hz: 855e6,
            linewidth_hz: 5.23e6,
            wavelength_m,
            larmor_hz: 322e3,
            cell_length_m: 0.022,
        };
        base.calibrated(1.0 / 5.7e-3, 1.0 / 6.3)
    }

    /// Copy with `a1`, `a2` chosen to produce the requested swap rate and `xi^2`.
    pub fn calibrated(&self, gamma_sw: f64, xi_squared: f64) -> Self {
        let k = self.rate_scale();
        let a1 = (gamma_sw / (xi_squared * k)).sqrt();
        Self {
            a1,
            a2: xi_squared * a1 / 14.0,
            ..self.clone()
        }
    }

    /// `(Phi N_a / A^2) (gamma / 8 Delta * lambda^2 / 2 pi)^2`, in s^-1.
    fn rate_scale(&self) -> f64 {
        let optical = self.linewidth_hz / (8.0 * self.detuning_hz) * self.wavelength_m.powi(2)
            / (2.0 * PI);
        self.photon_flux_per_s * self.atom_count / self.beam_area_m2.powi(2) * optical * optical
    }

    pub fn xi_squared(&self) -> f64 {
        14.0 * self.a2 / self.a1
    }

    pub fn gamma_sw(&self) -> f64 {
        14.0 * self.a1 * self.a2 * self.rate_scale()
    }

    pub fn larmor_rad_per_s(&self) -> f64 {
        2.0 * PI * self.larmor_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("photon_flux_per_s", self.photon_flux_per_s),
            ("atom_count", self.atom_count),
            ("beam_area_m2", self.beam_area_m2),
            ("linewidth_hz", self.linewidth_hz),
            ("wavelength_m", self.wavelength_m),
            ("larmor_hz", self.larmor_hz),
            ("cell_length_m", self.cell_length_m),
            ("a1", self.a1),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !self.detuning_hz.is_finite() || self.detuning_hz == 0.0 {
            return Err(Error::invalid("detuning_hz", "must be non-zero"));
        }
        let xi2 = self.xi_squared();
        if xi2 == 0.0 {
            return Err(Error::QndLimit);
        }
        if !(xi2 > 0.0 && xi2 < 1.0) {
            return Err(Error::ImaginaryXiRegime { xi_squared: xi2 });
        }
        Ok(())
    }
}

/// Coupling set driving all of the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapParams {
    /// Swap rate, s^-1.
    pub gamma_sw: f64,
    pub xi: f64,
    /// Pulse duration, s.
    pub duration: f64,
    pub larmor_hz: f64,
    /// Extra relaxation rate towards the coherent spin state, s^-1.
    pub gamma_dec: f64,
    pub chi_a: f64,
    pub chi_p: f64,
}

impl SwapParams {
    pub fn new(gamma_sw: f64, xi: f64, duration: f64) -> Result<Self> {
        if !(gamma_sw.is_finite() && gamma_sw > 0.0) {
            return Err(Error::invalid("gamma_sw", "swap rate must be positive"));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        if !xi.is_finite() || xi < 0.0 {
            return Err(Error::invalid("xi", "must be a non-negative real"));
        }
        if xi == 0.0 {
            return Err(Error::QndLimit);
        }
        if xi >= 1.0 {
            return Err(Error::ImaginaryXiRegime {
                xi_squared: xi * xi,
            });
        }
        let root = (gamma_sw / 2.0).sqrt();
        Ok(Self {
            gamma_sw,
            xi,
            duration,
            larmor_hz: 322e3,
            gamma_dec: 0.0,
            chi_a: root * (1.0 / xi - xi),
            chi_p: root * (1.0 / xi + xi),
        })
    }

    pub fn from_xi_squared(gamma_sw: f64, xi_squared: f64, duration: f64) -> Result<Self> {
        if !(xi_squared > 0.0 && xi_squared < 1.0) {
            if xi_squared == 0.0 {
                return Err(Error::QndLimit);
            }
            return Err(Error::ImaginaryXiRegime { xi_squared });
        }
        Self::new(gamma_sw, xi_squared.sqrt(), duration)
    }

    /// Measured operating point: `gamma_sw = 1/(5.7 ms)`, `xi^2 = 1/6.3`, 15 ms pulse.
    pub fn operating_point() -> Self {
        Self::from_xi_squared(1.0 / 5.7e-3, 1.0 / 6.3, 15e-3).expect("valid constants")
    }

    pub fn with_decoherence(mut self, gamma_dec: f64) -> Result<Self> {
        if !(gamma_dec.is_finite() && gamma_dec >= 0.0) {
            return Err(Error::invalid("gamma_dec", "must be non-negative"));
        }
        self.gamma_dec = gamma_dec;
        Ok(self)
    }

    pub fn with_larmor_hz(mut self, larmor_hz: f64) -> Self {
        self.larmor_hz = larmor_hz;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::invalid("duration", "must be non-negative"));
        }
        self.duration = duration;
        Ok(self)
    }

    pub fn xi_squared(&self) -> f64 {
        self.xi * self.xi
    }

    /// `chi_p + chi_a = sqrt(2 gamma_sw) / xi`.
    pub fn chi_sum(&self) -> f64 {
        self.chi_p + self.chi_a
    }

    /// `chi_p - chi_a = sqrt(2 gamma_sw) xi`.
    pub fn chi_diff(&self) -> f64 {
        self.chi_p - self.chi_a
    }

    pub fn kappa(&self) -> Result<f64> {
        gaussian::kappa(self.gamma_sw, self.xi, self.duration)
    }

    pub fn swap_map(&self) -> Result<SymplecticMap> {
        gaussian::swap_io_map(self.xi, self.kappa()?)
    }

    /// Closed-form P-quadrature variance of the output mode, as a ratio to vacuum,
    /// when both inputs are vacuum and there is no decoherence.
    pub fn ideal_output_variance_ratio(&self) -> Result<f64> {
        let k = self.kappa()?;
        let x2k2 = self.xi_squared() * k * k;
        Ok((1.0 - x2k2) + self.xi_squared() * x2k2)
    }

    /// Checks the closed-form relations between the couplings.
    pub fn validate(&self) -> Result<()> {
        let fresh = Self::new(self.gamma_sw, self.xi, self.duration)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        if rel(self.chi_a, fresh.chi_a) > 1e-12 || rel(self.chi_p, fresh.chi_p) > 1e-12 {
            return Err(Error::invalid(
                "chi_a/chi_p",
                "inconsistent with gamma_sw and xi",
            ));
        }
        if !(self.gamma_dec.is_finite() && self.gamma_dec >= 0.0) {
            return Err(Error::invalid("gamma_dec", "must be non-negative"));
        }
        Ok(())
    }
}

/// Derives the swap couplings from atomic physics.
pub fn couplings_from_physics(cfg: &AtomicConfig, duration: f64) -> Result<SwapParams> {
    cfg.validate()?;
    Ok(SwapParams::new(cfg.gamma_sw(), cfg.xi_squared().sqrt(), duration)?
        .with_larmor_hz(cfg.larmor_hz))
}

/// Mean output light quadratures `(x_L(t), p_L(t))` for displaced atoms and vacuum
/// input light, in units where `[x, p] = i` per unit bandwidth.
pub fn mean_output(t: f64, params: &SwapParams, xa0: f64, pa0: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0 && t <= params.duration) {
        return Err(Error::invalid(
            "t",
            format!("must lie in [0, {}], got {t}", params.duration),
        ));
    }
    let amp = (2.0 * params.gamma_sw).sqrt() * (-params.gamma_sw * t).exp();
    Ok((amp / params.xi * pa0, -amp * params.xi * xa0))
}

/// Real temporal mode function sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeFunction {
    pub samples: Vec<f64>,
    /// Grid spacing, s.
    pub dt: f64,
    /// Time attributed to the first sample, s.
    pub start: f64,
    pub normalized: bool,
}

impl ModeFunction {
    pub fn new(samples: Vec<f64>, dt: f64) -> Self {
        Self {
            samples,
            dt,
            start: 0.0,
            normalized: false,
        }
    }

    pub fn with_start(mut self, start: f64) -> Self {
        self.start = start;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `sum u_i^2 dt`.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|u| u * u).sum::<f64>() * self.dt
    }

    /// Rescales so that `sum u_i^2 dt = 1`.
    pub fn normalize(mut self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroProfile);
        }
        let s = n.sqrt().recip();
        self.samples.iter_mut().for_each(|u| *u *= s);
        self.normalized = true;
        Ok(self)
    }

    /// `sum u_i v_i dt`; both modes must share the grid.
    pub fn overlap(&self, other: &ModeFunction) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::invalid("dt", "modes live on different grids"));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.dt)
    }

    /// Sample times.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.start + i as f64 * self.dt)
    }

    /// Normalized `exp(-rate t)` averaged over bins `[i dt, (i+1) dt)`, matching what
    /// an integrating sampler records. Negative `rate` gives a rising mode.
    pub fn exponential(rate: f64, dt: f64, n: usize) -> Result<Self> {
        let samples = (0..n)
            .map(|i| {
                let t0 = i as f64 * dt;
                if rate == 0.0 {
                    1.0
                } else {
                    (-rate * t0).exp() * (-(-rate * dt).exp_m1()) / (rate * dt)
                }
            })
            .collect();
        Self::new(samples, dt).with_start(0.5 * dt).normalize()
    }
}

/// Output mode `u(t) ∝ gamma_sw(t) exp(-∫_0^t gamma_sw)` for a sampled rate profile.
///
/// The running integral uses the trapezoid rule on the profile grid.
pub fn output_mode_shape(profile: &[f64], dt: f64) -> Result<ModeFunction> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if profile.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            context: "rate profile",
        });
    }
    if profile.iter().any(|&g| g < 0.0) {
        return Err(Error::invalid("profile", "rates must be non-negative"));
    }
    if profile.iter().all(|&g| g == 0.0) {
        return Err(Error::ZeroProfile);
    }
    let mut integral = 0.0;
    let mut samples = Vec::with_capacity(profile.len());
    for (i, &g) in profile.iter().enumerate() {
        if i > 0 {
            integral += 0.5 * (profile[i - 1] + g) * dt;
        }
        samples.push(g * (-integral).exp());
    }
    ModeFunction::new(samples, dt).normalize()
}

/// Rate profile `gamma_0 / (1 - gamma_0 t)` that emits into a flat-top mode.
pub fn flat_top_profile(gamma0: f64, dt: f64, n: usize) -> Result<Vec<f64>> {
    let span = dt * (n.saturating_sub(1)) as f64;
    if !(gamma0 > 0.0) || gamma0 * span >= 1.0 {
        return Err(Error::invalid(
            "gamma0",
            "need gamma0 > 0 and gamma0 * T < 1 for a finite flat-top profile",
        ));
    }
    Ok((0..n)
        .map(|i| gamma0 / (1.0 - gamma0 * i as f64 * dt))
        .collect())
}

/// Quadrature-form linear system for one channel of the cell cascade.
///
/// State `(X_b, P_b)`, input `(x_in, p_in)`, output `(x_out, p_out)` with
/// `d state/dt = drift state + input_matrix input` and
/// `output = input + output_matrix state`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub drift: Matrix2<f64>,
    pub input_matrix: Matrix2<f64>,
    pub output_matrix: Matrix2<f64>,
}

impl LinearSystem {
    /// Stationary state covariance for vacuum (white, variance-1/2) input, solving
    /// `A S + S A^T + B B^T / 2 = 0`.
    pub fn steady_state_covariance(&self) -> Result<Matrix2<f64>> {
        let a = self.drift;
        let i2 = Matrix2::<f64>::identity();
        // vec(A S + S A^T) = (I ⊗ A + A ⊗ I) vec(S), column-major.
        let mut k = Matrix4::<f64>::zeros();
        for r in 0..2 {
            for c in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        k[(2 * c + r, 2 * q + p)] += i2[(c, q)] * a[(r, p)] + a[(c, q)] * i2[(r, p)];
                    }
                }
            }
        }
        let q = self.input_matrix * self.input_matrix.transpose() * 0.5;
        let rhs = -Vector4::new(q[(0, 0)], q[(1, 0)], q[(0, 1)], q[(1, 1)]);
        let s = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::invalid("drift", "no stationary state (marginal drift)"))?;
        Ok(Matrix2::new(s[0], s[2], s[1], s[3]))
    }
}

/// Linear system of one (cosine or sine) channel of the two-cell cascade.
pub fn cell_cascade_generators(params: &SwapParams) -> LinearSystem {
    let g = params.gamma_sw;
    let sum = params.chi_sum();
    let diff = params.chi_diff();
    let coupling = Matrix2::new(0.0, sum, -diff, 0.0);
    LinearSystem {
        drift: Matrix2::new(-g, 0.0, 0.0, -g),
        input_matrix: coupling,
        output_matrix: coupling,
    }
}

/// Duan combination `2 Var(P_c) + 2 Var(P_s)` with variances given as ratios to
/// vacuum, normalized so that vacuum gives exactly 2.
pub fn duan_combination(var_pc: f64, var_ps: f64) -> Result<f64> {
    for (name, v) in [("var_pc", var_pc), ("var_ps", var_ps)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(name, format!("variance must be >= 0, got {v}")));
        }
    }
    Ok(var_pc + var_ps)
}

/// Deterministic response of the cascade, integrated with classical RK4.
///
/// `rate_at(t)` gives `gamma_sw(t)` (xi is held fixed, so both couplings scale with
/// `sqrt(gamma_sw)`); `input(t)` is a c-number input `(x_in, p_in)`; `weight(t)` is
/// the pair of functions the outputs `(x_out, p_out)` are projected on.
pub struct CascadeResponse {
    pub final_state: Vector2<f64>,
    pub projections: Vector2<f64>,
}

pub fn integrate_cascade(
    xi: f64,
    rate_at: impl Fn(f64) -> f64,
    initial: Vector2<f64>,
    input: impl Fn(f64) -> Vector2<f64>,
    weight: impl Fn(f64) -> Vector2<f64>,
    duration: f64,
    steps: usize,
) -> CascadeResponse {
    let rhs = |t: f64, y: &Vector4<f64>| -> Vector4<f64> {
        let g = rate_at(t);
        let root = (2.0 * g).sqrt();
        let sum = root / xi;
        let diff = root * xi;
        let u = input(t);
        let w = weight(t);
        let x_out = u[0] + sum * y[1];
        let p_out = u[1] - diff * y[0];
        Vector4::new(
            sum * u[1] - g * y[0],
            -diff * u[0] - g * y[1],
            w[0] * x_out,
            w[1] * p_out,
        )
    };
    let h = duration / steps as f64;
    let mut y = Vector4::new(initial[0], initial[1], 0.0, 0.0);
    for k in 0..steps {
        let t = k as f64 * h;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * h, &(y + k1 * (0.5 * h)));
        let k3 = rhs(t + 0.5 * h, &(y + k2 * (0.5 * h)));
        let k4 = rhs(t + h, &(y + k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    CascadeResponse {
        final_state: Vector2::new(y[0], y[1]),
        projections: Vector2::new(y[2], y[3]),
    }
}

/// Input-output coefficients recovered by integrating the cascade and projecting on
/// the rising input mode `∝ exp(gamma t)` and falling output mode `∝ exp(-gamma t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapCoefficients {
    /// `X_A -> X'_A`.
    pub atom_retention: f64,
    /// `P_L -> P'_L`.
    pub light_transmission: f64,
    /// `P_L -> X'_A`.
    pub light_to_atoms: f64,
    /// `P_A -> X'_L`.
    pub atoms_to_light: f64,
    /// `X_A -> P'_L` (negated).
    pub squeezed_transfer: f64,
}

pub fn integrated_swap_coefficients(params: &SwapParams, steps: usize) -> SwapCoefficients {
    let g = params.gamma_sw;
    let tp = params.duration;
    let n_in = (2.0 * g / (2.0 * g * tp).exp_m1()).sqrt();
    let n_out = (2.0 * g / -(-2.0 * g * tp).exp_m1()).sqrt();
    let rising = move |t: f64| n_in * (g * t).exp();
    let falling = move |t: f64| n_out * (-g * t).exp();
    let rate = |_| g;
    let xi = params.xi;

    let from_xa = integrate_cascade(
        xi,
        rate,
        Vector2::new(1.0, 0.0),
        |_| Vector2::zeros(),
        |t| Vector2::new(falling(t), falling(t)),
        tp,
        steps,
    );
    let from_pl = integrate_cascade(
        xi,
        rate,
        Vector2::zeros(),
        |t| Vector2::new(0.0, rising(t)),
        |t| Vector2::new(falling(t), falling(t)),
        tp,
        steps,
    );
    let from_pa = integrate_cascade(
        xi,
        rate,
        Vector2::new(0.0, 1.0),
        |_| Vector2::zeros(),
        |t| Vector2::new(falling(t), falling(t)),
        tp,
        steps,
    );
    SwapCoefficients {
        atom_retention: from_xa.final_state[0],
        light_transmission: from_pl.projections[1],
        light_to_atoms: from_pl.final_state[0],
        atoms_to_light: from_pa.projections[0],
        squeezed_transfer: -from_xa.projections[1],
    }
}

/// Output response to a unit initial `X_A` under a time-dependent rate profile,
/// weighted by the drive amplitude `sqrt(gamma_sw(t))` the homodyne signal scales
/// with. Integrated with RK4 between profile samples (linear interpolation).
pub fn emitted_mode(profile: &[f64], dt: f64, xi: f64, substeps: usize) -> Result<ModeFunction> {
    if profile.len() < 2 {
        return Err(Error::invalid("profile", "need at least two samples"));
    }
    let n = profile.len();
    let rate_at = |t: f64| {
        let x = (t / dt).clamp(0.0, (n - 1) as f64);
        let i = (x.floor() as usize).min(n - 2);
        let f = x - i as f64;
        profile[i] * (1.0 - f) + profile[i + 1] * f
    };
    let mut state = Vector2::new(1.0, 0.0);
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 * dt;
        let g = rate_at(t);
        let p_out = -(2.0 * g).sqrt() * xi * state[0];
        samples.push(-p_out * g.sqrt());
        if i + 1 < n {
            let shifted = |s: f64| rate_at(t + s);
            state = integrate_cascade(
                xi,
                shifted,
                state,
                |_| Vector2::zeros(),
                |_| Vector2::zeros(),
                dt,
                substeps,
            )
            .final_state;
        }
    }
    ModeFunction::new(samples, dt).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chi_relations_hold() {
        let p = SwapParams::operating_point();
        assert_relative_eq!(
            (p.chi_p.powi(2) - p.chi_a.powi(2)) / 2.0,
            p.gamma_sw,
            max_relative = 1e-12
        );
        assert!(p.validate().is_ok());
    }

    #[test]
    fn operating_point_config_reproduces_fit() {
        let cfg = AtomicConfig::cesium_operating_point();
        let p = couplings_from_physics(&cfg, 15e-3).unwrap();
        assert_relative_eq!(p.gamma_sw, 1.0 / 5.7e-3, max_relative = 1e-12);
        assert_relative_eq!(p.xi_squared(), 1.0 / 6.3, max_relative = 1e-12);
        assert_eq!(p.gamma_dec, 0.0);
    }

    #[test]
    fn doubling_flux_doubles_rate_only() {
        let cfg = AtomicConfig::cesium_operating_point();
        let doubled = AtomicConfig {
            photon_flux_per_s: 2.0 * cfg.photon_flux_per_s,
            ..cfg.clone()
        };
        let a = couplings_from_physics(&cfg, 0.015).unwrap();
        let b = couplings_from_physics(&doubled, 0.015).unwrap();
        assert_relative_eq!(b.gamma_sw, 2.0 * a.gamma_sw, max_relative = 1e-12);
        assert_relative_eq!(b.xi, a.xi, max_relative = 1e-14);
    }

    #[test]
    fn vanishing_tensor_part_approaches_qnd() {
        let cfg = AtomicConfig::cesium_operating_point();
        let tiny = AtomicConfig {
            a2: cfg.a2 * 1e-8,
            ..cfg
        };
        let p = couplings_from_physics(&tiny, 0.015).unwrap();
        assert!(p.xi < 1e-4);
        assert_relative_eq!(p.chi_a / p.chi_p, 1.0, max_relative = 1e-7);
    }

    #[test]
    fn regime_errors() {
        let cfg = AtomicConfig::cesium_operating_point();
        let strong = AtomicConfig {
            a2: cfg.a1 / 10.0,
            ..cfg.clone()
        };
        assert!(matches!(
            couplings_from_physics(&strong, 0.015),
            Err(Error::ImaginaryXiRegime { .. })
        ));
        let flipped = AtomicConfig {
            a2: -cfg.a2,
            ..cfg.clone()
        };
        let err = couplings_from_physics(&flipped, 0.015).unwrap_err();
        assert!(err.to_string().contains("entanglement between the light and atoms"));
        let zero_flux = AtomicConfig {
            photon_flux_per_s: 0.0,
            ..cfg
        };
        assert!(couplings_from_physics(&zero_flux, 0.015).is_err());
    }

    #[test]
    fn mean_output_examples() {
        let p = SwapParams::operating_point();
        assert_eq!(mean_output(0.003, &p, 0.0, 0.0).unwrap(), (0.0, 0.0));
        let (x, pp) = mean_output(0.0, &p, -1.0, 1.0).unwrap();
        assert_relative_eq!(x / pp, 6.3, max_relative = 1e-12);
        let tau = 1.0 / p.gamma_sw;
        let (x1, p1) = mean_output(0.002, &p, 1.0, 1.0).unwrap();
        let (x2, p2) = mean_output(0.002 + tau, &p, 1.0, 1.0).unwrap();
        assert_relative_eq!(x1 / x2, std::f64::consts::E, max_relative = 1e-12);
        assert_relative_eq!(p1 / p2, std::f64::consts::E, max_relative = 1e-12);
        assert!(mean_output(0.02, &p, 1.0, 1.0).is_err());
    }

    #[test]
    fn constant_profile_gives_exponential() {
        let g = 200.0;
        let dt = 1e-5;
        let mode = output_mode_shape(&vec![g; 1500], dt).unwrap();
        let ratio = mode.samples[1000] / mode.samples[500];
        assert_relative_eq!(ratio, (-g * 500.0 * dt).exp(), max_relative = 1e-12);
        assert_relative_eq!(mode.norm_sq(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn doubling_rate_halves_decay_time() {
        let dt = 1e-5;
        let slow = output_mode_shape(&vec![100.0; 2000], dt).unwrap();
        let fast = output_mode_shape(&vec![200.0; 2000], dt).unwrap();
        let e_time = |m: &ModeFunction| {
            let u0 = m.samples[0];
            m.samples.iter().position(|&u| u < u0 / std::f64::consts::E).unwrap()
        };
        let (a, b) = (e_time(&slow) as f64, e_time(&fast) as f64);
        assert!((a / b - 2.0).abs() < 0.01, "{a} {b}");
    }

    #[test]
    fn flat_top_profile_is_flat() {
        let n = 1000;
        let dt = 15e-3 / n as f64;
        let profile = flat_top_profile(0.9 / (dt * (n - 1) as f64), dt, n).unwrap();
        let mode = output_mode_shape(&profile, dt).unwrap();
        let first = mode.samples[0];
        for &u in &mode.samples {
            assert!((u / first - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_profile_rejected() {
        assert!(matches!(
            output_mode_shape(&[0.0; 10], 1e-3),
            Err(Error::ZeroProfile)
        ));
        assert!(output_mode_shape(&[1.0, -1.0], 1e-3).is_err());
    }

    #[test]
    fn steady_state_matches_lyapunov_closed_form() {
        let p = SwapParams::operating_point();
        let s = cell_cascade_generators(&p).steady_state_covariance().unwrap();
        assert_relative_eq!(s[(0, 0)], 0.5 / p.xi_squared(), max_relative = 1e-12);
        assert_relative_eq!(s[(1, 1)], 0.5 * p.xi_squared(), max_relative = 1e-12);
        assert!(s[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn near_qnd_coupling_nearly_decouples_p_out() {
        let p = SwapParams::new(1e-6, 1e-4, 0.01).unwrap();
        let sys = cell_cascade_generators(&p);
        // p_out barely sees X_b while x_out keeps a finite P_b coupling.
        assert!(sys.output_matrix[(1, 0)].abs() < 1e-6);
        assert!(sys.output_matrix[(0, 1)].abs() > 10.0);
    }

    #[test]
    fn duan_examples() {
        assert_eq!(duan_combination(1.0, 1.0).unwrap(), 2.0);
        let xi2 = 1.0 / 6.3;
        assert_relative_eq!(duan_combination(xi2, xi2).unwrap(), 2.0 / 6.3);
        let r = 10f64.powf(-0.35);
        assert_relative_eq!(duan_combination(r, r).unwrap(), 0.893, epsilon = 1e-3);
        assert!(duan_combination(-0.1, 1.0).is_err());
    }

    #[test]
    fn exponential_mode_is_normalized_and_decays() {
        let m = ModeFunction::exponential(175.0, 8e-5, 188).unwrap();
        assert_relative_eq!(m.norm_sq(), 1.0, epsilon = 1e-12);
        assert!(m.samples.windows(2).all(|w| w[1] < w[0]));
    }
}
