//! Exact one-bin update of a single channel.
//!
//! Channel form: atomic variable `s`, white input `w` (intensity 1/2), output
//! `y = w + c s`, and `ds = -g s dt + d w dt + decoherence`, where the decoherence
//! diffusion is `gamma_dec` (restoring variance 1/2 on its own). Over one bin of width
//! `h` the input average, the state increment `Z1` and the in-bin state average `Z2`
//! are jointly Gaussian with covariances in closed form.

/// `(1 - exp(-x)) / x`, equal to 1 at `x = 0`.
pub fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

const SERIES_BELOW: f64 = 1e-2;

fn f_a(x: f64) -> f64 {
    if x < SERIES_BELOW {
        0.5 - x / 6.0 + x * x / 24.0 - x.powi(3) / 120.0 + x.powi(4) / 720.0
    } else {
        (1.0 - phi1(x)) / x
    }
}

fn f_b(x: f64) -> f64 {
    if x < SERIES_BELOW {
        0.5 - x / 2.0 + 7.0 * x * x / 24.0 - x.powi(3) / 8.0 + 31.0 * x.powi(4) / 720.0
    } else {
        (phi1(x) - phi1(2.0 * x)) / x
    }
}

fn f_c(x: f64) -> f64 {
    if x < SERIES_BELOW {
        1.0 / 3.0 - x / 4.0 + 7.0 * x * x / 60.0 - x.powi(3) / 24.0 + 31.0 * x.powi(4) / 2520.0
    } else {
        (1.0 - 2.0 * phi1(x) + phi1(2.0 * x)) / (x * x)
    }
}

/// Per-bin propagation constants of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConstants {
    /// Output coupling `c`.
    pub c: f64,
    /// State decay over one bin, `exp(-g h)`.
    pub decay: f64,
    /// In-bin average of the decay, `phi1(g h)`.
    pub mean_factor: f64,
    /// Covariance of `(w_bar, Z1, Z2)`.
    pub noise_cov: [[f64; 3]; 3],
    /// Lower Cholesky factor of `noise_cov` (zero columns for null directions).
    pub noise_chol: [[f64; 3]; 3],
}

impl StepConstants {
    pub fn new(c: f64, d: f64, g: f64, gamma_dec: f64, h: f64) -> Self {
        let x = g * h;
        let diff = d * d / 2.0 + gamma_dec;
        let p1 = phi1(x);
        let noise_cov = [
            [1.0 / (2.0 * h), d / 2.0 * p1, d / 2.0 * f_a(x)],
            [d / 2.0 * p1, diff * h * phi1(2.0 * x), diff * h * f_b(x)],
            [d / 2.0 * f_a(x), diff * h * f_b(x), diff * h * f_c(x)],
        ];
        Self {
            c,
            decay: (-x).exp(),
            mean_factor: p1,
            noise_chol: cholesky3(&noise_cov),
            noise_cov,
        }
    }

    /// Channel with no atomic coupling.
    pub fn decoupled(h: f64) -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, h)
    }

    /// Correlated `(w_bar, Z1, Z2)` from three standard normals.
    #[inline]
    pub fn correlate(&self, z: [f64; 3]) -> [f64; 3] {
        let l = &self.noise_chol;
        [
            l[0][0] * z[0],
            l[1][0] * z[0] + l[1][1] * z[1],
            l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
        ]
    }
}

/// Cholesky factor of a positive semidefinite 3x3 matrix; pivots below a relative
/// threshold are treated as exact zeros.
fn cholesky3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let scale = (0..3).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let tiny = 1e-14 * scale;
    let mut l = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut diag = a[j][j];
        for k in 0..j {
            diag -= l[j][k] * l[j][k];
        }
        if diag <= tiny {
            continue;
        }
        let ljj = diag.sqrt();
        l[j][j] = ljj;
        for i in j + 1..3 {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / ljj;
        }
    }
    l
}
