use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::ModeFunction;

/// Least-squares fit of `A exp(-r t)` to a sign-aligned mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    /// Decay rate, s^-1; negative for a rising mode.
    pub rate: f64,
    pub amplitude: f64,
    /// Relative RMS residual `|u - fit| / |u|`.
    pub residual: f64,
    pub decaying: bool,
}

struct Problem<'a> {
    t: &'a [f64],
    u: &'a [f64],
}

impl Problem<'_> {
    /// Optimal amplitude and `dR/dr / 2` at that amplitude.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        let (mut ue, mut ee) = (0.0, 0.0);
        for (&t, &u) in self.t.iter().zip(self.u) {
            let e = (-r * t).exp();
            ue += u * e;
            ee += e * e;
        }
        let a = ue / ee;
        let (mut grad, mut res) = (0.0, 0.0);
        for (&t, &u) in self.t.iter().zip(self.u) {
            let e = (-r * t).exp();
            let d = u - a * e;
            grad += d * t * e;
            res += d * d;
        }
        (a, a * grad, res)
    }
}

/// Fits `A exp(-r t)` to `|u|` after flipping the mode so its largest sample is
/// positive. A coarse scan locates the minimum; bisection on the gradient refines
/// it to machine precision.
pub fn fit_exponential_mode(mode: &ModeFunction) -> Result<ExponentialFit> {
    if mode.len() < 3 {
        return Err(Error::invalid("mode", "need at least three samples"));
    }
    if mode.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "mode function",
        });
    }
    let peak = mode
        .samples
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if peak == 0.0 {
        return Err(Error::ZeroProfile);
    }
    let u: Vec<f64> = mode.samples.iter().map(|v| v * peak.signum()).collect();
    let t: Vec<f64> = mode.times().collect();
    let span = t[t.len() - 1] - t[0];
    let p = Problem { t: &t, u: &u };

    let limit = 60.0 / span;
    let steps = 1200;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| -limit + 2.0 * limit * i as f64 / steps as f64)
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| p.eval(grid[a]).2.total_cmp(&p.eval(grid[b]).2))
        .unwrap_or(0);
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(steps)];
    // R is smooth; dR/dr changes sign from negative to positive at the minimum.
    let mut g_lo = p.eval(lo).1;
    if g_lo < 0.0 && p.eval(hi).1 > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g = p.eval(mid).1;
            if (g < 0.0) == (g_lo < 0.0) {
                lo = mid;
                g_lo = g;
            } else {
                hi = mid;
            }
        }
    } else {
        lo = grid[best];
        hi = lo;
    }
    let rate = 0.5 * (lo + hi);
    let (amplitude, _, res) = p.eval(rate);
    let norm: f64 = u.iter().map(|v| v * v).sum();
    Ok(ExponentialFit {
        rate,
        amplitude,
        residual: (res / norm).sqrt(),
        decaying: rate > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(rate: f64, n: usize, dt: f64, sign: f64) -> ModeFunction {
        let s = (0..n).map(|i| sign * (-rate * i as f64 * dt).exp()).collect();
        ModeFunction::new(s, dt).normalize().unwrap()
    }

    #[test]
    fn exact_exponential_recovered() {
        let g = 1.0 / 5.7e-3;
        let fit = fit_exponential_mode(&sampled(g, 188, 8e-5, -1.0)).unwrap();
        assert!((fit.rate - g).abs() < 1e-9 * g, "{}", fit.rate);
        assert!(fit.residual < 1e-10);
        assert!(fit.decaying);
    }

    #[test]
    fn rising_mode_flagged() {
        let fit = fit_exponential_mode(&sampled(-100.0, 100, 1e-4, 1.0)).unwrap();
        assert!(!fit.decaying);
        assert!((fit.rate + 100.0).abs() < 1e-7);
    }

    #[test]
    fn zero_mode_rejected() {
        let m = ModeFunction::new(vec![0.0; 10], 1e-3);
        assert!(fit_exponential_mode(&m).is_err());
    }
}
