// Recovering a planted squeezed mode from a known covariance.

use nalgebra::{DMatrix, DVector};
use swaplight::interaction::ModeFunction;
use swaplight::modes::{kl_decompose, CovarianceEstimate, CovarianceOptions};

fn main() -> swaplight::Result<()> {
    let (n, dt) = (60, 1e-3);
    let planted = ModeFunction::exponential(120.0, dt, n)?;
    let u = DVector::from_column_slice(&planted.samples);
    let floor = DMatrix::identity(n, n) / dt;
    let signal = &floor + &u * u.transpose() * -0.6;

    let opts = CovarianceOptions { bin: 1, whitening: true };
    let est = CovarianceEstimate::from_population(&signal, &floor, dt, opts)?;
    let spec = kl_decompose(&est)?;
    println!("leading variance {:.9} (planted 0.4)", spec.variances[0]);
    println!("overlap {:.9}", spec.modes[0].overlap(&planted)?.abs());
    println!("next variance {:.9}", spec.variances[1]);
    Ok(())
}
