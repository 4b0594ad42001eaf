// A shaped drive that makes the emitted temporal mode flat in the middle of the pulse.

use swaplight::interaction::{emitted_mode, flat_top_profile, output_mode_shape};

fn main() -> swaplight::Result<()> {
    let (dt, n) = (1e-5, 1500);
    // Diverges at t = 1/gamma0; stop the pulse at 90% of that.
    let gamma0 = 0.9 / (dt * (n - 1) as f64);
    let profile = flat_top_profile(gamma0, dt, n)?;
    let shape = output_mode_shape(&profile, dt)?;
    let emitted = emitted_mode(&profile, dt, 1.0 / 6.3f64.sqrt(), 4)?;

    let centre = &shape.samples[n / 10..n - n / 10];
    let mean = centre.iter().sum::<f64>() / centre.len() as f64;
    let var = centre.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / centre.len() as f64;
    println!("coefficient of variation, central 80%: {:.2e}", var.sqrt() / mean);
    println!("emitted vs formula overlap: {:.6}", shape.overlap(&emitted)?.abs());
    println!("rate at start / end: {:.1} / {:.1} s^-1", profile[0], profile[n - 1]);
    Ok(())
}
