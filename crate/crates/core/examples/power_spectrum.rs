// Noise spectrum around the Larmor sideband against its exact expectation.

use swaplight::homodyne::{
    shot_noise_reference, simulate_ensemble, AcquisitionConfig, InitialAtoms, Quadrature,
};
use swaplight::interaction::SwapParams;
use swaplight::scenario::spectrum_analysis;

fn main() -> swaplight::Result<()> {
    let params = SwapParams::operating_point();
    let acq = AcquisitionConfig {
        n_cycles: 4000,
        shot_noise_ref_cycles: 8000,
        rng_seed: 3,
        ..Default::default()
    };
    let records = simulate_ensemble(&params, &acq, &InitialAtoms::Css, Quadrature::P)?;
    let reference = shot_noise_reference(&acq)?;
    let s = spectrum_analysis(Some(&params), &InitialAtoms::Css, &records, &reference)?;

    println!("zero offset: {:.2} dB (exact {:.2} dB)", s.zero_offset_db, s.analytic_zero_offset_db);
    println!("dip width: {:.0} Hz", s.dip_width_hz.unwrap_or(f64::NAN));
    println!("reference flatness in band: {:.3} dB", s.reference_max_deviation_db);
    for (f, (m, a)) in s.offsets_hz.iter().zip(s.measured_db.iter().zip(&s.analytic_db)) {
        if f.abs() <= 1000.0 {
            println!("{f:>8.1} Hz  {m:+.2}  {a:+.2}");
        }
    }
    Ok(())
}
