// Temporal modes of the output light, scored on held-out cycles, and the
// inseparability test on the leading mode.

use swaplight::homodyne::{
    shot_noise_reference, simulate_ensemble, AcquisitionConfig, InitialAtoms, Quadrature,
};
use swaplight::interaction::SwapParams;
use swaplight::modes::{certify_entanglement, cross_fit, fit_exponential_mode, CovarianceOptions};

fn main() -> swaplight::Result<()> {
    let params = SwapParams::from_xi_squared(1.0 / 3.9e-3, 1.0 / 6.3, 15e-3)?
        .with_decoherence(1.0 / 12.2e-3)?;
    let acq = AcquisitionConfig {
        n_cycles: 4000,
        detection_efficiency: 0.66,
        rng_seed: 2,
        ..Default::default()
    };
    let records = simulate_ensemble(&params, &acq, &InitialAtoms::Css, Quadrature::P)?;
    let reference = shot_noise_reference(&acq)?;
    let cf = cross_fit(&records, &reference, CovarianceOptions::default(), 100, 2)?;

    for k in 0..4 {
        let fit = fit_exponential_mode(&cf.in_sample.modes[k])?;
        println!(
            "mode {k}: {:+.2} dB held-out, {:+.2} dB in-sample, rate {:.0} s^-1",
            10.0 * cf.combined.variances[k].log10(),
            10.0 * cf.in_sample.variances[k].log10(),
            fit.rate
        );
    }
    let duan = certify_entanglement(&cf.cosine, &cf.sine, 0)?;
    println!(
        "Duan sum {:.3} +/- {:.3}: {}",
        duan.value,
        duan.sigma,
        if duan.certified { "inseparable" } else { "not certified" }
    );
    Ok(())
}
