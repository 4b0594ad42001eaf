// RF-displaced atoms: the ensemble-mean output decays at the swap rate and the X/P
// amplitude ratio measures 1/xi^2.

use swaplight::homodyne::{simulate_ensemble, AcquisitionConfig, InitialAtoms, Quadrature};
use swaplight::interaction::SwapParams;
use swaplight::scenario::mean_decay_analysis;

fn main() -> swaplight::Result<()> {
    let params = SwapParams::operating_point();
    let initial = InitialAtoms::Displaced { x: 10.0, p: 10.0 };
    let acq = AcquisitionConfig::default().with_cycles(2000).with_seed(1);
    let ens_p = simulate_ensemble(&params, &acq, &initial, Quadrature::P)?;
    let ens_x = simulate_ensemble(&params, &acq.clone().with_seed(2), &initial, Quadrature::X)?;

    let r = mean_decay_analysis(&params, &ens_x, &ens_p, &initial, 1e-3)?;
    println!("rate  X {:.1}, P {:.1}, expected {:.1} s^-1", r.rate_x, r.rate_p, r.expected_rate);
    println!("ratio {:.3}, expected {:.3}", r.amplitude_ratio, r.expected_ratio);
    Ok(())
}
