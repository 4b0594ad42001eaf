// Couplings from optical and atomic inputs, and the regimes the model rejects.

use swaplight::interaction::{couplings_from_physics, AtomicConfig, SwapParams};

fn main() -> swaplight::Result<()> {
    let atoms = AtomicConfig::cesium_operating_point();
    let p = couplings_from_physics(&atoms, 15e-3)?;
    println!("gamma_sw = 1/({:.2} ms)", 1e3 / p.gamma_sw);
    println!("xi^2     = 1/{:.2}", 1.0 / p.xi_squared());
    println!("kappa    = {:.4}", p.kappa()?);
    println!("chi_a = {:.3}, chi_p = {:.3} (s^-1/2)", p.chi_a, p.chi_p);

    for xi2 in [0.0, 1.5] {
        match SwapParams::from_xi_squared(175.4, xi2, 15e-3) {
            Ok(_) => println!("xi^2 = {xi2}: accepted"),
            Err(e) => println!("xi^2 = {xi2}: {e}"),
        }
    }
    Ok(())
}
