// Full swap of a coherent atomic state into light, in covariance form.

use swaplight::gaussian::{apply_map, swap_io_map, vacuum_state};
use swaplight::interaction::SwapParams;

fn main() -> swaplight::Result<()> {
    let params = SwapParams::operating_point();
    let map = swap_io_map(params.xi, params.kappa()?)?;
    println!("symplectic deviation: {:.1e}", map.deviation());

    let out = apply_map(&vacuum_state(2)?, &map)?;
    let ratio = out.variance_ratio(1, 1);
    println!("light P variance / vacuum: {ratio:.4} ({:.2} dB)", 10.0 * ratio.log10());
    println!("light X variance / vacuum: {:.4}", out.variance_ratio(1, 0));
    println!("symplectic eigenvalues: {:?}", out.symplectic_eigenvalues());
    Ok(())
}
