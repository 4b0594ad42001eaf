// Writing records to disk and re-analyzing them.

use serde_json::json;
use swaplight::homodyne::{
    read_records, simulate_ensemble, write_records, AcquisitionConfig, InitialAtoms, Quadrature,
};
use swaplight::interaction::SwapParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("swaplight_records_io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("records.splt");

    let acq = AcquisitionConfig::default().with_cycles(200).with_seed(7);
    let ens = simulate_ensemble(&SwapParams::operating_point(), &acq, &InitialAtoms::Css, Quadrature::P)?;
    write_records(&path, &ens, &json!({ "note": "example" }))?;

    let (back, header, sidecar) = read_records(&path)?;
    assert_eq!(back.records, ens.records);
    println!("{} cycles x {} samples, seed {}", header.n_cycles, header.n_samples, header.seed);
    println!("sidecar: {}", sidecar.map(|v| v["provenance"].to_string()).unwrap_or_default());
    Ok(())
}
