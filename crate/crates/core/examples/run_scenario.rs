// Running a bundled scenario with a reduced cycle count.

use std::path::Path;

use swaplight::scenario::{run_scenario, validate_config, Scenario};

fn main() -> swaplight::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/fig5_mode_spectrum.toml");
    for d in validate_config(&path)? {
        println!("{d}");
    }
    let mut scenario = Scenario::load(&path)?;
    scenario.acquisition.n_cycles = 1000;
    scenario.analysis.bootstrap_resamples = 50;

    let out = std::env::temp_dir().join("swaplight_run_scenario");
    let summary = run_scenario(&scenario, Some(&out), true)?;
    if let Some(m) = &summary.report.modes {
        println!("leading mode {:+.2} dB", m.modes[0].held_out_db);
    }
    for (file, hash) in &summary.artifacts {
        println!("{file:<22} {}", &hash[..12]);
    }
    Ok(())
}
