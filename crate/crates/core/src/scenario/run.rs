use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::analysis::{
    mean_decay_analysis, mode_analysis, spectrum_analysis, MeanDecayReport, ModeReport,
    SpectrumReport,
};
use super::{Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::homodyne::{
    read_records, shot_noise_reference, simulate_ensemble, vacuum_ensemble, write_records,
    Quadrature, RecordEnsemble,
};
use crate::interaction::SwapParams;

/// Everything a run reports, as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub kind: ScenarioKind,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub cycles: usize,
    pub calibration_note: Option<String>,
    pub params: Option<SwapParams>,
    pub mean_decay: Option<MeanDecayReport>,
    pub spectrum: Option<SpectrumReport>,
    pub modes: Option<ModeReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub report: RunReport,
    /// Artifact file names with their SHA-256, sorted by name.
    pub artifacts: Vec<(String, String)>,
}

fn prepare_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)?.next().is_some();
        if occupied && !force {
            return Err(Error::OutputExists(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn write_mean_decay(dir: &Path, r: &MeanDecayReport) -> Result<()> {
    write_csv(
        &dir.join("mean_decay.csv"),
        &names(&["t_s", "mean_x", "mean_p", "expected_x", "expected_p"]),
        (0..r.times.len()).map(|i| {
            vec![r.times[i], r.mean_x[i], r.mean_p[i], r.expected_x[i], r.expected_p[i]]
        }),
    )
}

fn write_spectrum(dir: &Path, r: &SpectrumReport) -> Result<()> {
    write_csv(
        &dir.join("spectrum.csv"),
        &names(&["offset_hz", "measured_db", "analytic_db", "reference_deviation_db"]),
        (0..r.offsets_hz.len()).map(|i| {
            vec![
                r.offsets_hz[i],
                r.measured_db[i],
                r.analytic_db[i],
                r.reference_deviation_db[i],
            ]
        }),
    )
}

fn write_modes(dir: &Path, r: &ModeReport, cov: &DMatrix<f64>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(r)?;
    json.push('\n');
    fs::write(dir.join("mode_spectrum.json"), json)?;
    write_csv(
        &dir.join("mode_spectrum.csv"),
        &names(&[
            "index",
            "variance",
            "db",
            "held_out_variance",
            "held_out_db",
            "error",
            "ci_low",
            "ci_high",
            "rate_per_s",
            "fit_residual",
        ]),
        r.modes.iter().map(|m| {
            vec![
                m.index as f64,
                m.variance,
                m.db,
                m.held_out_variance,
                m.held_out_db,
                m.error,
                m.bootstrap_ci[0],
                m.bootstrap_ci[1],
                m.fit.rate,
                m.fit.residual,
            ]
        }),
    )?;
    let mut header = names(&["t_s"]);
    header.extend((0..r.mode_functions.len()).map(|k| format!("mode_{k}")));
    write_csv(
        &dir.join("mode_functions.csv"),
        &header,
        (0..r.times_s.len()).map(|i| {
            std::iter::once(r.times_s[i])
                .chain(r.mode_functions.iter().map(|m| m[i]))
                .collect()
        }),
    )?;
    let header: Vec<String> = (0..cov.ncols()).map(|j| format!("c{j}")).collect();
    write_csv(
        &dir.join("covariance.csv"),
        &header,
        cov.row_iter().map(|row| row.iter().copied().collect()),
    )
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

/// Writes `report.json` and `manifest.json`, hashing every other file in `dir`.
fn finish(dir: &Path, scenario: &Scenario, report: RunReport) -> Result<RunSummary> {
    let mut report_json = serde_json::to_string_pretty(&report)?;
    report_json.push('\n');
    fs::write(dir.join("report.json"), report_json)?;
    let mut files: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != "manifest.json")
        .collect();
    files.sort();
    let artifacts = files
        .into_iter()
        .map(|f| {
            let h = sha256_file(&dir.join(&f))?;
            Ok((f, h))
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "version": report.version,
        "name": report.name,
        "seed": report.seed,
        "cycles": report.cycles,
        "config_sha256": report.config_sha256,
        "scenario": scenario,
        "artifacts": artifacts
            .iter()
            .map(|(f, h)| json!({ "file": f, "sha256": h }))
            .collect::<Vec<Value>>(),
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(RunSummary {
        directory: dir.to_path_buf(),
        report,
        artifacts,
    })
}

fn provenance(scenario: &Scenario, quadrature: Quadrature, stream: &str) -> Result<Value> {
    Ok(json!({
        "scenario": scenario,
        "config_sha256": scenario.config_hash()?,
        "quadrature": quadrature,
        "stream": stream,
    }))
}

/// Spectrum and mode analysis of P-quadrature (or vacuum) records.
fn analyze_into(
    dir: &Path,
    scenario: &Scenario,
    params: Option<&SwapParams>,
    records: &RecordEnsemble,
    reference: &RecordEnsemble,
    with_modes: bool,
) -> Result<(SpectrumReport, Option<ModeReport>)> {
    let initial = scenario.initial.atoms();
    let spectrum = spectrum_analysis(params, &initial, records, reference)?;
    write_spectrum(dir, &spectrum)?;
    if !with_modes {
        return Ok((spectrum, None));
    }
    let (modes, _, est) = mode_analysis(
        records,
        reference,
        &scenario.analysis,
        params.map(|p| (p, &initial)),
        scenario.acquisition.rng_seed,
    )?;
    write_modes(dir, &modes, &est.c)?;
    Ok((spectrum, Some(modes)))
}

fn default_dir(scenario: &Scenario) -> PathBuf {
    scenario
        .output
        .as_ref()
        .map(|o| o.directory.clone())
        .unwrap_or_else(|| Path::new("runs").join(&scenario.name))
}

/// Simulates and analyzes a scenario, writing records, CSV tables, `report.json` and
/// `manifest.json`. Refuses a non-empty output directory unless `force` is set.
pub fn run_scenario(scenario: &Scenario, out: Option<&Path>, force: bool) -> Result<RunSummary> {
    let params = scenario.validate()?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| default_dir(scenario));
    prepare_dir(&dir, force)?;
    let acq = &scenario.acquisition;
    let initial = scenario.initial.atoms();
    let mut report = RunReport {
        name: scenario.name.clone(),
        kind: scenario.kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: scenario.config_hash()?,
        seed: acq.rng_seed,
        cycles: acq.n_cycles,
        calibration_note: scenario.calibration_note.clone(),
        params,
        mean_decay: None,
        spectrum: None,
        modes: None,
    };
    let need = |p: Option<SwapParams>| p.ok_or_else(|| Error::invalid("couplings", "required"));
    match scenario.kind {
        ScenarioKind::MeanDecay => {
            let p = need(params)?;
            let ens_p = simulate_ensemble(&p, acq, &initial, Quadrature::P)?;
            let acq_x = acq.clone().with_seed(acq.rng_seed.wrapping_add(1));
            let ens_x = simulate_ensemble(&p, &acq_x, &initial, Quadrature::X)?;
            write_records(
                &dir.join("records_p.splt"),
                &ens_p,
                &provenance(scenario, Quadrature::P, "records")?,
            )?;
            write_records(
                &dir.join("records_x.splt"),
                &ens_x,
                &provenance(scenario, Quadrature::X, "records")?,
            )?;
            let r = mean_decay_analysis(&p, &ens_x, &ens_p, &initial, scenario.analysis.fit_skip_s)?;
            write_mean_decay(&dir, &r)?;
            report.mean_decay = Some(r);
        }
        ScenarioKind::PowerSpectrum | ScenarioKind::ModeSpectrum => {
            let p = need(params)?;
            let records = simulate_ensemble(&p, acq, &initial, Quadrature::P)?;
            let reference = shot_noise_reference(acq)?;
            write_records(
                &dir.join("records.splt"),
                &records,
                &provenance(scenario, Quadrature::P, "records")?,
            )?;
            let with_modes = scenario.kind == ScenarioKind::ModeSpectrum;
            let (s, m) = analyze_into(&dir, scenario, Some(&p), &records, &reference, with_modes)?;
            report.spectrum = Some(s);
            report.modes = m;
        }
        ScenarioKind::VacuumReference => {
            let records = vacuum_ensemble(acq)?;
            let reference = shot_noise_reference(acq)?;
            write_records(
                &dir.join("records.splt"),
                &records,
                &provenance(scenario, Quadrature::P, "vacuum")?,
            )?;
            let (s, m) = analyze_into(&dir, scenario, None, &records, &reference, true)?;
            report.params = None;
            report.spectrum = Some(s);
            report.modes = m;
        }
    }
    finish(&dir, scenario, report)
}

/// Re-analyzes a record file. The shot-noise reference is regenerated from the seed
/// stored next to the records; `whitening` overrides the stored analysis option.
pub fn analyze_records(
    path: &Path,
    out: &Path,
    whitening: Option<bool>,
    force: bool,
) -> Result<RunSummary> {
    let (records, _, sidecar) = read_records(path)?;
    let prov = sidecar.as_ref().and_then(|s| s.get("provenance"));
    let stored = prov.and_then(|p| p.get("scenario")).cloned();
    let mut scenario: Scenario = match stored {
        Some(v) => serde_json::from_value(v)?,
        None => Scenario {
            name: "records".into(),
            kind: ScenarioKind::ModeSpectrum,
            description: None,
            calibration_note: None,
            couplings: None,
            atomic: None,
            decoherence: None,
            acquisition: records.acquisition.clone(),
            initial: Default::default(),
            analysis: Default::default(),
            output: None,
        },
    };
    scenario.acquisition = records.acquisition.clone();
    if let Some(w) = whitening {
        scenario.analysis.whitening = w;
    }
    let quadrature = prov
        .and_then(|p| p.get("quadrature"))
        .and_then(|q| serde_json::from_value::<Quadrature>(q.clone()).ok());
    let vacuum = prov.and_then(|p| p.get("stream")).and_then(Value::as_str) == Some("vacuum");
    let params = match (&scenario.couplings, &scenario.atomic) {
        (None, None) => None,
        _ if vacuum || quadrature != Some(Quadrature::P) => None,
        _ => Some(scenario.swap_params()?),
    };
    prepare_dir(out, force)?;
    let reference = shot_noise_reference(&records.acquisition)?;
    let (s, m) = analyze_into(out, &scenario, params.as_ref(), &records, &reference, true)?;
    let report = RunReport {
        name: scenario.name.clone(),
        kind: scenario.kind,
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: scenario.config_hash()?,
        seed: records.acquisition.rng_seed,
        cycles: records.len(),
        calibration_note: scenario.calibration_note.clone(),
        params,
        mean_decay: None,
        spectrum: Some(s),
        modes: m,
    };
    finish(out, &scenario, report)
}
