//! Binary record files.
//!
//! Layout (little endian): magic `SPLT1`, `sample_rate` f64, `pulse_T` f64,
//! `n_cycles` u64, `n_samples` u64, `seed` u64, then per cycle `n_samples` doubles of
//! the cosine channel followed by the sine channel. A one-line JSON sidecar
//! `<file>.json` carries the full acquisition config and provenance.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::{AcquisitionConfig, HomodyneRecord, RecordEnsemble, CALIBRATION};
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"SPLT1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordHeader {
    pub sample_rate: f64,
    pub pulse_t: f64,
    pub n_cycles: u64,
    pub n_samples: u64,
    pub seed: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the ensemble and its sidecar. `provenance` is stored under `"provenance"`.
pub fn write_records(path: &Path, ens: &RecordEnsemble, provenance: &Value) -> Result<()> {
    let acq = &ens.acquisition;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&acq.sample_rate_hz.to_le_bytes())?;
    w.write_all(&acq.pulse_duration_s.to_le_bytes())?;
    w.write_all(&(ens.len() as u64).to_le_bytes())?;
    w.write_all(&(ens.n_samples() as u64).to_le_bytes())?;
    w.write_all(&acq.rng_seed.to_le_bytes())?;
    for r in &ens.records {
        for v in r.pc.iter().chain(&r.ps) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    let side = json!({ "acquisition": acq, "provenance": provenance });
    let mut s = serde_json::to_string(&side)?;
    s.push('\n');
    std::fs::write(sidecar_path(path), s)?;
    Ok(())
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated file".into()))?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format("truncated file".into()))?;
    Ok(u64::from_le_bytes(b))
}

/// Reads a record file. The acquisition config comes from the sidecar when present,
/// otherwise it is rebuilt from the header with default filter settings.
pub fn read_records(path: &Path) -> Result<(RecordEnsemble, RecordHeader, Option<Value>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let header = RecordHeader {
        sample_rate: read_f64(&mut r)?,
        pulse_t: read_f64(&mut r)?,
        n_cycles: read_u64(&mut r)?,
        n_samples: read_u64(&mut r)?,
        seed: read_u64(&mut r)?,
    };
    let sidecar: Option<Value> = match std::fs::read_to_string(sidecar_path(path)) {
        Ok(s) => Some(serde_json::from_str(&s)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let mut acq = match sidecar.as_ref().and_then(|v| v.get("acquisition")) {
        Some(a) => serde_json::from_value::<AcquisitionConfig>(a.clone())?,
        None => AcquisitionConfig {
            sample_rate_hz: header.sample_rate,
            pulse_duration_s: header.pulse_t,
            rng_seed: header.seed,
            ..Default::default()
        },
    };
    acq.n_cycles = header.n_cycles as usize;
    if acq.n_samples() as u64 != header.n_samples {
        return Err(Error::Format(format!(
            "header holds {} samples per record, config implies {}",
            header.n_samples,
            acq.n_samples()
        )));
    }
    let n = header.n_samples as usize;
    let dt = 1.0 / header.sample_rate;
    let mut records = Vec::with_capacity(header.n_cycles as usize);
    let mut buf = vec![0u8; 16 * n];
    for cycle in 0..header.n_cycles {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("truncated at cycle {cycle}")))?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        records.push(HomodyneRecord {
            pc: vals[..n].to_vec(),
            ps: vals[n..].to_vec(),
            dt,
            cycle_id: cycle,
            calibration: CALIBRATION,
        });
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after last record".into()));
    }
    Ok((RecordEnsemble::new(acq, records)?, header, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homodyne::shot_noise_reference;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.splt");
        let acq = AcquisitionConfig {
            shot_noise_ref_cycles: 5,
            rng_seed: 3,
            ..Default::default()
        };
        let ens = shot_noise_reference(&acq).unwrap();
        write_records(&path, &ens, &json!({"kind": "reference"})).unwrap();
        let (back, header, side) = read_records(&path).unwrap();
        assert_eq!(back.records, ens.records);
        assert_eq!(header.n_cycles, 5);
        assert_eq!(header.seed, 3);
        assert_eq!(side.unwrap()["provenance"]["kind"], "reference");
        let bytes = std::fs::metadata(&path).unwrap().len();
        assert_eq!(bytes, 5 + 5 * 8 + 5 * 2 * 188 * 8);
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.splt");
        std::fs::write(&path, b"NOPE!").unwrap();
        assert!(matches!(read_records(&path), Err(Error::Format(_))));
        let mut good = Vec::from(&MAGIC[..]);
        good.extend(12_500f64.to_le_bytes());
        good.extend(0.015f64.to_le_bytes());
        good.extend(3u64.to_le_bytes());
        good.extend(188u64.to_le_bytes());
        good.extend(0u64.to_le_bytes());
        good.extend([0u8; 100]);
        std::fs::write(&path, good).unwrap();
        assert!(matches!(read_records(&path), Err(Error::Format(_))));
    }
}
