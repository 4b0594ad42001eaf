use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::discretize::StepConstants;
use super::filter::Detector;
use super::rng::{cycle_rng, RngDomain};
use super::{
    AcquisitionConfig, HomodyneRecord, InitialAtoms, Quadrature, RecordEnsemble, CALIBRATION,
};
use crate::error::{Error, Result};
use crate::interaction::SwapParams;

/// Output coupling `c` and input coupling `d` of the atomic variable that feeds the
/// selected output quadrature.
pub(crate) fn channel_couplings(params: &SwapParams, quadrature: Quadrature) -> (f64, f64) {
    match quadrature {
        Quadrature::P => (-params.chi_diff(), params.chi_sum()),
        Quadrature::X => (params.chi_sum(), -params.chi_diff()),
    }
}

/// Precomputed per-cycle generator.
#[derive(Debug, Clone)]
pub struct CycleSimulator {
    step: StepConstants,
    detector: Detector,
    n_samples: usize,
    efficiency: f64,
    initial: [(f64, f64); 2],
    seed: u64,
    domain: RngDomain,
    dt: f64,
    /// Internal step.
    h: f64,
}

impl CycleSimulator {
    pub fn new(
        params: &SwapParams,
        acq: &AcquisitionConfig,
        initial: &InitialAtoms,
        quadrature: Quadrature,
    ) -> Result<Self> {
        acq.validate()?;
        params.validate()?;
        acq.check_step(params)?;
        let (c, d) = channel_couplings(params, quadrature);
        let g = params.gamma_sw + params.gamma_dec;
        let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz)?;
        let h = acq.dt() / detector.oversample() as f64;
        Ok(Self {
            step: StepConstants::new(c, d, g, params.gamma_dec, h),
            detector,
            n_samples: acq.n_samples(),
            efficiency: acq.detection_efficiency,
            initial: [
                initial.moments(0, quadrature)?,
                initial.moments(1, quadrature)?,
            ],
            seed: acq.rng_seed,
            domain: RngDomain::Records,
            dt: acq.dt(),
            h,
        })
    }

    /// Generator with the atoms decoupled from the light.
    pub fn reference(acq: &AcquisitionConfig) -> Result<Self> {
        acq.validate()?;
        let detector = Detector::new(acq.detection_bandwidth_hz, acq.sample_rate_hz)?;
        let h = acq.dt() / detector.oversample() as f64;
        Ok(Self {
            step: StepConstants::decoupled(h),
            detector,
            n_samples: acq.n_samples(),
            efficiency: 1.0,
            initial: [(0.0, 0.0); 2],
            seed: acq.rng_seed,
            domain: RngDomain::Reference,
            dt: acq.dt(),
            h,
        })
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    /// Calibrated, pre-filter samples of one channel on the internal grid, including
    /// the vacuum padding on both sides of the pulse.
    pub fn raw_channel(&self, rng: &mut ChaCha8Rng, channel: usize) -> Vec<f64> {
        let pad = self.detector.pad();
        let steps = self.n_samples * self.detector.oversample();
        let vac = CALIBRATION * (0.5 / self.h).sqrt();
        let k = &self.step;
        let mut out = Vec::with_capacity(self.detector.raw_len(self.n_samples));

        let (mean, var) = self.initial[channel];
        let mut s = mean + var.sqrt() * rng.sample::<f64, _>(StandardNormal);
        for _ in 0..pad {
            out.push(vac * rng.sample::<f64, _>(StandardNormal));
        }
        let lossy = self.efficiency < 1.0;
        let (keep, mix) = (self.efficiency.sqrt(), (1.0 - self.efficiency).sqrt());
        for _ in 0..steps {
            let z = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let [w, z1, z2] = k.correlate(z);
            let mut y = CALIBRATION * (w + k.c * (s * k.mean_factor + z2));
            if lossy {
                y = keep * y + mix * vac * rng.sample::<f64, _>(StandardNormal);
            }
            out.push(y);
            s = k.decay * s + z1;
        }
        for _ in 0..pad {
            out.push(vac * rng.sample::<f64, _>(StandardNormal));
        }
        out
    }

    pub fn cycle(&self, cycle_id: u64) -> HomodyneRecord {
        let mut rng = cycle_rng(self.seed, self.domain, cycle_id);
        let raw_c = self.raw_channel(&mut rng, 0);
        let raw_s = self.raw_channel(&mut rng, 1);
        HomodyneRecord {
            pc: self.detector.apply(&raw_c),
            ps: self.detector.apply(&raw_s),
            dt: self.dt,
            cycle_id,
            calibration: CALIBRATION,
        }
    }

    fn ensemble(&self, acq: AcquisitionConfig, n: usize) -> Result<RecordEnsemble> {
        let records: Vec<HomodyneRecord> =
            (0..n as u64).into_par_iter().map(|i| self.cycle(i)).collect();
        RecordEnsemble::new(acq, records)
    }
}

/// One record of the cascade, reproducible from `(rng_seed, cycle)`.
pub fn simulate_cycle(
    params: &SwapParams,
    acq: &AcquisitionConfig,
    cycle: u64,
    initial: &InitialAtoms,
    quadrature: Quadrature,
) -> Result<HomodyneRecord> {
    if cycle >= acq.n_cycles as u64 {
        return Err(Error::invalid(
            "cycle",
            format!("cycle {cycle} outside 0..{}", acq.n_cycles),
        ));
    }
    Ok(CycleSimulator::new(params, acq, initial, quadrature)?.cycle(cycle))
}

/// All `n_cycles` records, generated in parallel.
pub fn simulate_ensemble(
    params: &SwapParams,
    acq: &AcquisitionConfig,
    initial: &InitialAtoms,
    quadrature: Quadrature,
) -> Result<RecordEnsemble> {
    CycleSimulator::new(params, acq, initial, quadrature)?.ensemble(acq.clone(), acq.n_cycles)
}

/// Shot-noise reference: `shot_noise_ref_cycles` records with the atoms decoupled.
pub fn shot_noise_reference(acq: &AcquisitionConfig) -> Result<RecordEnsemble> {
    let sim = CycleSimulator::reference(acq)?;
    let mut ref_acq = acq.clone();
    ref_acq.n_cycles = acq.shot_noise_ref_cycles;
    sim.ensemble(ref_acq, acq.shot_noise_ref_cycles)
}

/// Records with the atoms decoupled, drawn from the signal streams: a vacuum control
/// that is statistically identical to, but independent of, the shot-noise reference.
pub fn vacuum_ensemble(acq: &AcquisitionConfig) -> Result<RecordEnsemble> {
    let mut sim = CycleSimulator::reference(acq)?;
    sim.domain = RngDomain::Records;
    sim.ensemble(acq.clone(), acq.n_cycles)
}

/// Pre-filter cosine channel of one reference cycle on the internal grid, padding
/// included.
pub fn unfiltered_reference_cycle(acq: &AcquisitionConfig, cycle: u64) -> Result<Vec<f64>> {
    let sim = CycleSimulator::reference(acq)?;
    let mut rng = cycle_rng(acq.rng_seed, RngDomain::Reference, cycle);
    Ok(sim.raw_channel(&mut rng, 0))
}
