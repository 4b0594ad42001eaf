use serde::Serialize;

use super::ModeSpectrum;
use crate::error::{Error, Result};
use crate::interaction::duan_combination;

/// Minimum overlap between the two channels' modes for them to count as one mode.
pub const MODE_MATCH_OVERLAP: f64 = 0.99;

/// Cycles needed before the normal-theory error bound is trusted.
pub const MIN_CERTIFY_CYCLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certification {
    pub value: f64,
    pub sigma: f64,
    /// `value + 3 sigma`.
    pub upper_bound: f64,
    pub overlap: f64,
    pub certified: bool,
}

/// Duan inseparability test on mode `index` of the cosine and sine spectra.
///
/// Certified when both the value and its 3-sigma upper bound lie below 2.
pub fn certify_entanglement(
    spec_c: &ModeSpectrum,
    spec_s: &ModeSpectrum,
    index: usize,
) -> Result<Certification> {
    let n = spec_c.len().min(spec_s.len());
    if index >= n {
        return Err(Error::invalid(
            "mode_index",
            format!("{index} out of range for {n} modes"),
        ));
    }
    let cycles = spec_c.n_cycles.min(spec_s.n_cycles);
    if cycles < MIN_CERTIFY_CYCLES {
        return Err(Error::InsufficientCycles {
            required: MIN_CERTIFY_CYCLES,
            found: cycles,
        });
    }
    let overlap = spec_c.modes[index].overlap(&spec_s.modes[index])?.abs();
    if overlap <= MODE_MATCH_OVERLAP {
        return Err(Error::MismatchedModes {
            overlap,
            required: MODE_MATCH_OVERLAP,
        });
    }
    let value = duan_combination(spec_c.variances[index], spec_s.variances[index])?;
    let sigma = spec_c.errors[index].hypot(spec_s.errors[index]);
    let upper_bound = value + 3.0 * sigma;
    Ok(Certification {
        value,
        sigma,
        upper_bound,
        overlap,
        certified: value < 2.0 && upper_bound < 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::ModeFunction;
    use crate::modes::Channel;

    fn spectrum(var: f64, err: f64, rate: f64, cycles: usize) -> ModeSpectrum {
        ModeSpectrum {
            channel: Channel::Cosine,
            variances: vec![var],
            errors: vec![err],
            modes: vec![ModeFunction::exponential(rate, 4.8e-4, 31).unwrap()],
            n_cycles: cycles,
            whitened: true,
            held_out: true,
            clamped: 0,
        }
    }

    #[test]
    fn ideal_full_swap_certified() {
        let xi2 = 1.0 / 6.3;
        let s = spectrum(xi2, 0.0, 175.0, 1000);
        let c = certify_entanglement(&s, &s, 0).unwrap();
        assert!((c.value - 2.0 * xi2).abs() < 1e-12);
        assert!(c.certified);
    }

    #[test]
    fn vacuum_not_certified() {
        let s = spectrum(1.0, 0.014, 175.0, 10_000);
        let c = certify_entanglement(&s, &s, 0).unwrap();
        assert!(!c.certified);
    }

    #[test]
    fn guards() {
        let a = spectrum(0.5, 0.01, 175.0, 1000);
        let b = spectrum(0.5, 0.01, -175.0, 1000);
        assert!(matches!(
            certify_entanglement(&a, &b, 0),
            Err(Error::MismatchedModes { .. })
        ));
        assert!(certify_entanglement(&a, &a, 1).is_err());
        let few = spectrum(0.5, 0.01, 175.0, 5);
        assert!(matches!(
            certify_entanglement(&few, &few, 0),
            Err(Error::InsufficientCycles { .. })
        ));
    }
}
