use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;

use super::FidRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMode {
    #[default]
    Magnitude,
    /// Real part after zero-order phasing; peaks keep their sign.
    Real,
}

impl fmt::Display for SpectrumMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumMode::Magnitude => "magnitude",
            SpectrumMode::Real => "real",
        })
    }
}

impl FromStr for SpectrumMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(SpectrumMode::Magnitude),
            "real" => Ok(SpectrumMode::Real),
            _ => Err(Error::Acquisition("spectrum mode must be `magnitude` or `real`")),
        }
    }
}

/// `f_k = (k − N/2)/(N·dwell)` for `k = 0..N`, the order produced by
/// [`Spectrum::from_fid`].
pub fn frequency_axis(n: usize, dwell: f64) -> Vec<f64> {
    let span = n as f64 * dwell;
    (0..n)
        .map(|k| (k as f64 - (n / 2) as f64) / span)
        .collect()
}

/// Complex spectrum on an increasing frequency axis in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freq_hz: Vec<f64>,
    pub amplitude: Vec<Complex64>,
    pub mode: SpectrumMode,
}

impl Spectrum {
    /// Transforms `fid` with `dft`, which must compute the unnormalized
    /// forward transform `X_k = Σ_m x_m e^{−2πi·km/N}` in place. The
    /// result is reordered so that zero frequency sits at index `N/2`.
    pub fn from_fid(
        fid: &FidRecord,
        mode: SpectrumMode,
        dft: impl FnOnce(&mut [Complex64]),
    ) -> Self {
        let n = fid.samples.len();
        let mut buf = fid.samples.clone();
        dft(&mut buf);
        buf.rotate_left(n - n / 2);
        Self {
            freq_hz: frequency_axis(n, fid.dwell),
            amplitude: buf,
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitude.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitude.is_empty()
    }

    /// Multiplies every bin by `e^{−iφ}`.
    pub fn phased(&self, phi: f64) -> Self {
        let rot = Complex64::cis(-phi);
        Self {
            freq_hz: self.freq_hz.clone(),
            amplitude: self.amplitude.iter().map(|a| a * rot).collect(),
            mode: self.mode,
        }
    }

    /// Display value of each bin under the spectrum's mode.
    pub fn values(&self) -> Vec<f64> {
        self.amplitude
            .iter()
            .map(|a| match self.mode {
                SpectrumMode::Magnitude => a.norm(),
                SpectrumMode::Real => a.re,
            })
            .collect()
    }

    /// Index of the largest-magnitude bin with `lo <= f <= hi`.
    pub fn peak_bin(&self, lo: f64, hi: f64) -> Result<usize> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::EmptyWindow { lo, hi });
        }
        self.freq_hz
            .iter()
            .zip(&self.amplitude)
            .enumerate()
            .filter(|(_, (f, _))| **f >= lo && **f <= hi)
            .max_by(|(_, (_, a)), (_, (_, b))| a.norm().total_cmp(&b.norm()))
            .map(|(i, _)| i)
            .ok_or(Error::EmptyWindow { lo, hi })
    }

    /// Phase that makes the largest bin in the window real and positive.
    pub fn zero_order_phase(&self, lo: f64, hi: f64) -> Result<f64> {
        let a = self.amplitude[self.peak_bin(lo, hi)?];
        Ok(a.arg())
    }
}

/// Largest magnitude inside `[lo, hi]` Hz; in real mode it carries the sign
/// of the real part at that bin.
pub fn peak_amplitude(spec: &Spectrum, lo: f64, hi: f64) -> Result<f64> {
    let a = spec.amplitude[spec.peak_bin(lo, hi)?];
    Ok(match spec.mode {
        SpectrumMode::Magnitude => a.norm(),
        SpectrumMode::Real if a.re < 0.0 => -a.norm(),
        SpectrumMode::Real => a.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinsys::SpinSet;
    use core::f64::consts::PI;

    fn naive_dft(x: &mut [Complex64]) {
        let n = x.len();
        let src = x.to_vec();
        for (k, out) in x.iter_mut().enumerate() {
            *out = src
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::cis(-2.0 * PI * (k * m % n) as f64 / n as f64))
                .sum();
        }
    }

    fn tone(nu: f64, n: usize, dwell: f64, amp: Complex64) -> FidRecord {
        FidRecord {
            dwell,
            samples: (0..n)
                .map(|m| amp * Complex64::cis(2.0 * PI * nu * m as f64 * dwell))
                .collect(),
            detect: SpinSet::single(1),
            line_broadening_hz: 0.0,
            acquired: n,
        }
    }

    #[test]
    fn axis_layout() {
        let f = frequency_axis(8, 1e-3);
        assert_eq!(f[4], 0.0);
        assert_eq!(f[0], -500.0);
        assert_eq!(f[7], 375.0);
        assert!(f.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tone_lands_on_its_bin() {
        // 100 Hz with a 1/(64·1e-3) = 15.625 Hz bin: nearest bin is 93.75.
        let fid = tone(100.0, 64, 1e-3, Complex64::new(1.0, 0.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Magnitude, naive_dft);
        let k = spec.peak_bin(-500.0, 500.0).unwrap();
        assert_eq!(spec.freq_hz[k], 93.75);
        let fid = tone(125.0, 64, 1e-3, Complex64::new(1.0, 0.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Magnitude, naive_dft);
        assert!((peak_amplitude(&spec, 100.0, 150.0).unwrap() - 64.0).abs() < 1e-9);
        assert!(peak_amplitude(&spec, -300.0, -200.0).unwrap() < 1e-9);
    }

    #[test]
    fn negative_frequencies() {
        let fid = tone(-250.0, 32, 1e-3, Complex64::new(1.0, 0.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Magnitude, naive_dft);
        let k = spec.peak_bin(-1e4, 1e4).unwrap();
        assert_eq!(spec.freq_hz[k], -250.0);
    }

    #[test]
    fn signed_real_mode() {
        let fid = tone(125.0, 64, 1e-3, Complex64::new(0.0, 2.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Real, naive_dft);
        let phi = spec.zero_order_phase(100.0, 150.0).unwrap();
        assert!((phi - PI / 2.0).abs() < 1e-12);
        let phased = spec.phased(phi);
        assert!((peak_amplitude(&phased, 100.0, 150.0).unwrap() - 128.0).abs() < 1e-9);
        let flipped = spec.phased(phi + PI);
        assert!((peak_amplitude(&flipped, 100.0, 150.0).unwrap() + 128.0).abs() < 1e-9);
    }

    #[test]
    fn zero_fid_zero_spectrum() {
        let fid = tone(0.0, 16, 1e-3, Complex64::new(0.0, 0.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Magnitude, naive_dft);
        assert!(spec.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn empty_window() {
        let fid = tone(0.0, 16, 1e-3, Complex64::new(1.0, 0.0));
        let spec = Spectrum::from_fid(&fid, SpectrumMode::Magnitude, naive_dft);
        assert!(matches!(
            peak_amplitude(&spec, 1e5, 2e5),
            Err(Error::EmptyWindow { .. })
        ));
        assert!(peak_amplitude(&spec, 10.0, -10.0).is_err());
        assert!(peak_amplitude(&spec, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn modes_parse() {
        assert_eq!("real".parse::<SpectrumMode>().unwrap(), SpectrumMode::Real);
        assert_eq!(
            "magnitude".parse::<SpectrumMode>().unwrap(),
            SpectrumMode::Magnitude
        );
        assert!("power".parse::<SpectrumMode>().is_err());
    }
}
