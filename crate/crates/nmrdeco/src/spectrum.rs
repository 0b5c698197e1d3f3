//! FFT-backed spectra and simple line picking.

use nmrdeco_core::analysis::{FidRecord, Spectrum, SpectrumMode};
use nmrdeco_core::Complex64;
use rustfft::FftPlanner;

/// Spectrum of `fid` with zero frequency at the centre bin.
pub fn spectrum(fid: &FidRecord, mode: SpectrumMode) -> Spectrum {
    Spectrum::from_fid(fid, mode, |buf: &mut [Complex64]| {
        let fft = FftPlanner::<f64>::new().plan_fft_forward(buf.len());
        fft.process(buf);
    })
}

/// A local maximum of the magnitude spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub bin: usize,
    pub freq_hz: f64,
    pub magnitude: f64,
}

/// Local maxima of `|X|` at or above `rel_threshold` times the global
/// maximum, in increasing frequency order.
pub fn find_lines(spec: &Spectrum, rel_threshold: f64) -> Vec<Line> {
    let mag: Vec<f64> = spec.amplitude.iter().map(|a| a.norm()).collect();
    let top = mag.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    (1..mag.len().saturating_sub(1))
        .filter(|&k| mag[k] >= rel_threshold * top && mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])
        .map(|k| Line {
            bin: k,
            freq_hz: spec.freq_hz[k],
            magnitude: mag[k],
        })
        .collect()
}

/// The pair of lines whose midpoint lies within `j` of `nu` and whose
/// spacing is closest to `j`, as `(centre, spacing)`.
pub fn find_doublet(freqs: &[f64], nu: f64, j: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (i, &a) in freqs.iter().enumerate() {
        for &b in &freqs[i + 1..] {
            let (centre, split) = (0.5 * (a + b), (b - a).abs());
            if (centre - nu).abs() >= j {
                continue;
            }
            if best.is_none_or(|(_, s)| (split - j).abs() < (s - j).abs()) {
                best = Some((centre, split));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use nmrdeco_core::SpinSet;
    use std::f64::consts::PI;

    fn fid(samples: Vec<Complex64>, dwell: f64) -> FidRecord {
        FidRecord {
            dwell,
            acquired: samples.len(),
            samples,
            detect: SpinSet::single(1),
            line_broadening_hz: 0.0,
        }
    }

    #[test]
    fn matches_direct_dft() {
        let x: Vec<Complex64> = (0..32)
            .map(|m| Complex64::new((m as f64 * 0.3).sin(), (m as f64 * 0.11).cos()))
            .collect();
        let spec = spectrum(&fid(x.clone(), 1e-3), SpectrumMode::Magnitude);
        for (i, f) in spec.freq_hz.iter().enumerate() {
            let k = (f * 32.0 * 1e-3).round() as i64;
            let direct: Complex64 = x
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::cis(-2.0 * PI * (k * m as i64) as f64 / 32.0))
                .sum();
            assert!((spec.amplitude[i] - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval() {
        let x: Vec<Complex64> = (0..256)
            .map(|m| Complex64::new((m as f64).sin() * 0.7, (m as f64 * 1.7).cos()))
            .collect();
        let spec = spectrum(&fid(x.clone(), 1e-4), SpectrumMode::Magnitude);
        let time: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let freq: f64 = spec.amplitude.iter().map(|z| z.norm_sqr()).sum::<f64>() / 256.0;
        assert!((time - freq).abs() <= 1e-9 * time);
    }

    #[test]
    fn lines_of_two_tones() {
        let x: Vec<Complex64> = (0..128)
            .map(|m| {
                let t = m as f64 * 1e-3;
                Complex64::cis(2.0 * PI * 125.0 * t) + Complex64::cis(-2.0 * PI * 250.0 * t) * 0.5
            })
            .collect();
        let spec = spectrum(&fid(x, 1e-3), SpectrumMode::Magnitude);
        let lines = find_lines(&spec, 0.1);
        let f: Vec<f64> = lines.iter().map(|l| l.freq_hz).collect();
        assert_eq!(f, [-250.0, 125.0]);
    }

    #[test]
    fn doublet_pairing() {
        let lines = [-500.0, -400.0, 400.0, 505.0, 600.0];
        assert_eq!(find_doublet(&lines, 450.0, 103.0), Some((452.5, 105.0)));
        assert_eq!(find_doublet(&lines, 5000.0, 103.0), None);
    }
}
