//! The decoherence scan: peak amplitude of spin 1's line against the
//! evolution time, its cosine fit and the analytic envelope.

use nmrdeco_core::analysis::{
    fit_cosine, peak_amplitude, CosineFit, DecoherenceCurve, Experiment, FitError, Spectrum,
    SpectrumMode,
};
use nmrdeco_core::Result;
use rayon::prelude::*;

use crate::spectrum::spectrum;

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub t: f64,
    pub amplitude: f64,
    pub envelope: f64,
    pub corner_coherence: f64,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub curve: DecoherenceCurve,
    pub fit: std::result::Result<CosineFit, FitError>,
    /// Zero-order phase applied to every spectrum (radians; 0 in
    /// magnitude mode).
    pub phase: f64,
}

/// Spectrum at time `t`, phased by `phase` in real mode.
pub fn spectrum_at(exp: &Experiment, t: f64, mode: SpectrumMode, phase: f64) -> Result<Spectrum> {
    let spec = spectrum(&exp.acquire(t)?, mode);
    Ok(match mode {
        SpectrumMode::Real => spec.phased(phase),
        SpectrumMode::Magnitude => spec,
    })
}

/// Zero-order phase that makes the `t = 0` peak in the window real and
/// positive.
pub fn reference_phase(exp: &Experiment, window: (f64, f64)) -> Result<f64> {
    spectrum(&exp.acquire(0.0)?, SpectrumMode::Real).zero_order_phase(window.0, window.1)
}

/// Evaluates every time point on the current rayon pool; the output is in
/// the order of `times` whatever the thread count.
pub fn run_scan(exp: &Experiment, times: &[f64], mode: SpectrumMode, window: (f64, f64)) -> Result<ScanResult> {
    let phase = match mode {
        SpectrumMode::Real => reference_phase(exp, window)?,
        SpectrumMode::Magnitude => 0.0,
    };
    let points = times
        .par_iter()
        .map(|&t| {
            let spec = spectrum_at(exp, t, mode, phase)?;
            Ok(ScanPoint {
                t,
                amplitude: peak_amplitude(&spec, window.0, window.1)?,
                envelope: exp.envelope(t),
                corner_coherence: exp.corner_coherence(t)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = DecoherenceCurve::new(points.iter().map(|p| (p.t, p.amplitude)).collect())?;
    let fit = fit_cosine(&curve);
    Ok(ScanResult {
        points,
        curve,
        fit,
        phase,
    })
}
