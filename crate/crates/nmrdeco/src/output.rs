//! CSV and JSON emitters. Numbers are written with 17 significant digits
//! so that a file round-trips to the same `f64` values.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use nmrdeco_core::analysis::{CosineFit, FitError, Spectrum};
use serde::{Deserialize, Serialize};

use crate::scan::ScanPoint;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// `t_seconds,amplitude`.
pub fn curve_csv(points: &[ScanPoint]) -> String {
    let mut s = String::from("t_seconds,amplitude\n");
    for p in points {
        let _ = writeln!(s, "{},{}", num(p.t), num(p.amplitude));
    }
    s
}

/// `t_seconds,envelope,corner_coherence`: the analytic product of cosines
/// and the simulated coherence of the traced state (which is its negative).
pub fn envelope_csv(points: &[ScanPoint]) -> String {
    let mut s = String::from("t_seconds,envelope,corner_coherence\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{}",
            num(p.t),
            num(p.envelope),
            num(p.corner_coherence)
        );
    }
    s
}

/// `freq_hz,re,im`, plus a `ppm` column when `ppm` maps Hz to ppm.
pub fn spectrum_csv(spec: &Spectrum, ppm: Option<&dyn Fn(f64) -> f64>) -> String {
    let mut s = String::from(if ppm.is_some() {
        "freq_hz,re,im,ppm\n"
    } else {
        "freq_hz,re,im\n"
    });
    for (f, a) in spec.freq_hz.iter().zip(&spec.amplitude) {
        let _ = write!(s, "{},{},{}", num(*f), num(a.re), num(a.im));
        if let Some(to_ppm) = ppm {
            let _ = write!(s, ",{}", num(to_ppm(*f)));
        }
        s.push('\n');
    }
    s
}

/// The published experimental fit, shipped for comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PaperExperiment {
    pub amplitude: f64,
    pub period_s: f64,
    pub theory_period_s: f64,
}

impl PaperExperiment {
    pub fn bundled() -> Self {
        toml::from_str(include_str!("../assets/paper_experiment.toml"))
            .expect("bundled reference data parses")
    }

    /// `(theory − experiment) / theory`.
    pub fn discrepancy(&self) -> f64 {
        (self.theory_period_s - self.period_s) / self.theory_period_s
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub fit: Option<FitValues>,
    pub fit_error: Option<String>,
    /// `2/(J₁ₖ + J₂ₖ)` when there is exactly one environment spin.
    pub theory_period_s: Option<f64>,
    pub relative_error_vs_theory: Option<f64>,
    pub phase_rad: f64,
    pub paper_experiment: PaperComparison,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitValues {
    pub amplitude: f64,
    pub period_s: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaperComparison {
    pub amplitude: f64,
    pub period_s: f64,
    pub discrepancy_vs_paper_theory: f64,
    pub reproducible: bool,
    pub note: String,
}

impl FitReport {
    pub fn new(
        fit: &Result<CosineFit, FitError>,
        theory_period_s: Option<f64>,
        phase_rad: f64,
    ) -> Self {
        let paper = PaperExperiment::bundled();
        let values = fit.as_ref().ok().map(|f| FitValues {
            amplitude: f.amplitude,
            period_s: f.period,
            rms_residual: f.rms_residual,
        });
        Self {
            relative_error_vs_theory: match (values, theory_period_s) {
                (Some(v), Some(t)) => Some((v.period_s - t) / t),
                _ => None,
            },
            fit: values,
            fit_error: fit.as_ref().err().map(|e| e.to_string()),
            theory_period_s,
            phase_rad,
            paper_experiment: PaperComparison {
                amplitude: paper.amplitude,
                period_s: paper.period_s,
                discrepancy_vs_paper_theory: paper.discrepancy(),
                reproducible: false,
                note: "measured curve; pulse imperfections and uncontrolled decoherence are not simulated"
                    .into(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 9.4998e-3, f64::MAX] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn curve_format() {
        let p = ScanPoint {
            t: 0.0,
            amplitude: -1.5,
            envelope: 1.0,
            corner_coherence: -1.0,
        };
        assert_eq!(
            curve_csv(&[p]),
            "t_seconds,amplitude\n0.0000000000000000e0,-1.5000000000000000e0\n"
        );
    }

    #[test]
    fn paper_discrepancy() {
        let d = PaperExperiment::bundled().discrepancy();
        assert!((d - 0.082).abs() < 1e-3, "{d}");
    }
}
