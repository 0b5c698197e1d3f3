//! Experiment configuration files (TOML).
//!
//! ```toml
//! gamma_ratio = 1.0         # γ¹/γ² of the system spins, default 1
//!
//! [spectrometer]            # needed only when some offset is given in ppm
//! reference_mhz = 125.73    # carrier frequency of the observed nucleus
//! carrier_ppm = 120.58      # chemical shift sitting at 0 Hz
//!
//! [[spin]]
//! label = "C1"
//! offset_ppm = 124.16       # or offset_hz; absent means 0 Hz
//! role = "system"           # or "environment"
//!
//! [[spin]]
//! label = "H"
//! offset_hz = 0.0
//! gradient_weight = 3.977   # default 1
//! role = "environment"
//!
//! [couplings]
//! j_hz = [[0.0, 9.23], [9.23, 0.0]]   # full symmetric matrix, Hz
//!
//! [acquisition]             # every key optional
//! dwell = 1e-4
//! n_samples = 4096
//! line_broadening_hz = 1.0
//! detect = ["C1", "C2"]     # labels or 1-based indices
//! mode = "real"
//! halve_first = true
//! window_hz = [450.1, 553.2]
//!
//! [scan]
//! t_start = 0.0
//! t_stop = 0.02
//! n_points = 81
//!
//! [paths]                   # relative to the config file
//! prep = "prep.seq"
//! entangle = "entangle.seq"
//! output = "out"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nmrdeco_core::analysis::{FidOptions, SpectrumMode};
use nmrdeco_core::{SpinSet, SpinSystem};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "one")]
    pub gamma_ratio: f64,
    pub spectrometer: Option<Spectrometer>,
    #[serde(rename = "spin")]
    pub spins: Vec<SpinEntry>,
    pub couplings: Couplings,
    #[serde(default)]
    pub acquisition: Acquisition,
    pub scan: Option<Scan>,
    #[serde(default)]
    pub paths: Paths,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spectrometer {
    pub reference_mhz: f64,
    #[serde(default)]
    pub carrier_ppm: f64,
}

impl Spectrometer {
    pub fn ppm_to_hz(&self, ppm: f64) -> f64 {
        (ppm - self.carrier_ppm) * self.reference_mhz
    }

    pub fn hz_to_ppm(&self, hz: f64) -> f64 {
        self.carrier_ppm + hz / self.reference_mhz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Environment,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntry {
    pub label: String,
    pub offset_hz: Option<f64>,
    pub offset_ppm: Option<f64>,
    #[serde(default = "one")]
    pub gradient_weight: f64,
    pub role: Role,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub j_hz: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum SpinRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Acquisition {
    pub dwell: f64,
    pub n_samples: usize,
    pub line_broadening_hz: f64,
    pub detect: Option<Vec<SpinRef>>,
    pub mode: String,
    pub halve_first: bool,
    pub window_hz: Option<[f64; 2]>,
}

impl Default for Acquisition {
    fn default() -> Self {
        let d = FidOptions::default();
        Self {
            dwell: d.dwell,
            n_samples: d.n_samples,
            line_broadening_hz: d.line_broadening_hz,
            detect: None,
            mode: "real".into(),
            halve_first: d.halve_first,
            window_hz: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    pub t_start: f64,
    pub t_stop: f64,
    pub n_points: usize,
}

impl Scan {
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|i| self.t_start + (self.t_stop - self.t_start) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub prep: Option<PathBuf>,
    pub entangle: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

/// A validated configuration together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    /// Directory that relative paths are resolved against.
    pub base_dir: PathBuf,
    pub system: SpinSystem,
    pub fid: FidOptions,
    pub mode: SpectrumMode,
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Default peak window: the upper line of spin 1's doublet,
    /// `(ν₁, ν₁ + J₁₂)`.
    pub fn window(&self) -> (f64, f64) {
        if let Some([lo, hi]) = self.config.acquisition.window_hz {
            return (lo, hi);
        }
        let nu1 = self.system.offsets_hz()[0];
        let j12 = self.system.j(1, 2).abs();
        (nu1, nu1 + j12)
    }

    pub fn ppm_axis(&self, hz: f64) -> Option<f64> {
        self.config.spectrometer.map(|s| s.hz_to_ppm(hz))
    }
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse(&text, path, base)
}

pub fn parse(text: &str, path: &Path, base_dir: PathBuf) -> Result<Loaded, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })?;
    config.validate(base_dir)
}

impl ExperimentConfig {
    fn resolve_spin(&self, r: &SpinRef) -> Result<usize, ConfigError> {
        match r {
            SpinRef::Index(i) if (1..=self.spins.len()).contains(i) => Ok(*i),
            SpinRef::Index(i) => Err(invalid(format!("spin index {i} out of range"))),
            SpinRef::Label(l) => self
                .spins
                .iter()
                .position(|s| &s.label == l)
                .map(|p| p + 1)
                .ok_or_else(|| invalid(format!("unknown spin label `{l}`"))),
        }
    }

    fn offsets(&self) -> Result<Vec<f64>, ConfigError> {
        self.spins
            .iter()
            .map(|s| match (s.offset_hz, s.offset_ppm) {
                (Some(_), Some(_)) => Err(invalid(format!(
                    "spin `{}`: give offset_hz or offset_ppm, not both",
                    s.label
                ))),
                (Some(hz), None) => Ok(hz),
                (None, Some(ppm)) => match self.spectrometer {
                    Some(sp) => Ok(sp.ppm_to_hz(ppm)),
                    None => Err(invalid(format!(
                        "spin `{}`: ppm offsets need [spectrometer] reference_mhz",
                        s.label
                    ))),
                },
                (None, None) => Ok(0.0),
            })
            .collect()
    }

    pub fn validate(self, base_dir: PathBuf) -> Result<Loaded, ConfigError> {
        let n = self.spins.len();
        if let Some(sp) = self.spectrometer {
            if !(sp.reference_mhz.is_finite() && sp.reference_mhz > 0.0) || !sp.carrier_ppm.is_finite() {
                return Err(invalid("spectrometer reference_mhz must be positive"));
            }
        }
        let j = &self.couplings.j_hz;
        if j.len() != n || j.iter().any(|row| row.len() != n) {
            return Err(invalid(format!("couplings.j_hz must be a {n}x{n} matrix")));
        }
        let flat: Vec<f64> = j.iter().flatten().copied().collect();
        let role = |r: Role| -> SpinSet {
            self.spins
                .iter()
                .enumerate()
                .filter(|(_, s)| s.role == r)
                .map(|(i, _)| i + 1)
                .collect()
        };
        let labels: Vec<&str> = self.spins.iter().map(|s| s.label.as_str()).collect();
        let weights: Vec<f64> = self.spins.iter().map(|s| s.gradient_weight).collect();
        let system = SpinSystem::builder(n)
            .labels(&labels)
            .offsets_hz(&self.offsets()?)
            .j_matrix(&flat)
            .gradient_weights(&weights)
            .gamma_ratio(self.gamma_ratio)
            .partition(role(Role::System), role(Role::Environment))
            .build()
            .map_err(|e| invalid(e.to_string()))?;

        let acq = &self.acquisition;
        let detect = match &acq.detect {
            None => system.system_spins(),
            Some(list) => {
                let mut set = SpinSet::EMPTY;
                for r in list {
                    set.insert(self.resolve_spin(r)?);
                }
                set
            }
        };
        if detect.is_empty() {
            return Err(invalid("acquisition.detect must name at least one spin"));
        }
        if !detect.is_subset(system.system_spins()) {
            return Err(invalid("acquisition.detect may only name system spins"));
        }
        if !(acq.dwell.is_finite() && acq.dwell > 0.0) {
            return Err(invalid("acquisition.dwell must be positive"));
        }
        if acq.n_samples < 2 {
            return Err(invalid("acquisition.n_samples must be at least 2"));
        }
        if !(acq.line_broadening_hz.is_finite() && acq.line_broadening_hz >= 0.0) {
            return Err(invalid("acquisition.line_broadening_hz must be >= 0"));
        }
        if let Some([lo, hi]) = acq.window_hz {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(invalid("acquisition.window_hz must be [lo, hi] with lo < hi"));
            }
        }
        let mode: SpectrumMode = acq.mode.parse().map_err(|e: nmrdeco_core::Error| invalid(e.to_string()))?;
        if let Some(scan) = self.scan {
            let ok = scan.t_start.is_finite()
                && scan.t_stop.is_finite()
                && scan.t_start >= 0.0
                && scan.t_stop > scan.t_start
                && scan.n_points >= 2;
            if !ok {
                return Err(invalid(
                    "scan needs 0 <= t_start < t_stop and n_points >= 2",
                ));
            }
        }
        let fid = FidOptions {
            dwell: acq.dwell,
            n_samples: acq.n_samples,
            detect,
            decouple_env: true,
            line_broadening_hz: acq.line_broadening_hz,
            halve_first: acq.halve_first,
        };
        Ok(Loaded {
            config: self,
            base_dir,
            system,
            fid,
            mode,
        })
    }
}
