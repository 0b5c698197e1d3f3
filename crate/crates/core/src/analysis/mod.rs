//! From density matrices to the numbers plotted in a decoherence scan:
//! partial traces, the analytic envelope, FIDs, spectra, peak picking
//! and the cosine fit.

mod fid;
mod fit;
mod pipeline;
mod spectrum;
mod trace;

pub use fid::{simulate_fid, FidOptions, FidRecord};
pub use fit::{fit_cosine, CosineFit, DecoherenceCurve, FitError, FIT_GRID_POINTS, FIT_MAX_ITER};
pub use pipeline::{Experiment, Readout};
pub use spectrum::{frequency_axis, peak_amplitude, Spectrum, SpectrumMode};
pub use trace::{analytic_envelope, corner_coherence, partial_trace};
