use alloc::string::String;

use crate::pulseq::ParseError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("spin index {index} out of range 1..={n}")]
    SpinIndex { index: usize, n: usize },

    #[error("{n} spins exceeds the configured maximum of {max}")]
    TooManySpins { n: usize, max: usize },

    #[error("spin {0} appears more than once in a product operator")]
    RepeatedSpin(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("gamma ratio {0} outside (0, 1]")]
    GammaRatio(f64),

    #[error("active spin set is empty")]
    EmptyActiveSet,

    #[error("operation requires system spins {{1,2}}")]
    SystemNotPair,

    #[error("coupling J[{0},{1}] is zero or missing")]
    MissingCoupling(usize, usize),

    #[error("duration must be non-negative, got {0}")]
    NegativeDuration(f64),

    #[error("refocused evolution requires decoupling to be off (decoupled: {0:?})")]
    DecouplingActive(SpinSet),

    #[error("cannot trace out every spin; use the full trace instead")]
    TraceAll,

    #[error("empty spin set")]
    EmptySpinSet,

    #[error("invalid acquisition parameter: {0}")]
    Acquisition(&'static str),

    #[error("peak window [{lo}, {hi}] Hz contains no spectrum bins")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("curve points must have t >= 0 and strictly increasing t")]
    CurveOrder,

    #[error("I_z1 I_z2 component vanishes; corner coherence undefined")]
    NoZzComponent,

    #[error(transparent)]
    Fit(#[from] crate::analysis::FitError),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

use crate::spinsys::SpinSet;
