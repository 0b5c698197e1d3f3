//! Exact density-matrix simulation of small spin-½ systems.
//!
//! The crate follows one experiment end to end: preparing a pseudo-pure
//! state, entangling two "system" spins, letting them evolve under zz
//! couplings to a set of "environment" spins with the chemical shifts
//! refocused, tracing the environment out, and reading the surviving
//! coherence back from a simulated free-induction decay.
//!
//! Everything here is `no_std` + `alloc`. File formats, the FFT and the
//! command-line driver live in the `nmrdeco` companion crate.
//!
//! Conventions used throughout:
//!
//! * ħ = 1; Hamiltonians are in rad/s, but every public input is in Hz.
//! * Spin 1 is the most significant bit of a basis index and bit value 0
//!   is |↑⟩ (m = +½), so basis state 0 is |↑…↑⟩.
//! * RF pulses act as `exp(+iα Σ I_axis)`, free evolution as `exp(-iHt)`.
//! * Density matrices are deviation matrices: the identity part is never
//!   tracked and comparisons are made up to scale and identity offset.

#![no_std]

extern crate alloc;

pub mod analysis;
pub mod engine;
pub mod error;
mod linalg;
pub mod opalg;
pub mod pulseq;
pub mod spinsys;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use opalg::{Axis, Operator};
pub use spinsys::{SpinSet, SpinSystem};
