//! File formats, FFT-backed spectra, the brute-force oracle and the
//! command-line driver for `nmrdeco-core`.

pub mod cli;
pub mod config;
pub mod oracle;
pub mod output;
pub mod report;
pub mod scan;
pub mod spectrum;
pub mod verify;
