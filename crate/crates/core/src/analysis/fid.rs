use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::engine::SimState;
use crate::error::{Error, Result};
use crate::opalg::{spin_bit, Operator};
use crate::spinsys::SpinSet;

/// Acquisition parameters for [`simulate_fid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidOptions {
    /// Seconds per sample.
    pub dwell: f64,
    /// Acquired points; the record is zero-padded to the next power of 2.
    pub n_samples: usize,
    pub detect: SpinSet,
    /// Decouple the environment spins during acquisition.
    pub decouple_env: bool,
    /// Exponential line broadening in Hz.
    pub line_broadening_hz: f64,
    /// Halve the first point before transforming.
    pub halve_first: bool,
}

impl Default for FidOptions {
    fn default() -> Self {
        Self {
            dwell: 100e-6,
            n_samples: 4096,
            detect: SpinSet::all(2),
            decouple_env: true,
            line_broadening_hz: 1.0,
            halve_first: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidRecord {
    pub dwell: f64,
    pub samples: Vec<Complex64>,
    pub detect: SpinSet,
    pub line_broadening_hz: f64,
    /// Points actually acquired before zero padding.
    pub acquired: usize,
}

impl FidRecord {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample times in seconds.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |m| m as f64 * self.dwell)
    }
}

/// Free-induction decay of `state`.
///
/// Sample `m` is `tr(ρ(t_m)·Σ_{k∈detect} I⁻_k)·exp(−π·lb·t_m)` with
/// `t_m = m·dwell`, where `ρ` evolves under the Hamiltonian restricted to
/// the spins that are not decoupled. With `H = −2πν I_z` a spin at offset
/// `+ν` precesses as `exp(+i2πν t)`, so it lands at `+ν` on the spectrum.
pub fn simulate_fid(state: &SimState, opts: &FidOptions) -> Result<FidRecord> {
    let sys = state.system();
    if !(opts.dwell.is_finite() && opts.dwell > 0.0) {
        return Err(Error::Acquisition("dwell must be positive"));
    }
    if opts.n_samples < 2 {
        return Err(Error::Acquisition("at least 2 samples are required"));
    }
    if !(opts.line_broadening_hz.is_finite() && opts.line_broadening_hz >= 0.0) {
        return Err(Error::Acquisition("line broadening must be non-negative"));
    }
    if opts.detect.is_empty() {
        return Err(Error::EmptySpinSet);
    }
    if !opts.detect.is_subset(sys.system_spins()) {
        return Err(Error::Acquisition("detected spins must be system spins"));
    }
    let mut decoupled = state.decoupled();
    if opts.decouple_env {
        decoupled = decoupled.union(sys.env_spins());
    }
    let active = sys.all_spins().difference(decoupled);
    let h = if active.is_empty() {
        Operator::zeros(sys.dim())
    } else {
        sys.closed_hamiltonian(active)?
    };
    let energies: Vec<f64> = h.diagonal().iter().map(|z| z.re).collect();

    // Nonzero terms ρ_ab·(I⁻)_ba: a has spin k up, b = a with spin k down.
    let rho = state.rho();
    let n = sys.n();
    let mut terms: Vec<(Complex64, f64)> = Vec::new();
    for k in opts.detect.iter() {
        let bit = spin_bit(k, n);
        for a in (0..sys.dim()).filter(|a| a & bit == 0) {
            let b = a | bit;
            let amp = rho[(a, b)];
            if amp != Complex64::new(0.0, 0.0) {
                terms.push((amp, energies[b] - energies[a]));
            }
        }
    }

    let total = opts.n_samples.next_power_of_two();
    let mut samples = Vec::with_capacity(total);
    for m in 0..opts.n_samples {
        let t = m as f64 * opts.dwell;
        let decay = libm::exp(-PI * opts.line_broadening_hz * t);
        let s: Complex64 = terms
            .iter()
            .map(|(amp, w)| amp * Complex64::cis(w * t))
            .sum();
        samples.push(s * decay);
    }
    samples.resize(total, Complex64::new(0.0, 0.0));
    if opts.halve_first {
        samples[0] *= 0.5;
    }
    Ok(FidRecord {
        dwell: opts.dwell,
        samples,
        detect: opts.detect,
        line_broadening_hz: opts.line_broadening_hz,
        acquired: opts.n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{spin_operator, Axis};
    use crate::spinsys::SpinSystem;

    fn single(nu: f64) -> SpinSystem {
        SpinSystem::builder(1)
            .offsets_hz(&[nu])
            .partition(SpinSet::single(1), SpinSet::EMPTY)
            .build()
            .unwrap()
    }

    fn opts(n: usize, detect: SpinSet) -> FidOptions {
        FidOptions {
            dwell: 1e-4,
            n_samples: n,
            detect,
            decouple_env: true,
            line_broadening_hz: 0.0,
            halve_first: false,
        }
    }

    #[test]
    fn diagonal_state_gives_zero_fid() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys).unwrap();
        let fid = simulate_fid(&s, &opts(64, SpinSet::all(2))).unwrap();
        assert!(fid.samples.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_spin_ix_precesses_at_offset() {
        let s = SimState::new(single(100.0), spin_operator(Axis::X, 1, 1).unwrap()).unwrap();
        let fid = simulate_fid(&s, &opts(256, SpinSet::single(1))).unwrap();
        for (m, z) in fid.samples.iter().enumerate() {
            let t = m as f64 * 1e-4;
            let expected = Complex64::cis(2.0 * PI * 100.0 * t) * 0.5;
            assert!((z - expected).norm() < 1e-13, "m={m}");
        }
    }

    #[test]
    fn fid_matches_explicit_evolution() {
        // Oracle: propagate ρ with the full matrix exponential at each t.
        let sys = SpinSystem::trichloroethylene()
            .with_offsets_hz(&[420.0, -480.0, 0.0])
            .unwrap();
        let rho = Operator::from_fn(8, |r, c| {
            let v = (r * 8 + c) as f64;
            Complex64::new(libm::sin(v), libm::cos(1.3 * v))
        });
        let rho = (&rho + &rho.adjoint()).scale(0.5);
        let s = SimState::new(sys.clone(), rho.clone()).unwrap();
        let o = FidOptions {
            decouple_env: false,
            line_broadening_hz: 3.0,
            ..opts(16, SpinSet::all(2))
        };
        let fid = simulate_fid(&s, &o).unwrap();
        let mut det = Operator::zeros(8);
        for k in 1..=2 {
            let x = spin_operator(Axis::X, k, 3).unwrap();
            let y = spin_operator(Axis::Y, k, 3).unwrap();
            det += &(&x - &y.scale_complex(Complex64::new(0.0, 1.0)));
        }
        let h = sys.full_hamiltonian();
        for (m, z) in fid.samples.iter().enumerate() {
            let t = m as f64 * 1e-4;
            let u = crate::opalg::matrix_exponential_unitary(&h, t).unwrap();
            let expected = rho.conjugate_by(&u).matmul(&det).trace() * libm::exp(-PI * 3.0 * t);
            assert!((z - expected).norm() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn padding_and_halving() {
        let s = SimState::new(single(0.0), spin_operator(Axis::X, 1, 1).unwrap()).unwrap();
        let o = FidOptions {
            halve_first: true,
            ..opts(100, SpinSet::single(1))
        };
        let fid = simulate_fid(&s, &o).unwrap();
        assert_eq!(fid.len(), 128);
        assert_eq!(fid.acquired, 100);
        assert!((fid.samples[0].re - 0.25).abs() < 1e-15);
        assert!((fid.samples[1].re - 0.5).abs() < 1e-15);
        assert!(fid.samples[100..].iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn validation() {
        let s = SimState::equilibrium(SpinSystem::trichloroethylene()).unwrap();
        let bad = |o: FidOptions| simulate_fid(&s, &o).is_err();
        let good = opts(8, SpinSet::all(2));
        assert!(bad(FidOptions { dwell: 0.0, ..good }));
        assert!(bad(FidOptions { dwell: -1.0, ..good }));
        assert!(bad(FidOptions { n_samples: 1, ..good }));
        assert!(bad(FidOptions { detect: SpinSet::EMPTY, ..good }));
        assert!(bad(FidOptions { detect: SpinSet::single(3), ..good }));
        assert!(bad(FidOptions { line_broadening_hz: -1.0, ..good }));
        assert!(!bad(good));
    }
}
