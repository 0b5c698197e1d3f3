use core::f64::consts::PI;

use super::{analytic_envelope, corner_coherence, partial_trace, simulate_fid, FidOptions, FidRecord};
use crate::engine::SimState;
use crate::error::Result;
use crate::opalg::Operator;
use crate::pulseq::{compile_builtin, Builtin, PhaseAxis, Sequence};
use crate::spinsys::{SpinSet, SpinSystem};

/// The hard pulse that turns the two-spin coherence into observable
/// magnetization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Readout {
    pub angle: f64,
    pub axis: PhaseAxis,
    pub targets: SpinSet,
}

impl Default for Readout {
    /// `[π/2]_x` on spin 2.
    fn default() -> Self {
        Self {
            angle: PI / 2.0,
            axis: PhaseAxis::X,
            targets: SpinSet::single(2),
        }
    }
}

/// Preparation, entanglement, refocused evolution for a time `t` and
/// readout. The entangled state is computed once; each `t` only costs
/// one echo propagator.
#[derive(Debug, Clone)]
pub struct Experiment {
    sys: SpinSystem,
    entangled: SimState,
    pub readout: Readout,
    pub fid: FidOptions,
}

impl Experiment {
    /// Uses the built-in preparation and entangling sequences.
    pub fn new(sys: SpinSystem) -> Result<Self> {
        let prep = compile_builtin(Builtin::Prep, &sys)?;
        let entangle = compile_builtin(Builtin::Entangle, &sys)?;
        Self::with_sequences(sys, &prep, &entangle)
    }

    /// Runs `prep` then `entangle` from equilibrium with the environment
    /// decoupled throughout.
    pub fn with_sequences(sys: SpinSystem, prep: &Sequence, entangle: &Sequence) -> Result<Self> {
        let start = SimState::equilibrium(sys.clone())?.with_decoupled(sys.env_spins())?;
        let entangled = start.run(prep)?.run(entangle)?;
        Ok(Self {
            sys,
            entangled,
            readout: Readout::default(),
            fid: FidOptions::default(),
        })
    }

    pub fn system(&self) -> &SpinSystem {
        &self.sys
    }

    pub fn entangled(&self) -> &SimState {
        &self.entangled
    }

    /// Entangled state after decoupling is switched off and a refocused
    /// evolution of length `t`.
    pub fn evolved(&self, t: f64) -> Result<SimState> {
        self.entangled
            .clone()
            .with_decoupled(SpinSet::EMPTY)?
            .refocused_evolve(t)
    }

    /// System state with the environment traced out.
    pub fn reduced(&self, t: f64) -> Result<Operator> {
        let s = self.evolved(t)?;
        partial_trace(s.rho(), self.sys.n(), self.sys.env_spins())
    }

    pub fn corner_coherence(&self, t: f64) -> Result<f64> {
        corner_coherence(&self.reduced(t)?)
    }

    /// `Π_k cos(π(J₁ₖ + J₂ₖ)t)` over the environment spins.
    pub fn envelope(&self, t: f64) -> f64 {
        analytic_envelope(t, &self.sys.environment_couplings())
    }

    pub fn readout_state(&self, t: f64) -> Result<SimState> {
        let r = self.readout;
        self.evolved(t)?.rf(r.angle, r.axis, r.targets)
    }

    pub fn acquire(&self, t: f64) -> Result<FidRecord> {
        simulate_fid(&self.readout_state(t)?, &self.fid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_follows_envelope_on_tce() {
        let exp = Experiment::new(SpinSystem::trichloroethylene()).unwrap();
        for i in 0..41 {
            let t = i as f64 * 0.5e-3;
            let c = exp.corner_coherence(t).unwrap();
            assert!((c + exp.envelope(t)).abs() < 1e-9, "t={t} c={c}");
        }
    }

    #[test]
    fn readout_produces_signal() {
        let mut exp = Experiment::new(SpinSystem::trichloroethylene()).unwrap();
        exp.fid.n_samples = 64;
        let fid = exp.acquire(0.0).unwrap();
        assert!(fid.samples.iter().any(|z| z.norm() > 1e-3));
    }
}
