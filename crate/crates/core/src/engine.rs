//! Applying pulse sequences to deviation density matrices.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::opalg::{coherence_orders, matrix_exponential_unitary, spin_operator, Axis, Operator};
use crate::pulseq::{PhaseAxis, PulseEvent, Sequence};
use crate::spinsys::{SpinSet, SpinSystem};

/// Deviation-matrix equality tolerance after normalization.
pub const DEVIATION_TOL: f64 = 1e-8;

/// `exp(+iα Σ_{k∈targets} ±I_axis^k)`, built as a Kronecker product of
/// single-spin rotations `cos(α/2)·1 + i sin(α/2)·σ_axis`.
pub fn rf_propagator(angle: f64, axis: PhaseAxis, targets: SpinSet, n: usize) -> Result<Operator> {
    if targets.max_index() > n {
        return Err(Error::SpinIndex {
            index: targets.max_index(),
            n,
        });
    }
    let half = 0.5 * angle * axis.sign();
    let (s, c) = (libm::sin(half), libm::cos(half));
    let i_s = Complex64::new(0.0, s);
    let rot = match axis.axis() {
        // σx = [[0,1],[1,0]]
        Axis::X => [Complex64::new(c, 0.0), i_s, i_s, Complex64::new(c, 0.0)],
        // i sin · σy = i sin · [[0,-i],[i,0]] = [[0, sin], [-sin, 0]]
        Axis::Y => [
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(c, 0.0),
        ],
        Axis::Z => unreachable!("rf phases lie in the xy plane"),
    };
    let rot = Operator::from_row_major(2, rot.to_vec())?;
    let id = Operator::identity(2);
    let mut u = Operator::identity(1);
    for k in 1..=n {
        u = u.kron(if targets.contains(k) { &rot } else { &id });
    }
    Ok(u)
}

/// `exp(-iH t/2) · R · exp(-iH t/2)` with `H` the full Hamiltonian and
/// `R` a hard π_x on every spin.
pub fn refocus_propagator(sys: &SpinSystem, t: f64) -> Result<Operator> {
    if t < 0.0 {
        return Err(Error::NegativeDuration(t));
    }
    let half = matrix_exponential_unitary(&sys.full_hamiltonian(), 0.5 * t)?;
    let r = rf_propagator(PI, PhaseAxis::X, sys.all_spins(), sys.n())?;
    Ok(half.matmul(&r).matmul(&half))
}

/// Removes the identity component and scales to unit max magnitude.
/// `None` for a multiple of the identity.
pub fn normalize_deviation(rho: &Operator) -> Option<Operator> {
    let dim = rho.dim();
    let shift = rho.trace() / dim as f64;
    let mut out = rho.clone();
    for i in 0..dim {
        out[(i, i)] -= shift;
    }
    let m = out.max_abs();
    if m <= 1e-300 {
        return None;
    }
    Some(out.scale(1.0 / m))
}

/// Equality up to an identity offset and a positive scale factor.
pub fn deviation_eq(a: &Operator, b: &Operator, tol: f64) -> bool {
    deviation_distance(a, b) <= tol
}

/// Max elementwise difference of the normalized deviations (infinite when
/// exactly one side is a pure identity multiple).
pub fn deviation_distance(a: &Operator, b: &Operator) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    match (normalize_deviation(a), normalize_deviation(b)) {
        (Some(x), Some(y)) => x.max_abs_diff(&y),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Snapshot taken after an event of [`SimState::run`].
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub event_index: usize,
    pub clock: f64,
    pub rho: Operator,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub snapshots: Vec<Snapshot>,
    /// Index of the last `readout` event, if any.
    pub readout_at: Option<usize>,
}

/// Deviation density matrix together with the system it lives in, the
/// currently decoupled spins and the elapsed time.
#[derive(Debug, Clone)]
pub struct SimState {
    rho: Operator,
    sys: SpinSystem,
    decoupled: SpinSet,
    clock: f64,
}

impl SimState {
    pub fn new(sys: SpinSystem, rho: Operator) -> Result<Self> {
        if rho.dim() != sys.dim() {
            return Err(Error::Dimension {
                expected: sys.dim(),
                found: rho.dim(),
            });
        }
        let err = rho.hermiticity_error();
        if err > 1e-12 * (1.0 + rho.max_abs()) {
            return Err(Error::NotHermitian(err));
        }
        Ok(Self {
            rho,
            sys,
            decoupled: SpinSet::EMPTY,
            clock: 0.0,
        })
    }

    /// `γ¹ I_z¹ + γ² I_z² + …` over the system spins, with spin 1 weighted
    /// by the gamma ratio and every other system spin by 1.
    pub fn equilibrium(sys: SpinSystem) -> Result<Self> {
        let n = sys.n();
        let mut rho = Operator::zeros(sys.dim());
        for k in sys.system_spins().iter() {
            let w = if k == 1 { sys.gamma_ratio() } else { 1.0 };
            rho += &spin_operator(Axis::Z, k, n)?.scale(w);
        }
        Self::new(sys, rho)
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn into_rho(self) -> Operator {
        self.rho
    }

    pub fn system(&self) -> &SpinSystem {
        &self.sys
    }

    pub fn decoupled(&self) -> SpinSet {
        self.decoupled
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn with_decoupled(mut self, spins: SpinSet) -> Result<Self> {
        if !spins.is_subset(self.sys.all_spins()) {
            return Err(Error::SpinIndex {
                index: spins.max_index(),
                n: self.sys.n(),
            });
        }
        self.decoupled = spins;
        Ok(self)
    }

    fn with_rho(&self, rho: Operator, dt: f64) -> Self {
        Self {
            rho,
            sys: self.sys.clone(),
            decoupled: self.decoupled,
            clock: self.clock + dt,
        }
    }

    /// Conjugation by an arbitrary unitary; the clock does not move.
    pub fn apply_unitary(&self, u: &Operator) -> Result<Self> {
        if u.dim() != self.rho.dim() {
            return Err(Error::Dimension {
                expected: self.rho.dim(),
                found: u.dim(),
            });
        }
        Ok(self.with_rho(self.rho.conjugate_by(u), 0.0))
    }

    pub fn rf(&self, angle: f64, axis: PhaseAxis, targets: SpinSet) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptySpinSet);
        }
        let u = rf_propagator(angle, axis, targets, self.sys.n())?;
        self.apply_unitary(&u)
    }

    /// Evolution under the Hamiltonian with every decoupled spin removed.
    pub fn free_evolve(&self, duration: f64) -> Result<Self> {
        if duration < 0.0 {
            return Err(Error::NegativeDuration(duration));
        }
        if duration == 0.0 {
            return Ok(self.clone());
        }
        let active = self.sys.all_spins().difference(self.decoupled);
        let h = if active.is_empty() {
            Operator::zeros(self.sys.dim())
        } else {
            self.sys.closed_hamiltonian(active)?
        };
        let u = matrix_exponential_unitary(&h, duration)?;
        Ok(self.with_rho(self.rho.conjugate_by(&u), duration))
    }

    /// Ideal crusher: zero every entry of nonzero weighted coherence order.
    pub fn gradient_crush(&self) -> Result<Self> {
        let orders = coherence_orders(&self.rho, self.sys.gradient_weights())?;
        let dim = self.rho.dim();
        let mut rho = self.rho.clone();
        for r in 0..dim {
            for c in 0..dim {
                if !orders.is_zero_order(r, c) {
                    rho[(r, c)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(self.with_rho(rho, 0.0))
    }

    /// Spin echo over `t`: chemical shifts refocus, couplings keep acting.
    /// Requires decoupling to be off.
    pub fn refocused_evolve(&self, t: f64) -> Result<Self> {
        if !self.decoupled.is_empty() {
            return Err(Error::DecouplingActive(self.decoupled));
        }
        let u = refocus_propagator(&self.sys, t)?;
        Ok(self.with_rho(self.rho.conjugate_by(&u), t))
    }

    /// Evolution under the system–environment couplings plus the
    /// intra-system J₁₂ term (no Zeeman terms, no environment–environment
    /// couplings).
    pub fn multi_env_evolve(&self, t: f64) -> Result<Self> {
        if t < 0.0 {
            return Err(Error::NegativeDuration(t));
        }
        let h = &self.sys.interaction_hamiltonian()? + &self.sys.system_coupling_hamiltonian()?;
        let u = matrix_exponential_unitary(&h, t)?;
        Ok(self.with_rho(self.rho.conjugate_by(&u), t))
    }

    fn apply_event(&self, ev: &PulseEvent) -> Result<Self> {
        let sys = &self.sys;
        match ev {
            PulseEvent::Rf {
                angle,
                axis,
                targets,
            }
            | PulseEvent::Readout {
                angle,
                axis,
                targets,
            } => self.rf(angle.eval(sys)?, *axis, *targets),
            PulseEvent::Delay(e) => {
                let d = e.eval(sys)?;
                if d <= 0.0 {
                    return Err(Error::NegativeDuration(d));
                }
                self.free_evolve(d)
            }
            PulseEvent::Gradient => self.gradient_crush(),
            PulseEvent::DecoupleOn(s) => {
                let mut next = self.clone();
                next.decoupled = self.decoupled.union(*s);
                Ok(next)
            }
            PulseEvent::DecoupleOff(s) => {
                let mut next = self.clone();
                next.decoupled = self.decoupled.difference(*s);
                Ok(next)
            }
            PulseEvent::Refocus(e) => self.refocused_evolve(e.eval(sys)?),
        }
    }

    /// Applies `seq` left to right. Errors carry the failing event's span.
    pub fn run(&self, seq: &Sequence) -> Result<Self> {
        Ok(self.run_logged(seq, Some(0))?.0)
    }

    /// Like [`SimState::run`], also returning up to `max_snapshots`
    /// intermediate states (`None` keeps all of them).
    pub fn run_logged(&self, seq: &Sequence, max_snapshots: Option<usize>) -> Result<(Self, RunLog)> {
        let mut state = self.clone();
        let mut log = RunLog {
            snapshots: Vec::new(),
            readout_at: None,
        };
        let cap = max_snapshots.unwrap_or(usize::MAX);
        for (i, ev) in seq.events.iter().enumerate() {
            state = state.apply_event(ev).map_err(|e| match e {
                Error::Parse(p) => Error::Parse(p),
                other => match seq.spans.get(i) {
                    Some(span) => Error::Parse(crate::pulseq::ParseError::new(
                        *span,
                        alloc::format!("{other}"),
                    )),
                    None => other,
                },
            })?;
            if matches!(ev, PulseEvent::Readout { .. }) {
                log.readout_at = Some(i);
            }
            if log.snapshots.len() < cap {
                log.snapshots.push(Snapshot {
                    event_index: i,
                    clock: state.clock,
                    rho: state.rho.clone(),
                });
            }
        }
        Ok((state, log))
    }
}

/// Free-function form of [`SimState::run`].
pub fn run_sequence(state: &SimState, seq: &Sequence) -> Result<SimState> {
    state.run(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::product_operator;
    use crate::pulseq::parse;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_angle_is_identity() {
        let u = rf_propagator(0.0, PhaseAxis::Y, SpinSet::all(3), 3).unwrap();
        assert!(u.approx_eq(&Operator::identity(8), 0.0));
    }

    #[test]
    fn pi_x_is_i_sigma_x() {
        let u = rf_propagator(PI, PhaseAxis::X, SpinSet::single(1), 1).unwrap();
        let two_ix = spin_operator(Axis::X, 1, 1).unwrap().scale(2.0);
        assert!(u.approx_eq(&two_ix.scale_complex(c(0.0, 1.0)), 1e-15));
    }

    #[test]
    fn two_spin_pulse_is_kronecker_of_single_spin_pulses() {
        let one = rf_propagator(PI / 2.0, PhaseAxis::X, SpinSet::single(1), 1).unwrap();
        let both = rf_propagator(PI / 2.0, PhaseAxis::X, SpinSet::all(2), 2).unwrap();
        assert!(both.approx_eq(&one.kron(&one), 1e-15));
    }

    #[test]
    fn minus_axis_negates_angle() {
        let a = rf_propagator(0.7, PhaseAxis::MinusY, SpinSet::all(2), 2).unwrap();
        let b = rf_propagator(-0.7, PhaseAxis::Y, SpinSet::all(2), 2).unwrap();
        assert!(a.approx_eq(&b, 0.0));
    }

    fn two_spin(j12: f64) -> SpinSystem {
        SpinSystem::builder(2).coupling(1, 2, j12).build().unwrap()
    }

    #[test]
    fn zero_duration_is_noop() {
        let sys = two_spin(100.0);
        let rho = spin_operator(Axis::X, 1, 2).unwrap();
        let s = SimState::new(sys, rho.clone()).unwrap();
        assert_eq!(s.free_evolve(0.0).unwrap().rho(), &rho);
        assert!(s.free_evolve(-1.0).is_err());
    }

    #[test]
    fn iz_is_stationary() {
        let sys = SpinSystem::trichloroethylene()
            .with_offsets_hz(&[450.0, -450.0, 77.0])
            .unwrap();
        let rho = spin_operator(Axis::Z, 1, 3).unwrap();
        let s = SimState::new(sys, rho.clone()).unwrap();
        assert!(s.free_evolve(0.0123).unwrap().rho().approx_eq(&rho, 1e-15));
    }

    #[test]
    fn ix_becomes_antiphase_after_half_over_j() {
        // Under 2πJ I_z¹I_z² for t = 1/(2J): I_x¹ -> ±2 I_y¹ I_z².
        let j = 103.1;
        let s = SimState::new(two_spin(j), spin_operator(Axis::X, 1, 2).unwrap()).unwrap();
        let out = s.free_evolve(1.0 / (2.0 * j)).unwrap();
        let target = product_operator(&[(Axis::Y, 1), (Axis::Z, 2)], 2, 2.0).unwrap();
        let plus = out.rho().max_abs_diff(&target);
        let minus = out.rho().max_abs_diff(&-&target);
        assert!(plus.min(minus) < 1e-12, "{:?}", out.rho());
    }

    #[test]
    fn crusher_examples() {
        let sys = two_spin(0.0);
        let diag = Operator::from_diagonal(&[1.0, 2.0, -1.0, 0.5]);
        let s = SimState::new(sys.clone(), diag.clone()).unwrap();
        assert_eq!(s.gradient_crush().unwrap().rho(), &diag);

        let ix = spin_operator(Axis::X, 1, 2).unwrap();
        let s = SimState::new(sys.clone(), ix).unwrap();
        assert!(s.gradient_crush().unwrap().rho().approx_eq(&Operator::zeros(4), 0.0));

        let zq = &product_operator(&[(Axis::X, 1), (Axis::X, 2)], 2, 1.0).unwrap()
            + &product_operator(&[(Axis::Y, 1), (Axis::Y, 2)], 2, 1.0).unwrap();
        let s = SimState::new(sys, zq.clone()).unwrap();
        assert!(s.gradient_crush().unwrap().rho().approx_eq(&zq, 0.0));
    }

    #[test]
    fn refocus_at_zero_is_bare_pi_pulse() {
        let sys = SpinSystem::trichloroethylene();
        let rho = spin_operator(Axis::Y, 2, 3).unwrap();
        let s = SimState::new(sys, rho.clone()).unwrap();
        let r = rf_propagator(PI, PhaseAxis::X, SpinSet::all(3), 3).unwrap();
        let out = s.refocused_evolve(0.0).unwrap();
        assert!(out.rho().approx_eq(&rho.conjugate_by(&r), 1e-15));
    }

    #[test]
    fn refocus_refuses_while_decoupled() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys)
            .unwrap()
            .with_decoupled(SpinSet::single(3))
            .unwrap();
        assert!(matches!(
            s.refocused_evolve(1e-3),
            Err(Error::DecouplingActive(_))
        ));
        assert!(s.with_decoupled(SpinSet::EMPTY).unwrap().refocused_evolve(-1.0).is_err());
    }

    #[test]
    fn empty_sequence_is_identity() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys.clone()).unwrap();
        let seq = parse("", &sys).unwrap();
        let out = s.run(&seq).unwrap();
        assert_eq!(out.rho(), s.rho());
    }

    #[test]
    fn decouple_events_toggle_the_set() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys.clone()).unwrap();
        let seq = parse("decouple on 3\ndelay 1e-3", &sys).unwrap();
        let out = s.run(&seq).unwrap();
        assert_eq!(out.decoupled(), SpinSet::single(3));
        assert!((out.clock() - 1e-3).abs() < 1e-18);
        let seq = parse("decouple on 3; decouple off 3", &sys).unwrap();
        assert!(s.run(&seq).unwrap().decoupled().is_empty());
    }

    #[test]
    fn runtime_errors_carry_span() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys.clone()).unwrap();
        let seq = parse("grad z\ndelay 1/J[1,2] - 1", &sys).unwrap();
        let Err(Error::Parse(p)) = s.run(&seq) else {
            panic!("expected a spanned error")
        };
        assert_eq!(p.span.line, 2);
    }

    #[test]
    fn snapshot_cap() {
        let sys = SpinSystem::trichloroethylene();
        let s = SimState::equilibrium(sys.clone()).unwrap();
        let seq = parse("grad z; grad z; readout x pi/2 on 2; grad z", &sys).unwrap();
        let (_, log) = s.run_logged(&seq, None).unwrap();
        assert_eq!(log.snapshots.len(), 4);
        assert_eq!(log.readout_at, Some(2));
        let (_, log) = s.run_logged(&seq, Some(2)).unwrap();
        assert_eq!(log.snapshots.len(), 2);
    }

    #[test]
    fn deviation_equality_ignores_scale_and_identity() {
        let a = Operator::from_diagonal(&[0.5, 0.5, 0.5, -1.5]);
        let b = &a.scale(3.0) + &Operator::identity(4).scale(7.0);
        assert!(deviation_eq(&a, &b, 1e-12));
        assert!(!deviation_eq(&a, &a.scale(-1.0), 1e-3));
        assert!(deviation_eq(
            &Operator::identity(4),
            &Operator::zeros(4),
            0.0
        ));
    }

    #[test]
    fn equilibrium_uses_gamma_ratio() {
        let sys = SpinSystem::builder(3)
            .coupling(1, 2, 100.0)
            .gamma_ratio(0.8)
            .build()
            .unwrap();
        let s = SimState::equilibrium(sys).unwrap();
        let expected = &spin_operator(Axis::Z, 1, 3).unwrap().scale(0.8)
            + &spin_operator(Axis::Z, 2, 3).unwrap();
        assert!(s.rho().approx_eq(&expected, 0.0));
    }
}
