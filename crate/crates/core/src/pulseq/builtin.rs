use core::fmt;
use core::str::FromStr;

use super::{parse, Sequence};
use crate::error::{Error, Result};
use crate::spinsys::SpinSystem;

/// Equilibrium → pseudo-pure |↓↓⟩ on spins 1 and 2 (environment decoupled).
pub const PREP_SCRIPT: &str = "\
# equalize the two polarizations, then crush the transverse remainder
pulse x alpha on 2
grad z
pulse x pi/4 on 1,2
delay 1/(4*J[1,2])
pulse y pi on 1,2
delay 1/(4*J[1,2])
pulse y -5*pi/6 on 1,2
grad z
";

/// Pseudo-pure |↓↓⟩ → I_x¹I_x² − I_z¹I_z² − I_y¹I_y² (environment decoupled).
///
/// The last pulse is about −y: with exp(+iαI) pulses and exp(−iHt)
/// evolution a +y phase lands on the |↑↓⟩,|↓↑⟩ Bell pair instead.
pub const ENTANGLE_SCRIPT: &str = "\
pulse x pi/2 on 1,2
delay 1/(4*J[1,2])
pulse x pi on 1,2
delay 1/(4*J[1,2])
pulse -y pi/2 on 2
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Prep,
    Entangle,
}

impl Builtin {
    pub fn script(self) -> &'static str {
        match self {
            Builtin::Prep => PREP_SCRIPT,
            Builtin::Entangle => ENTANGLE_SCRIPT,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Builtin::Prep => "prep",
            Builtin::Entangle => "entangle",
        })
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prep" => Ok(Builtin::Prep),
            "entangle" => Ok(Builtin::Entangle),
            other => Err(Error::InvalidSystem(alloc::format!(
                "unknown builtin sequence `{other}`"
            ))),
        }
    }
}

/// Parses one of the built-in sequences against `sys`, whose system must
/// be spins {1,2} with a nonzero J₁₂.
pub fn compile_builtin(which: Builtin, sys: &SpinSystem) -> Result<Sequence> {
    sys.require_pair_system()?;
    if sys.j(1, 2) == 0.0 {
        return Err(Error::MissingCoupling(1, 2));
    }
    Ok(parse(which.script(), sys)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulseq::{PhaseAxis, PulseEvent};
    use crate::spinsys::SpinSet;
    use core::f64::consts::PI;

    fn with_ratio(r: f64) -> SpinSystem {
        SpinSystem::builder(3)
            .coupling(1, 2, 103.1)
            .gamma_ratio(r)
            .build()
            .unwrap()
    }

    #[test]
    fn prep_starts_with_identity_pulse_at_unit_ratio() {
        let sys = with_ratio(1.0);
        let seq = compile_builtin(Builtin::Prep, &sys).unwrap();
        assert_eq!(seq.len(), 8);
        let ev = seq.evaluate_durations(&sys).unwrap();
        match &ev.events[0] {
            PulseEvent::Rf {
                angle,
                axis,
                targets,
            } => {
                assert_eq!(angle.constant_value(), Some(0.0));
                assert_eq!(*axis, PhaseAxis::X);
                assert_eq!(*targets, SpinSet::single(2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prep_angle_follows_gamma_ratio() {
        let sys = with_ratio(0.5);
        let ev = compile_builtin(Builtin::Prep, &sys)
            .unwrap()
            .evaluate_durations(&sys)
            .unwrap();
        let PulseEvent::Rf { angle, .. } = &ev.events[0] else {
            panic!()
        };
        assert!((angle.constant_value().unwrap() - PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn entangle_has_five_events() {
        let seq = compile_builtin(Builtin::Entangle, &with_ratio(1.0)).unwrap();
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn missing_j12() {
        let sys = SpinSystem::builder(2).build().unwrap();
        assert_eq!(
            compile_builtin(Builtin::Prep, &sys),
            Err(Error::MissingCoupling(1, 2))
        );
    }

    #[test]
    fn names_round_trip() {
        for b in [Builtin::Prep, Builtin::Entangle] {
            assert_eq!(alloc::format!("{b}").parse::<Builtin>().unwrap(), b);
        }
        assert!("echo".parse::<Builtin>().is_err());
    }
}
