//! Pulse-sequence scripts.
//!
//! One event per line (or `;`-separated), applied left to right in time:
//!
//! ```text
//! # comment
//! pulse x pi/2 on 1,2        # ideal hard rotation, U = exp(+iα Σ I_x)
//! delay 1/(4*J[1,2])         # free evolution, seconds
//! grad z                     # ideal crusher: drop nonzero coherence orders
//! decouple on 3              # remove spin 3's terms from H
//! decouple off 3
//! refocus 3.5e-3             # t/2 - [π]_x(all) - t/2
//! readout x pi/2 on 2        # same as pulse, marks the acquisition point
//! ```
//!
//! Expressions accept numbers, `pi`, `alpha` (the preparation angle
//! `arccos(γ¹/γ²)`), `J[i,j]` in Hz, `+ - * /` and parentheses. Angles
//! are radians; durations are seconds. Spin lists are indices, labels of
//! the spin system, or `all`.

mod builtin;
mod expr;
mod lexer;
mod parser;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use builtin::{compile_builtin, Builtin, ENTANGLE_SCRIPT, PREP_SCRIPT};
pub use expr::{BinOp, Expr};
pub use parser::parse;

use crate::error::{Error, Result};
use crate::opalg::Axis;
use crate::spinsys::{SpinSet, SpinSystem};

/// Source location; `line` and `col` are 1-based, `offset`/`len` are bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}:{}: {message}", span.line, span.col)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: Span, message: impl Into<String>) -> Self {
        Self {
            span,
            message: message.into(),
        }
    }
}

/// RF phase: rotation axis in the xy plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseAxis {
    X,
    Y,
    MinusX,
    MinusY,
}

impl PhaseAxis {
    pub fn axis(self) -> Axis {
        match self {
            PhaseAxis::X | PhaseAxis::MinusX => Axis::X,
            PhaseAxis::Y | PhaseAxis::MinusY => Axis::Y,
        }
    }

    /// +1 or -1: the sign applied to the generator.
    pub fn sign(self) -> f64 {
        match self {
            PhaseAxis::X | PhaseAxis::Y => 1.0,
            PhaseAxis::MinusX | PhaseAxis::MinusY => -1.0,
        }
    }
}

impl fmt::Display for PhaseAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseAxis::X => "x",
            PhaseAxis::Y => "y",
            PhaseAxis::MinusX => "-x",
            PhaseAxis::MinusY => "-y",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PulseEvent {
    Rf {
        angle: Expr,
        axis: PhaseAxis,
        targets: SpinSet,
    },
    Readout {
        angle: Expr,
        axis: PhaseAxis,
        targets: SpinSet,
    },
    Delay(Expr),
    Gradient,
    DecoupleOn(SpinSet),
    DecoupleOff(SpinSet),
    /// Delay t/2, hard π_x on every spin, delay t/2.
    Refocus(Expr),
}

impl fmt::Display for PulseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseEvent::Rf {
                angle,
                axis,
                targets,
            } => write!(f, "pulse {axis} {angle} on {targets}"),
            PulseEvent::Readout {
                angle,
                axis,
                targets,
            } => write!(f, "readout {axis} {angle} on {targets}"),
            PulseEvent::Delay(e) => write!(f, "delay {e}"),
            PulseEvent::Gradient => f.write_str("grad z"),
            PulseEvent::DecoupleOn(s) => write!(f, "decouple on {s}"),
            PulseEvent::DecoupleOff(s) => write!(f, "decouple off {s}"),
            PulseEvent::Refocus(e) => write!(f, "refocus {e}"),
        }
    }
}

/// A parsed script: events in time order with their source spans.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub events: Vec<PulseEvent>,
    pub spans: Vec<Span>,
    pub source: String,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Canonical script text; reparses to the same events.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&alloc::format!("{e}\n"));
        }
        out
    }

    /// Replaces every duration and angle expression with its value
    /// (seconds, radians) under `sys`.
    pub fn evaluate_durations(&self, sys: &SpinSystem) -> Result<Sequence> {
        let mut events = Vec::with_capacity(self.events.len());
        for (ev, span) in self.events.iter().zip(&self.spans) {
            let at = |e: Error| match e {
                Error::Parse(p) => Error::Parse(p),
                other => Error::Parse(ParseError::new(*span, alloc::format!("{other}"))),
            };
            let eval = |e: &Expr| e.eval(sys).map_err(at);
            let ev = match ev {
                PulseEvent::Rf {
                    angle,
                    axis,
                    targets,
                } => PulseEvent::Rf {
                    angle: Expr::Num(eval(angle)?),
                    axis: *axis,
                    targets: *targets,
                },
                PulseEvent::Readout {
                    angle,
                    axis,
                    targets,
                } => PulseEvent::Readout {
                    angle: Expr::Num(eval(angle)?),
                    axis: *axis,
                    targets: *targets,
                },
                PulseEvent::Delay(e) => {
                    let v = eval(e)?;
                    if v <= 0.0 {
                        return Err(at(Error::NegativeDuration(v)));
                    }
                    PulseEvent::Delay(Expr::Num(v))
                }
                PulseEvent::Refocus(e) => {
                    let v = eval(e)?;
                    if v < 0.0 {
                        return Err(at(Error::NegativeDuration(v)));
                    }
                    PulseEvent::Refocus(Expr::Num(v))
                }
                other => other.clone(),
            };
            events.push(ev);
        }
        Ok(Sequence {
            events,
            spans: self.spans.clone(),
            source: self.source.clone(),
        })
    }
}

/// Free function form of [`Sequence::evaluate_durations`].
pub fn evaluate_durations(seq: &Sequence, sys: &SpinSystem) -> Result<Sequence> {
    seq.evaluate_durations(sys)
}
