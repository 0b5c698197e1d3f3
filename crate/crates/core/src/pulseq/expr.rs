use alloc::boxed::Box;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::spinsys::SpinSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

/// Arithmetic over literals, `pi`, `alpha` and couplings `J[i,j]` (Hz).
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Alpha,
    Coupling(usize, usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// True when the value does not depend on the spin system.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => true,
            Expr::Alpha | Expr::Coupling(..) => false,
            Expr::Neg(e) => e.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Value of a constant expression; `None` if it references the spin
    /// system or does not evaluate to a finite number.
    pub fn constant_value(&self) -> Option<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => PI,
            Expr::Alpha | Expr::Coupling(..) => return None,
            Expr::Neg(e) => -e.constant_value()?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.constant_value()?, b.constant_value()?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return None,
                    BinOp::Div => a / b,
                }
            }
        };
        v.is_finite().then_some(v)
    }

    /// Evaluates under `sys`. Dividing by a zero coupling reports the
    /// coupling; any other non-finite result is an error too.
    pub fn eval(&self, sys: &SpinSystem) -> Result<f64> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Pi => PI,
            Expr::Alpha => sys.preparation_angle()?,
            Expr::Coupling(i, j) => {
                let n = sys.n();
                for k in [*i, *j] {
                    if k == 0 || k > n {
                        return Err(Error::SpinIndex { index: k, n });
                    }
                }
                sys.j(*i, *j)
            }
            Expr::Neg(e) => -e.eval(sys)?,
            Expr::Bin(op, a, b) => {
                let x = a.eval(sys)?;
                let y = b.eval(sys)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(match zero_coupling(b, sys) {
                                Some((i, j)) => Error::MissingCoupling(i, j),
                                None => Error::InvalidSystem("division by zero".into()),
                            });
                        }
                        x / y
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(Error::InvalidSystem("expression is not finite".into()));
        }
        Ok(v)
    }
}

fn zero_coupling(e: &Expr, sys: &SpinSystem) -> Option<(usize, usize)> {
    match e {
        Expr::Coupling(i, j) if sys.j(*i, *j) == 0.0 => Some((*i, *j)),
        Expr::Neg(a) => zero_coupling(a, sys),
        Expr::Bin(_, a, b) => zero_coupling(a, sys).or_else(|| zero_coupling(b, sys)),
        _ => None,
    }
}

fn needs_parens(e: &Expr) -> bool {
    matches!(e, Expr::Bin(..) | Expr::Neg(_))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting of f64 is the shortest text that reparses
            // to the same value.
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Alpha => f.write_str("alpha"),
            Expr::Coupling(i, j) => write!(f, "J[{i},{j}]"),
            Expr::Neg(e) => {
                if needs_parens(e) {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, a, b) => {
                let side = |f: &mut fmt::Formatter<'_>, e: &Expr| {
                    if needs_parens(e) {
                        write!(f, "({e})")
                    } else {
                        write!(f, "{e}")
                    }
                };
                side(f, a)?;
                write!(f, "{}", op.symbol())?;
                side(f, b)
            }
        }
    }
}
