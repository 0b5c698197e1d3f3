//! Brute-force reference implementation used by `verify` and the tests.
//!
//! Shares nothing with the core crate's numerics: operators are dense
//! Kronecker products of Pauli matrices, every propagator is a
//! scaling-and-squaring Taylor exponential of a dense generator, and the
//! crusher reads coherence orders off the dense `Σ w_k I_z^k`. Only the
//! parsed event list and the spin-system parameters are taken from core.

use std::f64::consts::PI;

use nmrdeco_core::pulseq::{PhaseAxis, PulseEvent, Sequence};
use nmrdeco_core::{Complex64 as C, Operator, SpinSet, SpinSystem};

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub dim: usize,
    pub a: Vec<C>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            a: vec![C::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn eye(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> C {
        self.a[r * self.dim + c]
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let x = self.a[r * d + k];
                if x == C::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..d {
                    m.a[r * d + c] += x * o.a[k * d + c];
                }
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            dim: self.dim,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn scale(&self, s: C) -> Self {
        Self {
            dim: self.dim,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = Self::zeros(d);
        for r in 0..d {
            for c in 0..d {
                m.a[c * d + r] = self.a[r * d + c].conj();
            }
        }
        m
    }

    pub fn kron(&self, o: &Self) -> Self {
        let (p, q) = (self.dim, o.dim);
        let mut m = Self::zeros(p * q);
        for r1 in 0..p {
            for c1 in 0..p {
                for r2 in 0..q {
                    for c2 in 0..q {
                        m.a[(r1 * q + r2) * p * q + c1 * q + c2] = self.at(r1, c1) * o.at(r2, c2);
                    }
                }
            }
        }
        m
    }

    fn norm1(&self) -> f64 {
        (0..self.dim)
            .map(|c| (0..self.dim).map(|r| self.at(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `exp(self)` by scaling and squaring with a Taylor series.
    pub fn expm(&self) -> Self {
        let norm = self.norm1();
        let mut s = 0;
        while norm / f64::powi(2.0, s) > 0.5 {
            s += 1;
        }
        let a = self.scale(C::new(f64::powi(2.0, -s), 0.0));
        let mut sum = Self::eye(self.dim);
        let mut term = Self::eye(self.dim);
        for k in 1..40 {
            term = term.mul(&a).scale(C::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term);
            if term.norm1() < 1e-20 {
                break;
            }
        }
        for _ in 0..s {
            sum = sum.mul(&sum);
        }
        sum
    }

    /// `U ρ U†`.
    pub fn conj_by(&self, u: &Self) -> Self {
        u.mul(self).mul(&u.adjoint())
    }

    pub fn to_operator(&self) -> Operator {
        Operator::from_row_major(self.dim, self.a.clone()).expect("power-of-two dimension")
    }

    pub fn from_operator(op: &Operator) -> Self {
        Self {
            dim: op.dim(),
            a: op.as_slice().to_vec(),
        }
    }
}

fn half_pauli(axis: char) -> Dense {
    let z = C::new(0.0, 0.0);
    let h = 0.5;
    let a = match axis {
        'x' => vec![z, C::new(h, 0.0), C::new(h, 0.0), z],
        'y' => vec![z, C::new(0.0, -h), C::new(0.0, h), z],
        'z' => vec![C::new(h, 0.0), z, z, C::new(-h, 0.0)],
        _ => unreachable!(),
    };
    Dense { dim: 2, a }
}

/// `I_axis` on spin `k` of `n` (spin 1 is the leftmost factor).
pub fn spin_op(axis: char, k: usize, n: usize) -> Dense {
    let mut m = Dense::eye(1);
    for j in 1..=n {
        m = m.kron(&if j == k { half_pauli(axis) } else { Dense::eye(2) });
    }
    m
}

/// `Σ c · Π I_axis^k` over `(coefficient, [(axis, spin)])` terms.
pub fn product_sum(terms: &[(f64, &[(char, usize)])], n: usize) -> Dense {
    let mut out = Dense::zeros(1 << n);
    for (c, factors) in terms {
        let mut p = Dense::eye(1 << n);
        for &(axis, k) in factors.iter() {
            p = p.mul(&spin_op(axis, k, n));
        }
        out = out.add(&p.scale(C::new(*c, 0.0)));
    }
    out
}

/// `I_z¹ + I_z² − 2 I_z¹I_z²`.
pub fn pseudo_pure(n: usize) -> Dense {
    product_sum(
        &[(1.0, &[('z', 1)]), (1.0, &[('z', 2)]), (-2.0, &[('z', 1), ('z', 2)])],
        n,
    )
}

/// `I_x¹I_x² − I_z¹I_z² − I_y¹I_y²`.
pub fn entangled(n: usize) -> Dense {
    product_sum(
        &[
            (1.0, &[('x', 1), ('x', 2)]),
            (-1.0, &[('z', 1), ('z', 2)]),
            (-1.0, &[('y', 1), ('y', 2)]),
        ],
        n,
    )
}

pub struct Oracle<'a> {
    pub sys: &'a SpinSystem,
}

impl<'a> Oracle<'a> {
    pub fn new(sys: &'a SpinSystem) -> Self {
        Self { sys }
    }

    fn n(&self) -> usize {
        self.sys.n()
    }

    /// Hamiltonian built term by term from dense operator products.
    /// `active` selects the spins whose terms survive; `zeeman` toggles the
    /// chemical-shift part; `pair` filters the couplings.
    pub fn hamiltonian(&self, active: SpinSet, zeeman: bool, pair: impl Fn(usize, usize) -> bool) -> Dense {
        let n = self.n();
        let mut h = Dense::zeros(1 << n);
        for k in active.iter() {
            if zeeman {
                let w = -2.0 * PI * self.sys.offsets_hz()[k - 1];
                h = h.add(&spin_op('z', k, n).scale(C::new(w, 0.0)));
            }
        }
        for i in active.iter() {
            for j in active.iter().filter(|&j| j > i) {
                if pair(i, j) {
                    let w = 2.0 * PI * self.sys.j(i, j);
                    h = h.add(&spin_op('z', i, n).mul(&spin_op('z', j, n)).scale(C::new(w, 0.0)));
                }
            }
        }
        h
    }

    pub fn propagator(h: &Dense, t: f64) -> Dense {
        h.scale(C::new(0.0, -t)).expm()
    }

    pub fn pulse(&self, angle: f64, axis: PhaseAxis, targets: SpinSet) -> Dense {
        let (a, sign) = match axis {
            PhaseAxis::X => ('x', 1.0),
            PhaseAxis::Y => ('y', 1.0),
            PhaseAxis::MinusX => ('x', -1.0),
            PhaseAxis::MinusY => ('y', -1.0),
        };
        let n = self.n();
        let mut g = Dense::zeros(1 << n);
        for k in targets.iter() {
            g = g.add(&spin_op(a, k, n));
        }
        g.scale(C::new(0.0, angle * sign)).expm()
    }

    pub fn crush(&self, rho: &Dense) -> Dense {
        let n = self.n();
        let mut f = Dense::zeros(1 << n);
        for (k, w) in self.sys.gradient_weights().iter().enumerate() {
            f = f.add(&spin_op('z', k + 1, n).scale(C::new(*w, 0.0)));
        }
        let mut out = rho.clone();
        for r in 0..rho.dim {
            for c in 0..rho.dim {
                if (f.at(r, r).re - f.at(c, c).re).abs() > 1e-9 {
                    out.a[r * rho.dim + c] = C::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// `γ I_z¹ + Σ_{other system spins} I_z^k`.
    pub fn equilibrium(&self) -> Dense {
        let n = self.n();
        let mut rho = Dense::zeros(1 << n);
        for k in self.sys.system_spins().iter() {
            let w = if k == 1 { self.sys.gamma_ratio() } else { 1.0 };
            rho = rho.add(&spin_op('z', k, n).scale(C::new(w, 0.0)));
        }
        rho
    }

    /// `exp(−iHt/2)·[π]_x(all)·exp(−iHt/2)` with the full Hamiltonian.
    pub fn echo(&self, t: f64) -> Dense {
        let all = self.sys.all_spins();
        let half = Self::propagator(&self.hamiltonian(all, true, |_, _| true), t / 2.0);
        half.mul(&self.pulse(PI, PhaseAxis::X, all)).mul(&half)
    }

    /// `[π]_x(all)·exp(−iH_ef t)`, couplings only.
    pub fn echo_reference(&self, t: f64) -> Dense {
        let all = self.sys.all_spins();
        let u = Self::propagator(&self.hamiltonian(all, false, |_, _| true), t);
        self.pulse(PI, PhaseAxis::X, all).mul(&u)
    }

    /// Runs `seq` (expressions evaluated against the system) from `rho`
    /// with `decoupled` spins initially removed from the Hamiltonian.
    pub fn run(&self, rho: &Dense, seq: &Sequence, mut decoupled: SpinSet) -> nmrdeco_core::Result<(Dense, SpinSet)> {
        let seq = seq.evaluate_durations(self.sys)?;
        let all = self.sys.all_spins();
        let mut rho = rho.clone();
        for ev in &seq.events {
            let value = |e: &nmrdeco_core::pulseq::Expr| e.eval(self.sys);
            match ev {
                PulseEvent::Rf { angle, axis, targets } | PulseEvent::Readout { angle, axis, targets } => {
                    rho = rho.conj_by(&self.pulse(value(angle)?, *axis, *targets));
                }
                PulseEvent::Delay(d) => {
                    let active = all.difference(decoupled);
                    let h = self.hamiltonian(active, true, |_, _| true);
                    rho = rho.conj_by(&Self::propagator(&h, value(d)?));
                }
                PulseEvent::Gradient => rho = self.crush(&rho),
                PulseEvent::DecoupleOn(s) => decoupled = decoupled.union(*s),
                PulseEvent::DecoupleOff(s) => decoupled = decoupled.difference(*s),
                PulseEvent::Refocus(t) => rho = rho.conj_by(&self.echo(value(t)?)),
            }
        }
        Ok((rho, decoupled))
    }
}

/// Traces out every spin after the first two of an `n`-spin operator.
pub fn trace_to_pair(rho: &Dense, n: usize) -> Dense {
    let de = 1 << (n - 2);
    let mut out = Dense::zeros(4);
    for r in 0..4 {
        for c in 0..4 {
            out.a[r * 4 + c] = (0..de).map(|e| rho.at(r * de + e, c * de + e)).sum();
        }
    }
    out
}

/// Corner coherence of a two-spin operator relative to its `I_z¹I_z²`
/// coefficient, computed from traces with dense product operators.
pub fn corner(rho2: &Dense) -> f64 {
    let zz = spin_op('z', 1, 2).mul(&spin_op('z', 2, 2));
    let czz: f64 = 4.0 * rho2.mul(&zz).a.iter().step_by(5).map(|z| z.re).sum::<f64>();
    // |↑↑⟩⟨↓↓| + h.c. = 2(I_x¹I_x² − I_y¹I_y²); its coefficient is 2·Re ρ₀₃.
    2.0 * rho2.at(0, 3).re / czz
}

/// Entangled state evolved under system–environment plus `J₁₂` couplings,
/// traced down to the pair: the brute-force side of the multi-environment
/// law.
pub fn multi_env_corner(sys: &SpinSystem, t: f64) -> f64 {
    let o = Oracle::new(sys);
    let n = sys.n();
    let env = sys.env_spins();
    let h = o.hamiltonian(sys.all_spins(), false, |i, j| {
        (i == 1 && j == 2) || (i <= 2 && env.contains(j))
    });
    let rho = entangled(n).conj_by(&Oracle::propagator(&h, t));
    corner(&trace_to_pair(&rho, n))
}
