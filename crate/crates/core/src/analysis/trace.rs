use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::opalg::{check_spin_count, Operator};
use crate::spinsys::SpinSet;

/// Traces the spins in `traced` out of an `n`-spin operator. The kept
/// spins stay in their original order.
pub fn partial_trace(rho: &Operator, n: usize, traced: SpinSet) -> Result<Operator> {
    check_spin_count(n)?;
    if rho.dim() != 1 << n {
        return Err(Error::Dimension {
            expected: 1 << n,
            found: rho.dim(),
        });
    }
    if traced.is_empty() {
        return Err(Error::EmptySpinSet);
    }
    if traced.max_index() > n {
        return Err(Error::SpinIndex {
            index: traced.max_index(),
            n,
        });
    }
    if traced.len() == n {
        return Err(Error::TraceAll);
    }
    let kept: alloc::vec::Vec<usize> = SpinSet::all(n).difference(traced).iter().collect();
    let gone: alloc::vec::Vec<usize> = traced.iter().collect();
    let bit = |k: usize| 1usize << (n - k);
    // Scatter a reduced index (kept spins, MSB first) into a full index.
    let spread = |idx: usize, spins: &[usize]| {
        let m = spins.len();
        spins
            .iter()
            .enumerate()
            .filter(|(p, _)| idx >> (m - 1 - p) & 1 == 1)
            .fold(0usize, |acc, (_, &k)| acc | bit(k))
    };
    let dk = 1 << kept.len();
    let de = 1 << gone.len();
    Ok(Operator::from_fn(dk, |r, c| {
        let (rf, cf) = (spread(r, &kept), spread(c, &kept));
        (0..de).fold(Complex64::new(0.0, 0.0), |acc, e| {
            let ef = spread(e, &gone);
            acc + rho[(rf | ef, cf | ef)]
        })
    }))
}

/// `2·Re ρ(|↑↑⟩,|↓↓⟩) / c_zz`, with `c_zz` the coefficient of `I_z¹I_z²`
/// in `ρ`. For `c(I_x¹I_x² − I_y¹I_y²) − I_z¹I_z²` (any scale, any
/// identity offset) this is `−c`.
pub fn corner_coherence(rho: &Operator) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: rho.dim(),
        });
    }
    // tr(ρ I_z¹I_z²) = ¼(ρ₀₀ − ρ₁₁ − ρ₂₂ + ρ₃₃); the product operator has
    // norm ¼, so its coefficient is 4·tr(ρ I_z¹I_z²).
    let czz = rho[(0, 0)].re - rho[(1, 1)].re - rho[(2, 2)].re + rho[(3, 3)].re;
    let scale = rho.max_abs();
    if czz.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::NoZzComponent);
    }
    Ok(2.0 * rho[(0, 3)].re / czz)
}

/// `Π_k cos(π(J₁ₖ + J₂ₖ)t)`.
pub fn analytic_envelope(t: f64, couplings: &[(f64, f64)]) -> f64 {
    couplings
        .iter()
        .map(|(a, b)| libm::cos(PI * (a + b) * t))
        .product()
}
