//! Dense complex operators on the 2^n-dimensional Zeeman basis and the
//! spin-½ angular-momentum operators built from them.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest spin count accepted by the constructors (4096 × 4096 operators).
pub const MAX_SPINS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Numerical tolerances, all as max elementwise absolute deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub unitary: f64,
    pub equality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            unitary: 1e-10,
            equality: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// A square complex matrix whose dimension is a power of two.
///
/// The same type carries Hamiltonians, propagators and deviation density
/// matrices; which invariants apply depends on the role.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Operator {
    /// # Panics
    /// If `dim` is not a power of two.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "operator dimension must be 2^n");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds from row-major entries; fails unless `data.len() == dim²`
    /// with `dim` a power of two.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if !dim.is_power_of_two() || data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = f(r, c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of spins, log2 of the dimension.
    pub fn n_spins(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out[r * n..(r + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |r, c| self[(r / m, c / m)] * rhs[(r % m, c % m)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max elementwise |self - other|.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "operator dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    /// Max elementwise |A - A†|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Max elementwise |U†U - 1|.
    pub fn unitarity_error(&self) -> f64 {
        self.adjoint()
            .matmul(self)
            .max_abs_diff(&Self::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| r == c || self[(r, c)].norm() <= tol))
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    /// Hermitian eigendecomposition: eigenvalues and the unitary whose
    /// columns are the matching eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, Operator)> {
        let err = self.hermiticity_error();
        if err > Tolerances::default().hermitian * (1.0 + self.max_abs()) {
            return Err(Error::NotHermitian(err));
        }
        let e = linalg::hermitian_eigen(&self.data, self.dim);
        Ok((
            e.values,
            Operator {
                dim: self.dim,
                data: e.vectors,
            },
        ))
    }
}

impl core::ops::Index<(usize, usize)> for Operator {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

pub(crate) fn check_spin_count(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SPINS {
        return Err(Error::TooManySpins { n, max: MAX_SPINS });
    }
    Ok(())
}

pub(crate) fn check_spin_index(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::SpinIndex { index: k, n });
    }
    Ok(())
}

/// Bit mask of spin `k` (1-based) within a basis index of `n` spins.
#[inline]
pub(crate) fn spin_bit(k: usize, n: usize) -> usize {
    1 << (n - k)
}

/// z quantum number (±½) of spin `k` in basis state `b`.
#[inline]
pub fn m_z(b: usize, k: usize, n: usize) -> f64 {
    if b & spin_bit(k, n) == 0 {
        0.5
    } else {
        -0.5
    }
}

/// `I_axis^k` embedded in an `n`-spin space.
pub fn spin_operator(axis: Axis, k: usize, n: usize) -> Result<Operator> {
    check_spin_count(n)?;
    check_spin_index(k, n)?;
    let dim = 1usize << n;
    let bit = spin_bit(k, n);
    let mut m = Operator::zeros(dim);
    for c in 0..dim {
        match axis {
            Axis::Z => m[(c, c)] = Complex64::new(m_z(c, k, n), 0.0),
            Axis::X => m[(c ^ bit, c)] = Complex64::new(0.5, 0.0),
            Axis::Y => {
                // <↓|σy|↑> = i, <↑|σy|↓> = -i
                let v = if c & bit == 0 { 0.5 } else { -0.5 };
                m[(c ^ bit, c)] = Complex64::new(0.0, v);
            }
        }
    }
    Ok(m)
}

/// `scale · Π I_axis^k` over distinct spins; the empty product is `scale · 1`.
pub fn product_operator(factors: &[(Axis, usize)], n: usize, scale: f64) -> Result<Operator> {
    check_spin_count(n)?;
    for (i, &(_, k)) in factors.iter().enumerate() {
        check_spin_index(k, n)?;
        if factors[..i].iter().any(|&(_, j)| j == k) {
            return Err(Error::RepeatedSpin(k));
        }
    }
    let mut acc = Operator::identity(1 << n).scale(scale);
    for &(axis, k) in factors {
        acc = acc.matmul(&spin_operator(axis, k, n)?);
    }
    Ok(acc)
}

/// Classification of matrix entries by weighted coherence order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceDecomposition {
    dim: usize,
    entry_orders: Vec<f64>,
    classes: Vec<(f64, Vec<bool>)>,
}

/// Orders closer than this are the same class; |p| below it is order zero.
pub const ORDER_EPS: f64 = 1e-9;

impl CoherenceDecomposition {
    pub fn order(&self, r: usize, c: usize) -> f64 {
        self.entry_orders[r * self.dim + c]
    }

    pub fn is_zero_order(&self, r: usize, c: usize) -> bool {
        self.order(r, c).abs() < ORDER_EPS
    }

    /// Distinct orders, ascending, each with its entry mask.
    pub fn classes(&self) -> &[(f64, Vec<bool>)] {
        &self.classes
    }

    pub fn mask(&self, p: f64) -> Option<&[bool]> {
        self.classes
            .iter()
            .find(|(q, _)| (q - p).abs() < ORDER_EPS)
            .map(|(_, m)| m.as_slice())
    }

    /// Orders of entries whose magnitude in `rho` exceeds `tol`.
    pub fn occupied_orders(&self, rho: &Operator, tol: f64) -> Vec<f64> {
        self.classes
            .iter()
            .filter(|(_, mask)| {
                mask.iter()
                    .zip(rho.as_slice())
                    .any(|(&m, z)| m && z.norm() > tol)
            })
            .map(|(p, _)| *p)
            .collect()
    }
}

/// Weighted coherence order `Σ_k w_k (m_k(r) - m_k(c))` of every entry.
pub fn coherence_orders(rho: &Operator, weights: &[f64]) -> Result<CoherenceDecomposition> {
    let n = weights.len();
    if n == 0 || rho.dim() != 1usize << n {
        return Err(Error::Dimension {
            expected: 1usize << n,
            found: rho.dim(),
        });
    }
    let dim = rho.dim();
    // Per-basis-state weighted magnetization; order = M(r) - M(c).
    let weighted_m: Vec<f64> = (0..dim)
        .map(|b| (1..=n).map(|k| weights[k - 1] * m_z(b, k, n)).sum())
        .collect();
    let mut entry_orders = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let p = weighted_m[r] - weighted_m[c];
            entry_orders[r * dim + c] = if p.abs() < ORDER_EPS { 0.0 } else { p };
        }
    }
    let mut distinct: Vec<f64> = Vec::new();
    for &p in &entry_orders {
        if !distinct.iter().any(|q| (q - p).abs() < ORDER_EPS) {
            distinct.push(p);
        }
    }
    distinct.sort_by(|a, b| a.total_cmp(b));
    let classes = distinct
        .into_iter()
        .map(|p| {
            let mask = entry_orders
                .iter()
                .map(|q| (q - p).abs() < ORDER_EPS)
                .collect();
            (p, mask)
        })
        .collect();
    Ok(CoherenceDecomposition {
        dim,
        entry_orders,
        classes,
    })
}

/// `exp(-iHt)` for Hermitian `H`, via eigendecomposition.
pub fn matrix_exponential_unitary(h: &Operator, t: f64) -> Result<Operator> {
    let dim = h.dim();
    if h.is_diagonal(0.0) {
        let err = h
            .diagonal()
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max);
        if err > Tolerances::default().hermitian * (1.0 + h.max_abs()) {
            return Err(Error::NotHermitian(err));
        }
        let mut u = Operator::zeros(dim);
        for i in 0..dim {
            u[(i, i)] = Complex64::cis(-h[(i, i)].re * t);
        }
        return Ok(u);
    }
    let (values, v) = h.eigh()?;
    let phases: Vec<Complex64> = values.iter().map(|&e| Complex64::cis(-e * t)).collect();
    Ok(Operator::from_fn(dim, |r, c| {
        (0..dim)
            .map(|k| v[(r, k)] * phases[k] * v[(c, k)].conj())
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_spin_iz() {
        let z = spin_operator(Axis::Z, 1, 1).unwrap();
        assert_eq!(z, Operator::from_diagonal(&[0.5, -0.5]));
    }

    #[test]
    fn first_spin_is_most_significant() {
        let z = spin_operator(Axis::Z, 1, 2).unwrap();
        assert_eq!(z, Operator::from_diagonal(&[0.5, 0.5, -0.5, -0.5]));
        let z2 = spin_operator(Axis::Z, 2, 2).unwrap();
        assert_eq!(z2, Operator::from_diagonal(&[0.5, -0.5, 0.5, -0.5]));
    }

    #[test]
    fn angular_momentum_commutator() {
        let x = spin_operator(Axis::X, 1, 3).unwrap();
        let y = spin_operator(Axis::Y, 1, 3).unwrap();
        let z = spin_operator(Axis::Z, 1, 3).unwrap();
        let lhs = x.commutator(&y);
        assert!(lhs.approx_eq(&z.scale_complex(c(0.0, 1.0)), 1e-15));
    }

    #[test]
    fn index_errors() {
        assert_eq!(
            spin_operator(Axis::X, 0, 2),
            Err(Error::SpinIndex { index: 0, n: 2 })
        );
        assert_eq!(
            spin_operator(Axis::X, 3, 2),
            Err(Error::SpinIndex { index: 3, n: 2 })
        );
        assert!(matches!(
            spin_operator(Axis::X, 1, 13),
            Err(Error::TooManySpins { .. })
        ));
    }

    #[test]
    fn ixix_anti_diagonal() {
        let p = product_operator(&[(Axis::X, 1), (Axis::X, 2)], 2, 1.0).unwrap();
        let expected = Operator::from_fn(4, |r, col| {
            if r + col == 3 {
                c(0.25, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert!(p.approx_eq(&expected, 0.0));
    }

    #[test]
    fn bell_combination_entries() {
        // Entries worked out by hand from the Kronecker products of the
        // Pauli matrices in the |↑↑>,|↑↓>,|↓↑>,|↓↓> ordering.
        let xx = product_operator(&[(Axis::X, 1), (Axis::X, 2)], 2, 1.0).unwrap();
        let zz = product_operator(&[(Axis::Z, 1), (Axis::Z, 2)], 2, 1.0).unwrap();
        let yy = product_operator(&[(Axis::Y, 1), (Axis::Y, 2)], 2, 1.0).unwrap();
        let rho = &(&xx - &zz) - &yy;
        let mut expected = Operator::from_diagonal(&[-0.25, 0.25, 0.25, -0.25]);
        expected[(0, 3)] = c(0.5, 0.0);
        expected[(3, 0)] = c(0.5, 0.0);
        assert!(rho.approx_eq(&expected, 1e-15), "{rho:?}");
    }

    #[test]
    fn empty_product_is_identity() {
        let p = product_operator(&[], 3, 1.0).unwrap();
        assert_eq!(p, Operator::identity(8));
    }

    #[test]
    fn repeated_index_rejected() {
        assert_eq!(
            product_operator(&[(Axis::X, 1), (Axis::Z, 1)], 2, 1.0),
            Err(Error::RepeatedSpin(1))
        );
    }

    #[test]
    fn diagonal_is_order_zero() {
        let rho = Operator::from_diagonal(&[1.0, -2.0, 3.0, 0.5]);
        let d = coherence_orders(&rho, &[1.0, 3.977]).unwrap();
        // 0, ±1, ±3.977, ±(3.977 ± 1)
        assert_eq!(d.classes().len(), 9);
        assert_eq!(d.occupied_orders(&rho, 0.0), [0.0]);
    }

    #[test]
    fn single_quantum_orders() {
        let x = spin_operator(Axis::X, 1, 1).unwrap();
        let d = coherence_orders(&x, &[1.0]).unwrap();
        assert_eq!(d.occupied_orders(&x, 0.0), [-1.0, 1.0]);
    }

    #[test]
    fn ixix_orders_equal_weights() {
        // Nonzero entries of IxIx: (0,3) ↑↑/↓↓ -> +2, (3,0) -> -2,
        // (1,2) ↑↓/↓↑ -> 0, (2,1) -> 0.
        let xx = product_operator(&[(Axis::X, 1), (Axis::X, 2)], 2, 1.0).unwrap();
        let d = coherence_orders(&xx, &[1.0, 1.0]).unwrap();
        assert_eq!(d.order(0, 3), 2.0);
        assert_eq!(d.order(3, 0), -2.0);
        assert_eq!(d.order(1, 2), 0.0);
        assert_eq!(d.order(2, 1), 0.0);
        assert_eq!(d.occupied_orders(&xx, 0.0), [-2.0, 0.0, 2.0]);
    }

    #[test]
    fn coherence_dimension_mismatch() {
        let x = spin_operator(Axis::X, 1, 2).unwrap();
        assert!(matches!(
            coherence_orders(&x, &[1.0]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = matrix_exponential_unitary(&Operator::zeros(4), 1.3).unwrap();
        assert_eq!(u, Operator::identity(4));
    }

    #[test]
    fn exp_of_iz() {
        let w = 2.0 * core::f64::consts::PI * 37.0;
        let h = spin_operator(Axis::Z, 1, 1).unwrap().scale(w);
        let u = matrix_exponential_unitary(&h, core::f64::consts::PI / w).unwrap();
        let expected = Operator::from_diagonal(&[0.0, 0.0]);
        let mut expected = expected;
        expected[(0, 0)] = Complex64::cis(-core::f64::consts::FRAC_PI_2);
        expected[(1, 1)] = Complex64::cis(core::f64::consts::FRAC_PI_2);
        assert!(u.approx_eq(&expected, 1e-14));
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let mut h = Operator::zeros(2);
        h[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            matrix_exponential_unitary(&h, 1.0),
            Err(Error::NotHermitian(_))
        ));
        let mut d = Operator::zeros(2);
        d[(0, 0)] = c(0.0, 1.0);
        assert!(matches!(
            matrix_exponential_unitary(&d, 1.0),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn exp_off_diagonal_matches_rotation() {
        // exp(-i θ σx/2) = cos(θ/2) - i sin(θ/2) σx
        let theta = 0.731;
        let h = spin_operator(Axis::X, 1, 1).unwrap();
        let u = matrix_exponential_unitary(&h, theta).unwrap();
        let (s, co) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
        let expected = Operator::from_row_major(
            2,
            alloc::vec![c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)],
        )
        .unwrap();
        assert!(u.approx_eq(&expected, 1e-14), "{u:?}");
    }
}
