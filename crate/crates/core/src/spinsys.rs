//! The physical spin system and its Hamiltonians.
//!
//! Every Hamiltonian here is a sum of `I_z` and `I_z I_z` terms, so all of
//! them are diagonal in the Zeeman basis and are built directly from the
//! z quantum numbers of each basis state. Inputs are in Hz; the returned
//! operators are in rad/s.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::opalg::{check_spin_count, m_z, Operator, MAX_SPINS};

/// Ratio γ_H / γ_C used as the default crusher weight of a proton.
pub const PROTON_TO_CARBON_GAMMA: f64 = 3.977;

/// Set of 1-based spin indices (at most [`MAX_SPINS`]).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SpinSet(u32);

impl SpinSet {
    pub const EMPTY: SpinSet = SpinSet(0);

    pub fn all(n: usize) -> Self {
        SpinSet(((1u64 << n) - 1) as u32)
    }

    pub fn single(k: usize) -> Self {
        let mut s = Self::EMPTY;
        s.insert(k);
        s
    }

    /// # Panics
    /// If `k` is 0 or above [`MAX_SPINS`].
    pub fn insert(&mut self, k: usize) {
        assert!((1..=MAX_SPINS).contains(&k), "spin index {k} out of range");
        self.0 |= 1 << (k - 1);
    }

    pub fn contains(self, k: usize) -> bool {
        (1..=MAX_SPINS).contains(&k) && self.0 & (1 << (k - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        SpinSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SpinSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        SpinSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest index in the set, 0 when empty.
    pub fn max_index(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=MAX_SPINS).filter(move |&k| self.contains(k))
    }
}

impl FromIterator<usize> for SpinSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = SpinSet::EMPTY;
        for k in iter {
            s.insert(k);
        }
        s
    }
}

impl fmt::Debug for SpinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for SpinSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    labels: Vec<String>,
    offset_hz: Vec<f64>,
    j_hz: Vec<f64>,
    gradient_weights: Vec<f64>,
    gamma_ratio: f64,
    system_spins: SpinSet,
    env_spins: SpinSet,
}

/// Builder for [`SpinSystem`]; everything defaults to an uncoupled,
/// on-resonance set of equal-weight spins with spins 1 and 2 as the system.
#[derive(Debug, Clone)]
pub struct SpinSystemBuilder {
    n: usize,
    labels: Vec<String>,
    offset_hz: Vec<f64>,
    j_hz: Vec<f64>,
    gradient_weights: Vec<f64>,
    gamma_ratio: f64,
    system_spins: Option<SpinSet>,
    env_spins: Option<SpinSet>,
}

impl SpinSystemBuilder {
    pub fn labels<S: ToString>(mut self, labels: &[S]) -> Self {
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn offsets_hz(mut self, offsets: &[f64]) -> Self {
        self.offset_hz = offsets.to_vec();
        self
    }

    pub fn offset_hz(mut self, k: usize, hz: f64) -> Self {
        if (1..=self.n).contains(&k) {
            self.offset_hz[k - 1] = hz;
        }
        self
    }

    /// Sets J_ij = J_ji. Out-of-range indices are caught by `build`.
    pub fn coupling(mut self, i: usize, j: usize, hz: f64) -> Self {
        let n = self.n;
        if (1..=n).contains(&i) && (1..=n).contains(&j) {
            self.j_hz[(i - 1) * n + (j - 1)] = hz;
            self.j_hz[(j - 1) * n + (i - 1)] = hz;
        } else {
            // Poison the matrix so build() reports it.
            self.j_hz.clear();
        }
        self
    }

    /// Full row-major n×n matrix; must be symmetric with a zero diagonal.
    pub fn j_matrix(mut self, j: &[f64]) -> Self {
        self.j_hz = j.to_vec();
        self
    }

    pub fn gradient_weights(mut self, w: &[f64]) -> Self {
        self.gradient_weights = w.to_vec();
        self
    }

    pub fn gamma_ratio(mut self, ratio: f64) -> Self {
        self.gamma_ratio = ratio;
        self
    }

    pub fn partition(mut self, system: SpinSet, env: SpinSet) -> Self {
        self.system_spins = Some(system);
        self.env_spins = Some(env);
        self
    }

    pub fn build(self) -> Result<SpinSystem> {
        let n = self.n;
        check_spin_count(n)?;
        let invalid = |msg: &str| Err(Error::InvalidSystem(msg.to_string()));
        if self.labels.len() != n {
            return invalid("label count differs from spin count");
        }
        if self.offset_hz.len() != n || self.offset_hz.iter().any(|v| !v.is_finite()) {
            return invalid("offsets must be n finite values");
        }
        if self.gradient_weights.len() != n || self.gradient_weights.iter().any(|v| !v.is_finite())
        {
            return invalid("gradient weights must be n finite values");
        }
        if self.j_hz.len() != n * n {
            return invalid("J matrix must be n x n");
        }
        for i in 0..n {
            if self.j_hz[i * n + i] != 0.0 {
                return invalid("J matrix diagonal must be zero");
            }
            for j in 0..n {
                let v = self.j_hz[i * n + j];
                if !v.is_finite() {
                    return invalid("J matrix entries must be finite");
                }
                if v != self.j_hz[j * n + i] {
                    return invalid("J matrix must be symmetric");
                }
            }
        }
        if !(self.gamma_ratio > 0.0 && self.gamma_ratio <= 1.0) {
            return Err(Error::GammaRatio(self.gamma_ratio));
        }
        let all = SpinSet::all(n);
        let system = self.system_spins.unwrap_or_else(|| SpinSet::all(n.min(2)));
        let env = self.env_spins.unwrap_or_else(|| all.difference(system));
        if !system.intersection(env).is_empty() {
            return invalid("system and environment overlap");
        }
        if system.union(env) != all {
            return invalid("system and environment must cover every spin");
        }
        Ok(SpinSystem {
            labels: self.labels,
            offset_hz: self.offset_hz,
            j_hz: self.j_hz,
            gradient_weights: self.gradient_weights,
            gamma_ratio: self.gamma_ratio,
            system_spins: system,
            env_spins: env,
        })
    }
}

impl SpinSystem {
    pub fn builder(n: usize) -> SpinSystemBuilder {
        let n_alloc = n.min(MAX_SPINS + 1);
        SpinSystemBuilder {
            n,
            labels: (1..=n_alloc).map(|k| alloc::format!("S{k}")).collect(),
            offset_hz: vec![0.0; n_alloc],
            j_hz: vec![0.0; n_alloc * n_alloc],
            gradient_weights: vec![1.0; n_alloc],
            gamma_ratio: 1.0,
            system_spins: None,
            env_spins: None,
        }
    }

    /// ¹³C-labelled trichloroethylene: C1, C2 as the system, the proton as
    /// a one-spin environment. Offsets are zero (rotating frame on both
    /// carbons); callers place the lines with [`SpinSystem::with_offsets_hz`].
    pub fn trichloroethylene() -> Self {
        Self::builder(3)
            .labels(&["C1", "C2", "H"])
            .coupling(1, 2, 103.1)
            .coupling(2, 3, 201.3)
            .coupling(1, 3, 9.23)
            .gradient_weights(&[1.0, 1.0, PROTON_TO_CARBON_GAMMA])
            .partition(SpinSet::from_iter([1, 2]), SpinSet::single(3))
            .build()
            .expect("built-in system is valid")
    }

    /// Two system spins (coupled by `j12`) plus one environment spin per
    /// `(J_1k, J_2k)` pair.
    pub fn with_environment(j12: f64, env: &[(f64, f64)]) -> Result<Self> {
        let n = 2 + env.len();
        check_spin_count(n)?;
        let mut labels = vec![String::from("S1"), String::from("S2")];
        let mut b = Self::builder(n).coupling(1, 2, j12);
        for (i, &(j1, j2)) in env.iter().enumerate() {
            let k = i + 3;
            labels.push(alloc::format!("E{}", i + 1));
            b = b.coupling(1, k, j1).coupling(2, k, j2);
        }
        b.labels(&labels)
            .partition(SpinSet::from_iter([1, 2]), (3..=n).collect())
            .build()
    }

    pub fn with_offsets_hz(mut self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.n() || offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSystem("offsets must be n finite values".into()));
        }
        self.offset_hz = offsets.to_vec();
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// 1-based index of a spin label.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label).map(|i| i + 1)
    }

    pub fn offsets_hz(&self) -> &[f64] {
        &self.offset_hz
    }

    /// J_ij in Hz (1-based; 0 when out of range).
    pub fn j(&self, i: usize, j: usize) -> f64 {
        let n = self.n();
        if (1..=n).contains(&i) && (1..=n).contains(&j) {
            self.j_hz[(i - 1) * n + (j - 1)]
        } else {
            0.0
        }
    }

    pub fn j_matrix(&self) -> &[f64] {
        &self.j_hz
    }

    pub fn gradient_weights(&self) -> &[f64] {
        &self.gradient_weights
    }

    pub fn gamma_ratio(&self) -> f64 {
        self.gamma_ratio
    }

    pub fn system_spins(&self) -> SpinSet {
        self.system_spins
    }

    pub fn env_spins(&self) -> SpinSet {
        self.env_spins
    }

    pub fn all_spins(&self) -> SpinSet {
        SpinSet::all(self.n())
    }

    /// Diagonal of the Hamiltonian with Zeeman terms for spins in `zeeman`
    /// and couplings for pairs accepted by `keep_pair`.
    fn diagonal_energies(&self, zeeman: SpinSet, keep_pair: impl Fn(usize, usize) -> bool) -> Vec<f64> {
        let n = self.n();
        let mut pairs = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let jij = self.j(i, j);
                if jij != 0.0 && keep_pair(i, j) {
                    pairs.push((i, j, 2.0 * PI * jij));
                }
            }
        }
        (0..self.dim())
            .map(|b| {
                let mut e = 0.0;
                for k in zeeman.iter() {
                    e -= 2.0 * PI * self.offset_hz[k - 1] * m_z(b, k, n);
                }
                for &(i, j, w) in &pairs {
                    e += w * m_z(b, i, n) * m_z(b, j, n);
                }
                e
            })
            .collect()
    }

    /// `Σ_k -2πν_k I_z^k + Σ_{i<j} 2πJ_ij I_z^i I_z^j`.
    pub fn full_hamiltonian(&self) -> Operator {
        Operator::from_diagonal(&self.diagonal_energies(self.all_spins(), |_, _| true))
    }

    /// Full Hamiltonian with every term touching a spin outside `active`
    /// removed (ideal decoupling). Dimension stays 2^n.
    pub fn closed_hamiltonian(&self, active: SpinSet) -> Result<Operator> {
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }
        if !active.is_subset(self.all_spins()) {
            return Err(Error::SpinIndex {
                index: active.max_index(),
                n: self.n(),
            });
        }
        Ok(Operator::from_diagonal(&self.diagonal_energies(active, |i, j| {
            active.contains(i) && active.contains(j)
        })))
    }

    /// Couplings only: the Hamiltonian seen inside a refocused echo.
    pub fn effective_hamiltonian(&self) -> Operator {
        Operator::from_diagonal(&self.diagonal_energies(SpinSet::EMPTY, |_, _| true))
    }

    /// Zeeman terms only.
    pub fn zeeman_hamiltonian(&self) -> Operator {
        Operator::from_diagonal(&self.diagonal_energies(self.all_spins(), |_, _| false))
    }

    /// `Σ_{k∈env} 2π(J_1k I_z^1 + J_2k I_z^2) I_z^k`: system-environment
    /// couplings only.
    pub fn interaction_hamiltonian(&self) -> Result<Operator> {
        self.require_pair_system()?;
        let env = self.env_spins;
        Ok(Operator::from_diagonal(&self.diagonal_energies(
            SpinSet::EMPTY,
            |i, j| (i <= 2) && env.contains(j),
        )))
    }

    /// `2π J_12 I_z^1 I_z^2`.
    pub fn system_coupling_hamiltonian(&self) -> Result<Operator> {
        self.require_pair_system()?;
        Ok(Operator::from_diagonal(
            &self.diagonal_energies(SpinSet::EMPTY, |i, j| i == 1 && j == 2),
        ))
    }

    pub(crate) fn require_pair_system(&self) -> Result<()> {
        if self.system_spins != SpinSet::from_iter([1, 2]) {
            return Err(Error::SystemNotPair);
        }
        Ok(())
    }

    /// `α = arccos(γ¹/γ²)`, the flip angle that equalizes the two system
    /// spins' equilibrium polarizations.
    pub fn preparation_angle(&self) -> Result<f64> {
        preparation_angle(self.gamma_ratio)
    }

    /// `(J_1k, J_2k)` for each environment spin, in index order.
    pub fn environment_couplings(&self) -> Vec<(f64, f64)> {
        self.env_spins
            .iter()
            .map(|k| (self.j(1, k), self.j(2, k)))
            .collect()
    }
}

pub fn preparation_angle(gamma_ratio: f64) -> Result<f64> {
    if !(gamma_ratio > 0.0 && gamma_ratio <= 1.0) {
        return Err(Error::GammaRatio(gamma_ratio));
    }
    Ok(libm::acos(gamma_ratio))
}
