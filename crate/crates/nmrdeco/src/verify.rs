//! Engine-versus-oracle and identity checks run by `nmrdeco verify`.

use std::f64::consts::PI;

use nmrdeco_core::analysis::{corner_coherence, partial_trace, Experiment};
use nmrdeco_core::engine::{deviation_distance, refocus_propagator, SimState};
use nmrdeco_core::pulseq::Sequence;
use nmrdeco_core::{Operator, SpinSet, SpinSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracle::{self, Dense, Oracle};

pub const ECHO_TOL: f64 = 1e-10;
pub const ORACLE_TOL: f64 = 1e-12;
pub const DEVIATION_TOL: f64 = 1e-8;
pub const ENVELOPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks are reported but do not fail the suite.
    pub informational: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            informational: false,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = match (self.passed, self.informational) {
            (true, _) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "INFO",
        };
        format!("[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Largest entry of `u − e^{iφ}v`, with `φ` fixed on the largest entry of `v`.
pub fn phase_free_distance(u: &Operator, v: &Operator) -> f64 {
    let (k, _) = v
        .as_slice()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty operator");
    let ratio = u.as_slice()[k] / v.as_slice()[k];
    let phase = ratio / ratio.norm();
    u.max_abs_diff(&v.scale_complex(phase))
}

pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> SpinSystem {
    let mut b = SpinSystem::builder(n);
    for k in 1..=n {
        b = b.offset_hz(k, rng.gen_range(-10_000.0..10_000.0));
        for j in (k + 1)..=n {
            b = b.coupling(k, j, rng.gen_range(-500.0..500.0));
        }
    }
    b.build().expect("random system is valid")
}

/// Echo propagator against `[π]_x·exp(−iH_ef t)` up to a global phase.
pub fn check_echo(sys: &SpinSystem, systems: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut cases: Vec<(SpinSystem, f64)> = vec![(sys.clone(), 3.5e-3)];
    for _ in 0..systems {
        let t = rng.gen_range(0.0..20e-3);
        cases.push((random_system(&mut rng, 3), t));
    }
    for (s, t) in &cases {
        let u = refocus_propagator(s, *t).expect("valid duration");
        let v = Oracle::new(s).echo_reference(*t).to_operator();
        worst = worst.max(phase_free_distance(&u, &v));
    }
    Check::new(
        "echo identity",
        worst < ECHO_TOL,
        format!("{} systems, max |U - e^(i phi) R exp(-i H_ef t)| = {worst:.2e} (tol {ECHO_TOL:.0e})", cases.len()),
    )
}

/// Engine and oracle run the same sequences from the same state.
pub fn check_sequences(sys: &SpinSystem, prep: &Sequence, entangle: &Sequence) -> nmrdeco_core::Result<Vec<Check>> {
    let env = sys.env_spins();
    let start = SimState::equilibrium(sys.clone())?.with_decoupled(env)?;
    let prepared = start.run(prep)?;
    let entangled = prepared.run(entangle)?;

    let o = Oracle::new(sys);
    let (o_prep, dec) = o.run(&o.equilibrium(), prep, env)?;
    let (o_ent, _) = o.run(&o_prep, entangle, dec)?;
    let d_prep = prepared.rho().max_abs_diff(&o_prep.to_operator());
    let d_ent = entangled.rho().max_abs_diff(&o_ent.to_operator());

    let n = sys.n();
    let rho_ef = oracle::pseudo_pure(n).to_operator();
    let target = oracle::entangled(n).to_operator();
    let from_ef = SimState::new(sys.clone(), rho_ef.clone())?
        .with_decoupled(env)?
        .run(entangle)?;
    let d_eq3 = deviation_distance(from_ef.rho(), &target);
    let d_chain = deviation_distance(entangled.rho(), &target);

    let full = deviation_distance(prepared.rho(), &rho_ef);
    let diag = |m: &Operator| Operator::from_diagonal(&m.diagonal().iter().map(|z| z.re).collect::<Vec<_>>());
    let pops = deviation_distance(&diag(prepared.rho()), &rho_ef);

    let mut checks = vec![
        Check::new(
            "preparation: engine = oracle",
            d_prep <= ORACLE_TOL,
            format!("max entry difference {d_prep:.2e} (tol {ORACLE_TOL:.0e})"),
        ),
        Check::new(
            "entangling: engine = oracle",
            d_ent <= ORACLE_TOL,
            format!("max entry difference {d_ent:.2e} (tol {ORACLE_TOL:.0e})"),
        ),
        Check::new(
            "entangling maps Iz1+Iz2-2Iz1Iz2 to Ix1Ix2-Iz1Iz2-Iy1Iy2",
            d_eq3 <= DEVIATION_TOL,
            format!("normalized deviation distance {d_eq3:.2e} (tol {DEVIATION_TOL:.0e})"),
        ),
        Check::new(
            "preparation populations are pseudo-pure |dd>",
            pops <= DEVIATION_TOL,
            format!("normalized diagonal distance {pops:.2e} (tol {DEVIATION_TOL:.0e})"),
        ),
    ];
    let mut strict = Check::new(
        "preparation yields exactly Iz1+Iz2-2Iz1Iz2",
        full <= DEVIATION_TOL,
        format!(
            "normalized deviation distance {full:.2e}; the residual is zero-quantum coherence, \
             which a gradient cannot remove between spins of equal gradient weight"
        ),
    );
    strict.informational = true;
    checks.push(strict);
    let mut chain = Check::new(
        "prepared-then-entangled state is Ix1Ix2-Iz1Iz2-Iy1Iy2",
        d_chain <= DEVIATION_TOL,
        format!("normalized deviation distance {d_chain:.2e}"),
    );
    chain.informational = true;
    checks.push(chain);
    Ok(checks)
}

/// Traced corner coherence along a scan against the analytic envelope, and
/// the full evolved state against the oracle.
pub fn check_trace_identity(exp: &Experiment, times: &[f64]) -> nmrdeco_core::Result<Vec<Check>> {
    let sys = exp.system();
    let o = Oracle::new(sys);
    let start = Dense::from_operator(exp.entangled().rho());
    let (mut worst_env, mut worst_state): (f64, f64) = (0.0, 0.0);
    for &t in times {
        let c = exp.corner_coherence(t)?;
        worst_env = worst_env.max((c + exp.envelope(t)).abs());
        let engine = exp.evolved(t)?;
        let reference = start.conj_by(&o.echo(t)).to_operator();
        worst_state = worst_state.max(engine.rho().max_abs_diff(&reference));
    }
    Ok(vec![
        Check::new(
            "traced corner coherence = -prod cos(pi (J1k+J2k) t)",
            worst_env <= ENVELOPE_TOL,
            format!("{} times, max error {worst_env:.2e} (tol {ENVELOPE_TOL:.0e})", times.len()),
        ),
        Check::new(
            "refocused evolution: engine = oracle",
            worst_state <= ECHO_TOL,
            format!("max entry difference {worst_state:.2e} (tol {ECHO_TOL:.0e})"),
        ),
    ])
}

/// Brute-force reduced coherence for 1..=`max_env` environment spins with
/// random couplings, against the product of cosines.
pub fn check_multi_env(max_env: usize, n_times: usize, seed: u64) -> nmrdeco_core::Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    for n_env in 1..=max_env {
        let couplings: Vec<(f64, f64)> = (0..n_env)
            .map(|_| (rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)))
            .collect();
        let sys = SpinSystem::with_environment(rng.gen_range(50.0..300.0), &couplings)?;
        worst = worst.max(multi_env_error(&sys, &mut rng, n_times, &mut worst_oracle)?);
    }
    let passed = worst <= ENVELOPE_TOL && worst_oracle <= ENVELOPE_TOL;
    Ok(Check::new(
        "multi-environment product of cosines",
        passed,
        format!(
            "N = 1..={max_env}, {n_times} times each: engine error {worst:.2e}, oracle error {worst_oracle:.2e} (tol {ENVELOPE_TOL:.0e})"
        ),
    ))
}

/// Largest `|corner + Π cos|` for `sys` over random times; the oracle's
/// error is folded into `worst_oracle`.
pub fn multi_env_error(
    sys: &SpinSystem,
    rng: &mut ChaCha8Rng,
    n_times: usize,
    worst_oracle: &mut f64,
) -> nmrdeco_core::Result<f64> {
    let n = sys.n();
    let start = SimState::new(sys.clone(), oracle::entangled(n).to_operator())?;
    let couplings = sys.environment_couplings();
    let mut worst: f64 = 0.0;
    for _ in 0..n_times {
        let t = rng.gen_range(0.0..20e-3);
        let expected: f64 = -couplings
            .iter()
            .map(|(a, b)| (PI * (a + b) * t).cos())
            .product::<f64>();
        let evolved = start.multi_env_evolve(t)?;
        let reduced = partial_trace(evolved.rho(), n, sys.env_spins())?;
        worst = worst.max((corner_coherence(&reduced)? - expected).abs());
        *worst_oracle = worst_oracle.max((oracle::multi_env_corner(sys, t) - expected).abs());
    }
    Ok(worst)
}

pub struct Suite {
    pub checks: Vec<Check>,
}

impl Suite {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }
}

/// Every check, against the configured system where one applies.
pub fn run_all(exp: &Experiment, prep: &Sequence, entangle: &Sequence, times: &[f64]) -> nmrdeco_core::Result<Suite> {
    let sys = exp.system();
    let mut checks = vec![check_echo(sys, 50, 1)];
    checks.extend(check_sequences(sys, prep, entangle)?);
    checks.extend(check_trace_identity(exp, times)?);
    checks.push(check_multi_env(4, 20, 2)?);
    if !sys.env_spins().is_empty() && sys.system_spins() == SpinSet::from_iter([1, 2]) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut worst_oracle = 0.0;
        let worst = multi_env_error(sys, &mut rng, 20, &mut worst_oracle)?;
        checks.push(Check::new(
            "configured environment: product of cosines",
            worst <= ENVELOPE_TOL && worst_oracle <= ENVELOPE_TOL,
            format!("20 times: engine error {worst:.2e}, oracle error {worst_oracle:.2e}"),
        ));
    }
    Ok(Suite { checks })
}
