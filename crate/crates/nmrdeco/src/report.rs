//! Human-readable state reports: normalized matrices and product-operator
//! coefficient tables.

use std::fmt::Write;

use nmrdeco_core::engine::{deviation_distance, normalize_deviation, DEVIATION_TOL};
use nmrdeco_core::opalg::product_operator;
use nmrdeco_core::{Axis, Operator};

/// Entries below this (after normalization) print as zero.
const ZERO: f64 = 1e-10;

/// `x` rounded to four significant digits.
pub fn sig4(x: f64) -> String {
    if x.abs() < ZERO {
        return "0".into();
    }
    // Round first so that 0.99999 prints as 1.000, not 1.0000.
    let x: f64 = format!("{x:.3e}").parse().expect("formatted float parses");
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{x:.3e}");
    }
    let decimals = (3 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn complex4(re: f64, im: f64) -> String {
    match (re.abs() < ZERO, im.abs() < ZERO) {
        (_, true) => sig4(re),
        (true, false) => format!("{}i", sig4(im)),
        (false, false) => {
            let sign = if im < 0.0 { '-' } else { '+' };
            format!("{}{sign}{}i", sig4(re), sig4(im.abs()))
        }
    }
}

/// The deviation part of `rho` scaled to unit largest entry, one row per
/// line.
pub fn format_matrix(rho: &Operator) -> String {
    let Some(m) = normalize_deviation(rho) else {
        return "(identity: no deviation)\n".into();
    };
    let dim = m.dim();
    let cells: Vec<String> = (0..dim * dim)
        .map(|i| {
            let z = m[(i / dim, i % dim)];
            complex4(z.re, z.im)
        })
        .collect();
    let width = cells.iter().map(|c| c.len()).max().unwrap_or(1);
    let mut out = String::new();
    for r in 0..dim {
        let row: Vec<String> = (0..dim)
            .map(|c| format!("{:>width$}", cells[r * dim + c]))
            .collect();
        out.push_str(&row.join("  "));
        out.push('\n');
    }
    out
}

/// One product-operator term: `(axis, spin)` factors and a coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub factors: Vec<(Axis, usize)>,
    pub coefficient: f64,
}

impl Term {
    pub fn name(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(a, k)| {
                let axis = match a {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                    Axis::Z => 'z',
                };
                format!("I{axis}{k}")
            })
            .collect();
        parts.join(" ")
    }
}

/// Expansion of the deviation part of `rho` in products of `I_x, I_y,
/// I_z` over the spins, ordered by the number of factors and then by spin
/// and axis. Coefficients are scaled so the first surviving term has
/// magnitude 1; negligible terms are dropped.
pub fn decompose(rho: &Operator, n: usize) -> nmrdeco_core::Result<Vec<Term>> {
    let mut terms = Vec::new();
    let mut assignment = vec![0u8; n];
    // Enumerate all 4^n factor assignments (0 = identity).
    for code in 1..(1usize << (2 * n)) {
        for (k, slot) in assignment.iter_mut().enumerate() {
            *slot = ((code >> (2 * (n - 1 - k))) & 3) as u8;
        }
        let factors: Vec<(Axis, usize)> = assignment
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0)
            .map(|(k, a)| {
                let axis = [Axis::X, Axis::Y, Axis::Z][*a as usize - 1];
                (axis, k + 1)
            })
            .collect();
        let p = product_operator(&factors, n, 1.0)?;
        let norm = p.matmul(&p).trace().re;
        let c = p.matmul(rho).trace().re / norm;
        terms.push(Term {
            factors,
            coefficient: c,
        });
    }
    terms.sort_by(|a, b| {
        a.factors
            .len()
            .cmp(&b.factors.len())
            .then_with(|| key(&a.factors).cmp(&key(&b.factors)))
    });
    let biggest = terms.iter().map(|t| t.coefficient.abs()).fold(0.0, f64::max);
    terms.retain(|t| t.coefficient.abs() > 1e-9 * biggest && biggest > 0.0);
    if let Some(first) = terms.first().map(|t| t.coefficient.abs()) {
        for t in &mut terms {
            t.coefficient /= first;
        }
    }
    Ok(terms)
}

fn key(f: &[(Axis, usize)]) -> Vec<(usize, u8)> {
    f.iter()
        .map(|(a, k)| {
            (
                *k,
                match a {
                    Axis::X => 0,
                    Axis::Y => 1,
                    Axis::Z => 2,
                },
            )
        })
        .collect()
}

pub fn format_terms(terms: &[Term]) -> String {
    let mut out = String::new();
    let width = terms.iter().map(|t| t.name().len()).max().unwrap_or(0);
    for t in terms {
        let _ = writeln!(out, "  {:<width$}  {:>10}", t.name(), sig4(t.coefficient));
    }
    out
}

/// Reference states the report recognizes.
pub fn named_states(n: usize) -> nmrdeco_core::Result<Vec<(&'static str, Operator)>> {
    let p = |f: &[(Axis, usize)], s: f64| product_operator(f, n, s);
    let (x, y, z) = (Axis::X, Axis::Y, Axis::Z);
    Ok(vec![
        (
            "pseudo-pure |dd>: Iz1 + Iz2 - 2 Iz1 Iz2",
            &(&p(&[(z, 1)], 1.0)? + &p(&[(z, 2)], 1.0)?) + &p(&[(z, 1), (z, 2)], -2.0)?,
        ),
        (
            "entangled: Ix1 Ix2 - Iz1 Iz2 - Iy1 Iy2",
            &(&p(&[(x, 1), (x, 2)], 1.0)? - &p(&[(z, 1), (z, 2)], 1.0)?)
                - &p(&[(y, 1), (y, 2)], 1.0)?,
        ),
    ])
}

/// Full text report for `rho` on `n` spins.
pub fn state_report(rho: &Operator, n: usize) -> nmrdeco_core::Result<String> {
    let mut out = String::new();
    out.push_str("normalized deviation matrix (basis |u..u> first, spin 1 most significant):\n");
    out.push_str(&format_matrix(rho));
    out.push_str("\nproduct-operator coefficients:\n");
    let terms = decompose(rho, n)?;
    if terms.is_empty() {
        out.push_str("  (none)\n");
    }
    out.push_str(&format_terms(&terms));
    out.push('\n');
    for (name, op) in named_states(n)? {
        let d = deviation_distance(rho, &op);
        let verdict = if d <= DEVIATION_TOL { "yes" } else { "no" };
        let _ = writeln!(out, "matches {name}: {verdict} (max deviation {})", sig4(d));
    }
    Ok(out)
}
