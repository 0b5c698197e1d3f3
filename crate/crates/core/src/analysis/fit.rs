use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of trial periods in the coarse search.
pub const FIT_GRID_POINTS: usize = 200;
/// Iteration cap for the damped Gauss–Newton refinement.
pub const FIT_MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-12;
const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate data: the curve is identically zero or flat")]
    Degenerate,
    #[error("data span {span:e} s covers less than half of the fitted period {period:e} s")]
    InsufficientSpan { span: f64, period: f64 },
    #[error("refinement did not converge within {0} iterations")]
    NoConvergence(usize),
}

/// Peak amplitude as a function of evolution time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecoherenceCurve {
    points: Vec<(f64, f64)>,
}

impl DecoherenceCurve {
    /// Requires finite values, `t >= 0` and strictly increasing `t`.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        let finite = points.iter().all(|(t, a)| t.is_finite() && a.is_finite());
        let ordered = points.windows(2).all(|w| w[0].0 < w[1].0);
        let positive = points.first().is_none_or(|p| p.0 >= 0.0);
        if !(finite && ordered && positive) {
            return Err(Error::CurveOrder);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.points.first(), self.points.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }
}

/// Least-squares fit of `A·cos(2πt/T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineFit {
    pub amplitude: f64,
    /// Seconds; always positive.
    pub period: f64,
    pub rms_residual: f64,
}

impl CosineFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * libm::cos(2.0 * PI * t / self.period)
    }
}

fn sse(points: &[(f64, f64)], a: f64, period: f64) -> f64 {
    points
        .iter()
        .map(|(t, y)| {
            let r = a * libm::cos(2.0 * PI * t / period) - y;
            r * r
        })
        .sum()
}

/// Best amplitude for a fixed period, with its squared error.
fn best_amplitude(points: &[(f64, f64)], period: f64) -> Option<(f64, f64)> {
    let (mut cy, mut cc) = (0.0, 0.0);
    for (t, y) in points {
        let c = libm::cos(2.0 * PI * t / period);
        cy += c * y;
        cc += c * c;
    }
    if cc <= 0.0 {
        return None;
    }
    let a = cy / cc;
    Some((a, sse(points, a, period)))
}

/// Fits `A·cos(2πt/T)` to `curve`: a linear grid of
/// [`FIT_GRID_POINTS`] trial periods over `[span/10, 4·span]` (amplitude in
/// closed form at each) followed by Levenberg–Marquardt on `(A, T)`.
pub fn fit_cosine(curve: &DecoherenceCurve) -> core::result::Result<CosineFit, FitError> {
    let pts = curve.points();
    if pts.len() < MIN_POINTS {
        return Err(FitError::TooFewPoints(pts.len()));
    }
    let ymax = pts.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let ytop = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if ymax == 0.0 || ytop - ymin <= 1e-9 * ymax {
        return Err(FitError::Degenerate);
    }
    let span = curve.span();
    let (lo, hi) = (span / 10.0, 4.0 * span);

    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..FIT_GRID_POINTS {
        let period = lo + (hi - lo) * i as f64 / (FIT_GRID_POINTS - 1) as f64;
        if let Some((a, e)) = best_amplitude(pts, period) {
            if best.is_none_or(|b| e < b.2) {
                best = Some((a, period, e));
            }
        }
    }
    let (mut a, mut period, mut err) = best.ok_or(FitError::Degenerate)?;

    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..FIT_MAX_ITER {
        // Normal equations for the residual r = A cos(ωt) − y, ω = 2π/T.
        let (mut jaa, mut jat, mut jtt, mut ga, mut gt) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (t, y) in pts {
            let phase = 2.0 * PI * t / period;
            let (s, c) = (libm::sin(phase), libm::cos(phase));
            let r = a * c - y;
            let da = c;
            let dt = a * s * phase / period;
            jaa += da * da;
            jat += da * dt;
            jtt += dt * dt;
            ga += da * r;
            gt += dt * r;
        }
        let mut accepted = false;
        let mut step = (0.0, 0.0);
        for _ in 0..32 {
            let m00 = jaa * (1.0 + lambda);
            let m11 = jtt * (1.0 + lambda);
            let det = m00 * m11 - jat * jat;
            if det <= 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let sa = -(m11 * ga - jat * gt) / det;
            let st = -(m00 * gt - jat * ga) / det;
            let (na, nt) = (a + sa, period + st);
            if nt > 0.0 {
                let ne = sse(pts, na, nt);
                if ne <= err {
                    a = na;
                    period = nt;
                    err = ne;
                    step = (sa, st);
                    accepted = true;
                    lambda = (lambda * 0.3).max(1e-15);
                    break;
                }
            }
            lambda *= 10.0;
        }
        let small = step.0.abs() <= STEP_TOL * a.abs().max(f64::MIN_POSITIVE)
            && step.1.abs() <= STEP_TOL * period;
        if !accepted || small {
            // No downhill step left means the minimum is pinned to the
            // available precision.
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NoConvergence(FIT_MAX_ITER));
    }
    if span < period / 2.0 {
        return Err(FitError::InsufficientSpan { span, period });
    }
    Ok(CosineFit {
        amplitude: a,
        period,
        rms_residual: libm::sqrt(err / pts.len() as f64),
    })
}
