//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! Row-major storage. Dimensions here never exceed a few dozen, so the
//! O(n³) per sweep cost is irrelevant next to the unitarity it buys.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

const MAX_SWEEPS: usize = 64;

pub(crate) struct HermitianEigen {
    pub values: Vec<f64>,
    /// Row-major like the input: `vectors[r * dim + j]` is component `r`
    /// of eigenvector `j`.
    pub vectors: Vec<Complex64>,
}

fn off_norm2(a: &[Complex64], dim: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            if r != c {
                s += a[r * dim + c].norm_sqr();
            }
        }
    }
    s
}

/// Diagonalizes `a` (assumed Hermitian). Only the Hermitian part is used.
pub(crate) fn hermitian_eigen(a: &[Complex64], dim: usize) -> HermitianEigen {
    let mut m: Vec<Complex64> = a.to_vec();
    // Symmetrize so round-off in the input cannot leak anti-Hermitian parts.
    for r in 0..dim {
        m[r * dim + r] = Complex64::new(m[r * dim + r].re, 0.0);
        for c in (r + 1)..dim {
            let h = (m[r * dim + c] + m[c * dim + r].conj()) * 0.5;
            m[r * dim + c] = h;
            m[c * dim + r] = h.conj();
        }
    }
    let mut v = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        v[i * dim + i] = Complex64::new(1.0, 0.0);
    }

    let total: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let floor = (total * 1e-32).max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        if off_norm2(&m, dim) <= floor {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let beta = m[p * dim + q];
                let mag = beta.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let alpha = m[p * dim + p].re;
                let gamma = m[q * dim + q].re;
                // Phase-rotate the (p,q) block to a real symmetric one, then
                // apply the classic real Jacobi rotation.
                let phase = beta / mag;
                let tau = (gamma - alpha) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                // J = D R with D = diag(1, conj(phase)), R = [[c, s], [-s, c]].
                let j_pp = Complex64::new(c, 0.0);
                let j_pq = Complex64::new(s, 0.0);
                let j_qp = phase.conj() * (-s);
                let j_qq = phase.conj() * c;

                for k in 0..dim {
                    let akp = m[k * dim + p];
                    let akq = m[k * dim + q];
                    m[k * dim + p] = akp * j_pp + akq * j_qp;
                    m[k * dim + q] = akp * j_pq + akq * j_qq;
                }
                for k in 0..dim {
                    let apk = m[p * dim + k];
                    let aqk = m[q * dim + k];
                    m[p * dim + k] = j_pp.conj() * apk + j_qp.conj() * aqk;
                    m[q * dim + k] = j_pq.conj() * apk + j_qq.conj() * aqk;
                }
                m[p * dim + q] = Complex64::new(0.0, 0.0);
                m[q * dim + p] = Complex64::new(0.0, 0.0);
                m[p * dim + p] = Complex64::new(m[p * dim + p].re, 0.0);
                m[q * dim + q] = Complex64::new(m[q * dim + q].re, 0.0);

                for k in 0..dim {
                    let vkp = v[k * dim + p];
                    let vkq = v[k * dim + q];
                    v[k * dim + p] = vkp * j_pp + vkq * j_qp;
                    v[k * dim + q] = vkp * j_pq + vkq * j_qq;
                }
            }
        }
    }

    HermitianEigen {
        values: (0..dim).map(|i| m[i * dim + i].re).collect(),
        vectors: v,
    }
}
