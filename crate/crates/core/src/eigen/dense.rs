//! Dense Hermitian diagonalization.
//!
//! Two independent classical algorithms:
//!
//! - [`hermitian_eigh`]: Householder reduction to a real symmetric
//!   tridiagonal matrix followed by implicit QL with Wilkinson-style shifts.
//!   This is the reference path used as the oracle for the iterative solver.
//! - [`jacobi_eigh`]: cyclic complex Jacobi rotations, used for the small
//!   projected problems inside the iterative solver.
//!
//! Both return eigenvalues in ascending order with orthonormal eigenvectors
//! stored as columns.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::DenseMatrix;
use crate::{Error, Result, C64};

const QL_MAX_ITER: usize = 60;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: DenseMatrix,
}

impl DenseEigen {
    pub fn vector(&self, j: usize) -> Vec<C64> {
        self.vectors.column(j)
    }
}

fn sort_ascending(values: Vec<f64>, vectors: DenseMatrix) -> DenseEigen {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut sorted = DenseMatrix::zeros(n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            sorted[(i, new)] = vectors[(i, old)];
        }
    }
    DenseEigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: sorted,
    }
}

/// Householder tridiagonalization + implicit QL.
pub fn hermitian_eigh(a: &DenseMatrix) -> Result<DenseEigen> {
    let n = a.dim();
    if n == 0 {
        return Ok(DenseEigen {
            values: Vec::new(),
            vectors: DenseMatrix::zeros(0),
        });
    }
    let mut m = a.clone();
    let mut q = DenseMatrix::identity(n);
    let zero = C64::new(0.0, 0.0);

    // Reduce column k below the subdiagonal with H = I − 2 v vᴴ.
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<C64> = (0..len).map(|i| m[(k + 1 + i, k)]).collect();
        let xnorm = libm::sqrt(x.iter().map(|c| c.norm_sqr()).sum::<f64>());
        let tail = x[1..].iter().map(|c| c.norm_sqr()).sum::<f64>();
        if xnorm == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = libm::sqrt(v.iter().map(|c| c.norm_sqr()).sum::<f64>());
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // p = A v on the trailing block
        let mut p = vec![zero; len];
        for i in 0..len {
            let mut s = zero;
            for j in 0..len {
                s += m[(k + 1 + i, k + 1 + j)] * v[j];
            }
            p[i] = s;
        }
        let vp: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - vp * vi).collect();
        for i in 0..len {
            for j in 0..len {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                m[(k + 1 + i, k + 1 + j)] -= upd * 2.0;
            }
        }
        // column/row k: H x = alpha e1
        m[(k + 1, k)] = alpha;
        m[(k, k + 1)] = alpha.conj();
        for i in 1..len {
            m[(k + 1 + i, k)] = zero;
            m[(k, k + 1 + i)] = zero;
        }
        // Q ← Q H
        for r in 0..n {
            let mut s = zero;
            for j in 0..len {
                s += q[(r, k + 1 + j)] * v[j];
            }
            for j in 0..len {
                q[(r, k + 1 + j)] -= s * v[j].conj() * 2.0;
            }
        }
    }

    // Phase-scale the subdiagonal to be real and non-negative.
    let mut d: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut e = vec![0.0; n];
    let mut phases = vec![C64::new(1.0, 0.0); n];
    for i in 0..n - 1 {
        let sub = m[(i + 1, i)];
        let r = sub.norm();
        e[i] = r;
        phases[i + 1] = if r > 0.0 {
            phases[i] * sub / r
        } else {
            phases[i]
        };
    }
    for r in 0..n {
        for c in 0..n {
            q[(r, c)] *= phases[c];
        }
    }

    tridiagonal_ql(&mut d, &mut e, &mut q)?;
    Ok(sort_ascending(d, q))
}

/// Implicit QL on a symmetric tridiagonal matrix with diagonal `d` and
/// subdiagonal `e[i] = T[i+1][i]` (`e[n−1]` unused). Rotations are
/// accumulated into the columns of `z`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut DenseMatrix) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::InvalidParameter(
                    "tridiagonal QL did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.dim() {
                    let f = z[(k, i + 1)];
                    z[(k, i + 1)] = z[(k, i)] * s + f * c;
                    z[(k, i)] = z[(k, i)] * c - f * s;
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cyclic Jacobi for a small Hermitian matrix.
pub fn jacobi_eigh(a: &DenseMatrix) -> Result<DenseEigen> {
    let n = a.dim();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
    }
    let mut v = DenseMatrix::identity(n);
    let total: f64 = m.as_slice().iter().map(|c| c.norm_sqr()).sum();
    let thresh = (f64::EPSILON * f64::EPSILON) * total;
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off <= thresh * 0.25 || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let abs = apq.norm();
                if abs == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // J = diag(1, ū)·R(θ) with u = apq/|apq|
                let u = apq / abs;
                let theta = (aqq - app) / (2.0 * abs);
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::hypot(theta, 1.0))
                } else {
                    -1.0 / (-theta + libm::hypot(theta, 1.0))
                };
                let c = 1.0 / libm::hypot(t, 1.0);
                let s = t * c;
                // columns: A ← A J, with J_pp = c, J_pq = s, J_qp = −s ū, J_qq = c ū
                let jqp = -u.conj() * s;
                let jqq = u.conj() * c;
                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * c + akq * jqp;
                    m[(k, q)] = akp * s + akq * jqq;
                }
                // rows: A ← Jᴴ A
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = apk * c + aqk * jqp.conj();
                    m[(q, k)] = apk * s + aqk * jqq.conj();
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * jqp;
                    v[(k, q)] = vkp * s + vkq * jqq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::InvalidParameter(
            "Jacobi sweeps did not converge".into(),
        ));
    }
    let values = (0..n).map(|i| m[(i, i)].re).collect();
    Ok(sort_ascending(values, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        let mut a = DenseMatrix::zeros(n);
        for i in 0..n {
            a[(i, i)] = C64::new(u(), 0.0);
            for j in 0..i {
                let z = C64::new(u(), u());
                a[(i, j)] = z;
                a[(j, i)] = z.conj();
            }
        }
        a
    }

    fn check_decomposition(a: &DenseMatrix, e: &DenseEigen, tol: f64) {
        let n = a.dim();
        for j in 0..n {
            let v = e.vector(j);
            for i in 0..n {
                let av: C64 = (0..n).map(|k| a[(i, k)] * v[k]).sum();
                assert!((av - v[i] * e.values[j]).norm() < tol, "residual pair {j}");
            }
            for k in 0..n {
                let g: C64 = (0..n)
                    .map(|i| e.vectors[(i, j)].conj() * e.vectors[(i, k)])
                    .sum();
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g - want).norm() < tol, "orthonormality {j},{k}");
            }
        }
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn householder_ql_on_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (17, 4), (60, 5)] {
            let a = random_hermitian(n, seed);
            let e = hermitian_eigh(&a).unwrap();
            check_decomposition(&a, &e, 1e-12 * n as f64);
        }
    }

    #[test]
    fn jacobi_on_random_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (30, 4)] {
            let a = random_hermitian(n, seed);
            let e = jacobi_eigh(&a).unwrap();
            check_decomposition(&a, &e, 1e-12 * n as f64);
        }
    }

    #[test]
    fn both_routes_agree() {
        let a = random_hermitian(40, 9);
        let x = hermitian_eigh(&a).unwrap();
        let y = jacobi_eigh(&a).unwrap();
        for (p, q) in x.values.iter().zip(&y.values) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let mut a = DenseMatrix::identity(6);
        a[(5, 5)] = C64::new(3.0, 0.0);
        let e = hermitian_eigh(&a).unwrap();
        assert_eq!(e.values[..5], [1.0; 5]);
        let e = jacobi_eigh(&a).unwrap();
        assert_eq!(e.values[5], 3.0);
    }
}
