//! Conjugate gradients for `(A + s I) x = b` with `A` Hermitian.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{axpy, dot, norm};
use crate::operators::CsrMatrix;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final `‖r‖ / ‖b‖`.
    pub relative_residual: f64,
    /// Set when a non-positive curvature `pᴴ(A+s)p ≤ 0` was met.
    pub breakdown: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStop {
    /// Stop once `‖r‖ ≤ rel_tol ‖b‖`.
    pub rel_tol: f64,
    /// Or once `‖r‖ ≤ backward_tol ‖x‖`, i.e. `x` solves a system perturbed
    /// by at most `backward_tol` in norm.
    pub backward_tol: f64,
    pub max_iter: usize,
}

/// Solves from a zero initial guess.
pub fn solve_shifted(a: &CsrMatrix, shift: f64, b: &[C64], stop: CgStop) -> (Vec<C64>, CgOutcome) {
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                breakdown: false,
            },
        );
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![zero; n];
    let mut rr = dot(&r, &r).re;
    let target = stop.rel_tol * bnorm;
    let mut it = 0;
    let mut breakdown = false;
    while it < stop.max_iter && libm::sqrt(rr) > target {
        a.matvec(&p, &mut ap);
        axpy(C64::new(shift, 0.0), &p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            breakdown = true;
            break;
        }
        let alpha = rr / pap;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * beta;
        }
        rr = rr_new;
        it += 1;
        if libm::sqrt(rr) <= stop.backward_tol * norm(&x) {
            break;
        }
    }
    (
        x,
        CgOutcome {
            iterations: it,
            relative_residual: libm::sqrt(rr) / bnorm,
            breakdown,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::HermitianBuilder;

    #[test]
    fn solves_a_path_laplacian() {
        let n = 50;
        let mut bld = HermitianBuilder::new(n);
        for i in 0..n - 1 {
            bld.add_term(
                1.0,
                &[(i, C64::new(1.0, 0.0)), (i + 1, C64::new(0.0, -1.0))],
            );
        }
        bld.add(0, 0, C64::new(1.0, 0.0));
        let a = bld.build();
        let xs: Vec<C64> = (0..n).map(|i| C64::new(i as f64, 1.0)).collect();
        let b = a.apply(&xs);
        let stop = CgStop {
            rel_tol: 1e-13,
            backward_tol: 0.0,
            max_iter: 10 * n,
        };
        let (x, out) = solve_shifted(&a, 0.0, &b, stop);
        assert!(!out.breakdown);
        let err: f64 = x
            .iter()
            .zip(&xs)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "err {err}");
    }
}
