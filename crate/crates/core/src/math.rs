//! Small numeric helpers: deterministic pairwise reduction and dense complex
//! vector kernels.

use alloc::vec::Vec;
use core::ops::Add;

use crate::C64;

const PAIRWISE_BLOCK: usize = 64;

/// Sums `f(i)` for `i in 0..n` with a fixed pairwise reduction tree.
///
/// The tree only depends on `n`, so results are reproducible bit-for-bit.
pub fn pairwise_sum<T, F>(n: usize, f: F) -> T
where
    T: Copy + Default + Add<Output = T>,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(lo: usize, hi: usize, f: &F) -> T
    where
        T: Copy + Default + Add<Output = T>,
        F: Fn(usize) -> T,
    {
        if hi - lo <= PAIRWISE_BLOCK {
            let mut acc = T::default();
            for i in lo..hi {
                acc = acc + f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    rec(0, n, &f)
}

/// Pairwise sum of a slice.
pub fn sum_slice<T>(xs: &[T]) -> T
where
    T: Copy + Default + Add<Output = T>,
{
    pairwise_sum(xs.len(), |i| xs[i])
}

/// `Σ conj(a_i) b_i`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.re * x.re + x.im * x.im).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    libm::sqrt(norm_sqr(a))
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Dense row-major complex matrix, used for small projected problems and the
/// reference diagonalization.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }
}

impl core::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let s: f64 = pairwise_sum(1000, |i| i as f64);
        assert_eq!(s, 499_500.0);
        let e: f64 = pairwise_sum(0, |_| 1.0);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn dot_is_conjugate_linear_in_first_slot() {
        let a = [C64::new(0.0, 1.0)];
        let b = [C64::new(1.0, 0.0)];
        assert_eq!(dot(&a, &b), C64::new(0.0, -1.0));
    }
}
