//! Compressed sparse row storage for Hermitian matrices.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::DenseMatrix;
use crate::{Error, Result, C64};

/// Square CSR matrix. Column indices are sorted within each row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from raw CSR arrays, validating the layout.
    pub fn from_raw(
        dim: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<C64>,
    ) -> Result<Self> {
        if row_ptr.len() != dim + 1 {
            return Err(Error::LengthMismatch {
                left: row_ptr.len(),
                right: dim + 1,
            });
        }
        if col_idx.len() != values.len() || row_ptr[dim] != values.len() || row_ptr[0] != 0 {
            return Err(Error::LengthMismatch {
                left: col_idx.len(),
                right: values.len(),
            });
        }
        for r in 0..dim {
            let (a, b) = (row_ptr[r], row_ptr[r + 1]);
            if a > b || b > col_idx.len() {
                return Err(Error::InvalidParameter("row pointers not monotone".into()));
            }
            let cols = &col_idx[a..b];
            if cols.iter().any(|&c| c >= dim) || cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(
                    "column indices unsorted or out of range".into(),
                ));
            }
        }
        Ok(Self {
            dim,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Iterates `(col, value)` over row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[a..b].binary_search(&c) {
            Ok(k) => self.values[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut re = 0.0;
            let mut im = 0.0;
            for k in a..b {
                let v = self.values[k];
                let xv = x[self.col_idx[k]];
                re += v.re * xv.re - v.im * xv.im;
                im += v.re * xv.im + v.im * xv.re;
            }
            *yr = C64::new(re, im);
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// Largest absolute row sum, an upper bound on `‖A‖₂`.
    pub fn gershgorin_norm(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `min_r (a_rr − Σ_{c≠r} |a_rc|)`, a lower bound on the spectrum.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                let mut diag = 0.0;
                let mut off = 0.0;
                for (c, v) in self.row(r) {
                    if c == r {
                        diag = v.re;
                    } else {
                        off += v.norm();
                    }
                }
                diag - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Bitwise check `a_rc == conj(a_cr)` over all stored entries.
    pub fn is_exactly_hermitian(&self) -> bool {
        (0..self.dim).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v.conj()))
    }

    /// Principal submatrix on `keep` (sorted, distinct indices).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.dim];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old in keep {
            for (c, v) in self.row(old) {
                if map[c] != usize::MAX {
                    col_idx.push(map[c]);
                    values.push(v);
                }
            }
            row_ptr.push(values.len());
        }
        Self {
            dim: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Entrywise multiplication by a real scalar.
    pub fn scaled(mut self, s: f64) -> Self {
        for v in self.values.iter_mut() {
            *v *= s;
        }
        self
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Accumulates upper-triangle contributions and emits an exactly Hermitian
/// CSR matrix: duplicates are summed in insertion order, the lower triangle
/// is the bitwise conjugate of the upper one and the diagonal is real.
#[derive(Clone, Debug, Default)]
pub struct HermitianBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, C64)>,
}

impl HermitianBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
        }
    }

    /// Adds `v` at `(r, c)`; entries below the diagonal are stored as their
    /// conjugate above it.
    pub fn add(&mut self, r: usize, c: usize, v: C64) {
        debug_assert!(r < self.dim && c < self.dim);
        if r <= c {
            self.triplets.push((r, c, v));
        } else {
            self.triplets.push((c, r, v.conj()));
        }
    }

    /// Adds the rank-one term `w · c̄ cᵀ`, i.e. the quadratic form
    /// `w |Σ c_i u_i|²`, restricted to the given unknowns.
    pub fn add_term(&mut self, w: f64, stencil: &[(usize, C64)]) {
        for (a, &(i, ci)) in stencil.iter().enumerate() {
            self.add(i, i, C64::new(w * ci.norm_sqr(), 0.0));
            for &(j, cj) in &stencil[a + 1..] {
                // F_ij = w conj(c_i) c_j
                if i <= j {
                    self.add(i, j, ci.conj() * cj * w);
                } else {
                    self.add(j, i, cj.conj() * ci * w);
                }
            }
        }
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps insertion order among duplicates
        self.triplets.sort_by_key(|t| (t.0, t.1));
        let mut upper: Vec<(usize, usize, C64)> = Vec::with_capacity(self.triplets.len());
        for (r, c, v) in self.triplets {
            match upper.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => upper.push((r, c, v)),
            }
        }
        let mut counts = vec![0usize; self.dim];
        for &(r, c, _) in &upper {
            counts[r] += 1;
            if r != c {
                counts[c] += 1;
            }
        }
        let mut row_ptr = vec![0usize; self.dim + 1];
        for r in 0..self.dim {
            row_ptr[r + 1] = row_ptr[r] + counts[r];
        }
        let nnz = row_ptr[self.dim];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![C64::new(0.0, 0.0); nnz];
        let mut fill = row_ptr.clone();
        // lower-triangle entries of row c come from upper entries (r, c) with
        // r < c; visiting `upper` in row order fills them in column order
        for &(r, c, v) in &upper {
            if r != c {
                let k = fill[c];
                col_idx[k] = r;
                values[k] = v.conj();
                fill[c] += 1;
            }
        }
        for &(r, c, v) in &upper {
            let k = fill[r];
            col_idx[k] = c;
            values[k] = if r == c { C64::new(v.re, 0.0) } else { v };
            fill[r] += 1;
        }
        CsrMatrix {
            dim: self.dim,
            row_ptr,
            col_idx,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_is_exactly_hermitian_and_sorted() {
        let mut b = HermitianBuilder::new(3);
        b.add_term(1.0, &[(0, C64::new(1.0, 0.0)), (2, C64::new(0.3, -0.7))]);
        b.add_term(2.0, &[(1, C64::new(1.0, 0.0)), (0, C64::new(-0.5, 0.5))]);
        b.add(2, 2, C64::new(1.0, 0.0));
        let m = b.build();
        assert!(m.is_exactly_hermitian());
        assert!(
            CsrMatrix::from_raw(3, m.row_ptr.clone(), m.col_idx.clone(), m.values.clone()).is_ok()
        );
        // quadratic form on a test vector equals the sum of the terms
        let u = [C64::new(0.2, 1.0), C64::new(-1.0, 0.4), C64::new(0.5, 0.5)];
        let au = m.apply(&u);
        let q = crate::math::dot(&u, &au);
        let t1 = (u[0] + C64::new(0.3, -0.7) * u[2]).norm_sqr();
        let t2 = 2.0 * (u[1] + C64::new(-0.5, 0.5) * u[0]).norm_sqr();
        let t3 = u[2].norm_sqr();
        assert!((q.re - (t1 + t2 + t3)).abs() < 1e-14);
        assert!(q.im.abs() < 1e-14);
    }

    #[test]
    fn submatrix_and_bounds() {
        let mut b = HermitianBuilder::new(3);
        b.add_term(1.0, &[(0, C64::new(1.0, 0.0)), (1, C64::new(-1.0, 0.0))]);
        b.add_term(1.0, &[(1, C64::new(1.0, 0.0)), (2, C64::new(-1.0, 0.0))]);
        let m = b.build();
        assert_eq!(m.gershgorin_norm(), 4.0);
        assert_eq!(m.gershgorin_lower(), 0.0);
        let s = m.principal_submatrix(&[0, 2]);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.get(1, 1), C64::new(1.0, 0.0));
    }
}
