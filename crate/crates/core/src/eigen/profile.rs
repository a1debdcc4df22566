//! Envelope (skyline) `LDLᴴ` factorization of `A + s I`.
//!
//! Row `i` of `L` is stored densely from its first structural nonzero to
//! the diagonal, so the cost is `Σ_i w_i²` for row widths `w_i`. With the
//! lattice orderings used by the assemblies the widths are one grid row
//! (2D) or one layer (3D).

use alloc::vec;
use alloc::vec::Vec;

use crate::operators::CsrMatrix;
use crate::C64;

#[derive(Clone, Debug)]
pub struct ProfileLdl {
    first: Vec<usize>,
    start: Vec<usize>,
    /// Row `i` holds `L[i, first[i]..i]`.
    lower: Vec<C64>,
    diag: Vec<f64>,
}

/// Number of stored entries the factor of `a` would need.
pub fn profile_size(a: &CsrMatrix) -> usize {
    (0..a.dim())
        .map(|i| i - a.row(i).map(|(c, _)| c).min().unwrap_or(i).min(i))
        .sum()
}

impl ProfileLdl {
    /// Factors `a + shift·I`; `None` if a pivot is not positive.
    pub fn factor(a: &CsrMatrix, shift: f64) -> Option<Self> {
        let n = a.dim();
        let mut first = vec![0usize; n];
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            first[i] = a.row(i).map(|(c, _)| c).min().unwrap_or(i).min(i);
            start[i + 1] = start[i] + (i - first[i]);
        }
        let mut lower = vec![C64::new(0.0, 0.0); start[n]];
        let mut diag = vec![0.0; n];
        let mut g: Vec<C64> = Vec::new();
        for i in 0..n {
            let fi = first[i];
            let w = i - fi;
            g.clear();
            g.resize(w, C64::new(0.0, 0.0));
            let mut aii = shift;
            for (c, v) in a.row(i) {
                if c < i {
                    g[c - fi] = v;
                } else if c == i {
                    aii += v.re;
                }
            }
            // g_j = A_ij − Σ_k g_k conj(L_jk), then L_ij = g_j / D_j
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let row_j = &lower[start[j]..start[j + 1]];
                let mut acc = g[j - fi];
                for k in lo..j {
                    acc -= g[k - fi] * row_j[k - fj].conj();
                }
                g[j - fi] = acc;
            }
            let mut d = aii;
            for j in fi..i {
                let l = g[j - fi] / diag[j];
                d -= (g[j - fi] * l.conj()).re;
                lower[start[i] + (j - fi)] = l;
            }
            if !(d > 0.0) {
                return None;
            }
            diag[i] = d;
        }
        Some(Self {
            first,
            start,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Solves `(A + s) x = b` in place.
    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = self.dim();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let mut acc = x[i];
            for (k, l) in row.iter().enumerate() {
                acc -= l * x[fi + k];
            }
            x[i] = acc;
        }
        for (xi, d) in x.iter_mut().zip(&self.diag) {
            *xi /= *d;
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let xi = x[i];
            for (k, l) in row.iter().enumerate() {
                x[fi + k] -= l.conj() * xi;
            }
        }
    }
}
