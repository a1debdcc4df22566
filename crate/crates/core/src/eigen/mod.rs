//! Lowest eigenpairs of assembled operators.
//!
//! [`lowest`] runs a block iteration whose search space at each step is
//! spanned by the current Ritz block `X`, the shift-inverted residuals
//! `W = (A + s)⁻¹(AX − XΘ)` and the previous update direction. With exact
//! inner solves `span{X, W} = span{X, (A + s)⁻¹X}`, one step of block
//! shift-invert Krylov iteration; the extra direction accelerates it the
//! way LOBPCG does. The basis is reorthogonalized in full (two passes of
//! Gram–Schmidt) at every step and the projected problem is solved by
//! [`dense::jacobi_eigh`].
//!
//! Inner solves use an envelope `LDLᴴ` factorization of `A + s` when its
//! storage fits [`PROFILE_BUDGET`] entries and conjugate gradients
//! otherwise (or on request through [`InnerSolver`]).

pub mod cg;
pub mod cluster;
pub mod dense;
pub mod profile;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::math::{axpy, dot, norm, DenseMatrix};
use crate::operators::{CsrMatrix, HermitianOperator};
use crate::{Error, Result, C64};

pub use cluster::{count_at_most, count_below, multiplicity_cluster, Cluster};
pub use dense::{hermitian_eigh, jacobi_eigh, DenseEigen};

/// Largest dimension accepted by [`dense_reference`].
pub const DENSE_LIMIT: usize = 400;

/// Largest envelope factor, in complex entries, used by [`InnerSolver::Auto`].
pub const PROFILE_BUDGET: usize = 30_000_000;

const EPS_SHIFT: f64 = 1e-8;
const MAX_OUTER: usize = 300;
const DROP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerSolver {
    /// Factorization when it fits the budget, else conjugate gradients.
    #[default]
    Auto,
    Cg,
    Factor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub iterations: usize,
    pub tol: f64,
    pub seed: u64,
    /// Gershgorin bound `‖A‖_G`; residuals are certified against `tol·‖A‖_G`.
    pub norm_bound: f64,
    pub shift: f64,
    pub converged: bool,
    /// Inner solver actually used.
    pub inner: InnerSolver,
    /// Conjugate-gradient steps, zero with the factorization.
    pub inner_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Euclidean-orthonormal eigenvectors over the operator's unknowns.
    pub eigenvectors: Vec<Vec<C64>>,
    /// `‖Av − λv‖ / ‖v‖`.
    pub residuals: Vec<f64>,
    pub meta: SolverMeta,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Clusters with `gap_tol`, see [`multiplicity_cluster`].
    pub fn clusters(&self, gap_tol: f64) -> Vec<Cluster> {
        multiplicity_cluster(&self.eigenvalues, gap_tol)
    }
}

/// `‖Av − λv‖ / ‖v‖`.
pub fn residual_norm(a: &CsrMatrix, lambda: f64, v: &[C64]) -> f64 {
    let mut av = a.apply(v);
    axpy(C64::new(-lambda, 0.0), v, &mut av);
    norm(&av) / norm(v)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tolerance {tol} outside [1e-12, 1e-4]"
        )));
    }
    Ok(())
}

/// The `m` smallest eigenpairs of `op`, counting multiplicity.
pub fn lowest(op: &HermitianOperator, m: usize, tol: f64, seed: u64) -> Result<Spectrum> {
    lowest_matrix(op.matrix(), m, tol, seed)
}

/// [`lowest`] on a bare matrix.
pub fn lowest_matrix(a: &CsrMatrix, m: usize, tol: f64, seed: u64) -> Result<Spectrum> {
    lowest_with(a, m, tol, seed, InnerSolver::Auto)
}

/// Picks the smallest shift of the form `εG + 2^k c` that factors.
fn factor_shifted(a: &CsrMatrix, base: f64, lower: f64) -> Option<(profile::ProfileLdl, f64)> {
    if let Some(f) = profile::ProfileLdl::factor(a, base) {
        return Some((f, base));
    }
    let mut step = (lower.abs() / 1024.0).max(base);
    for _ in 0..64 {
        let s = base + step;
        if let Some(f) = profile::ProfileLdl::factor(a, s) {
            return Some((f, s));
        }
        step *= 2.0;
    }
    None
}

enum Inner {
    Factor(profile::ProfileLdl),
    Cg(cg::CgStop),
}

/// [`lowest_matrix`] with an explicit inner solver.
pub fn lowest_with(
    a: &CsrMatrix,
    m: usize,
    tol: f64,
    seed: u64,
    inner: InnerSolver,
) -> Result<Spectrum> {
    check_tol(tol)?;
    let n = a.dim();
    if m == 0 || 4 * m > n {
        return Err(Error::DimensionTooSmall {
            dim: n,
            requested: m,
        });
    }
    let gnorm = a.gershgorin_norm();
    let lower = a.gershgorin_lower();
    let mut meta = SolverMeta {
        iterations: 0,
        tol,
        seed,
        norm_bound: gnorm,
        shift: 0.0,
        converged: false,
        inner,
        inner_iterations: 0,
    };
    if gnorm == 0.0 {
        meta.converged = true;
        let eigenvectors = (0..m)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        return Ok(Spectrum {
            eigenvalues: vec![0.0; m],
            eigenvectors,
            residuals: vec![0.0; m],
            meta,
        });
    }
    let use_factor = match inner {
        InnerSolver::Auto => profile::profile_size(a) <= PROFILE_BUDGET,
        InnerSolver::Cg => false,
        InnerSolver::Factor => true,
    };
    let factored = if use_factor {
        factor_shifted(a, EPS_SHIFT * gnorm, lower)
    } else {
        None
    };
    let (solver, shift) = match factored {
        Some((f, s)) => {
            meta.inner = InnerSolver::Factor;
            (Inner::Factor(f), s)
        }
        None => {
            meta.inner = InnerSolver::Cg;
            let shift = if lower >= 0.0 {
                EPS_SHIFT * gnorm
            } else {
                -lower + EPS_SHIFT * gnorm
            };
            let stop = cg::CgStop {
                rel_tol: 1e-2 * tol,
                backward_tol: 1e-2 * tol * gnorm,
                max_iter: (2 * n).clamp(50, 4000),
            };
            (Inner::Cg(stop), shift)
        }
    };
    meta.shift = shift;
    let target = tol * gnorm;

    let p = (m + (m / 2).max(3)).min(n / 2).max(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start: Vec<Vec<C64>> = (0..p)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(uniform(&mut rng), uniform(&mut rng)))
                .collect()
        })
        .collect();
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(3 * p);
    orthonormalize_into(&mut basis, &mut start);
    if basis.len() < p {
        return Err(Error::InvalidParameter(
            "random start block is rank deficient".into(),
        ));
    }
    let mut abasis: Vec<Vec<C64>> = basis.iter().map(|v| a.apply(v)).collect();
    let (mut x, mut ax, mut theta, _) = rayleigh_ritz(&basis, &abasis, p)?;
    let mut dir: Vec<Vec<C64>> = Vec::new();
    let mut res = vec![0.0; p];

    for iter in 1..=MAX_OUTER {
        meta.iterations = iter;
        let mut resid: Vec<Vec<C64>> = Vec::with_capacity(p);
        for i in 0..p {
            let mut r = ax[i].clone();
            axpy(C64::new(-theta[i], 0.0), &x[i], &mut r);
            res[i] = norm(&r);
            resid.push(r);
        }
        if res[..m].iter().all(|&r| r <= target) {
            meta.converged = true;
            break;
        }
        // search directions for unconverged columns
        let mut w: Vec<Vec<C64>> = Vec::new();
        for i in 0..p {
            if res[i] > target {
                match &solver {
                    Inner::Factor(f) => {
                        let mut sol = resid[i].clone();
                        f.solve_in_place(&mut sol);
                        w.push(sol);
                    }
                    Inner::Cg(stop) => {
                        let (sol, out) = cg::solve_shifted(a, shift, &resid[i], *stop);
                        meta.inner_iterations += out.iterations;
                        w.push(sol);
                    }
                }
            }
        }
        basis.clear();
        abasis.clear();
        basis.extend(x.iter().cloned());
        abasis.extend(ax.iter().cloned());
        let nx = basis.len();
        let mut extra = w;
        extra.append(&mut dir);
        orthonormalize_into(&mut basis, &mut extra);
        for v in &basis[nx..] {
            abasis.push(a.apply(v));
        }
        let (nx_new, nax_new, ntheta, coeffs) = rayleigh_ritz(&basis, &abasis, p)?;
        // next direction: the part of the update outside span(X)
        for c in &coeffs {
            let mut d = vec![C64::new(0.0, 0.0); n];
            for (k, &ck) in c.iter().enumerate().skip(nx) {
                axpy(ck, &basis[k], &mut d);
            }
            dir.push(d);
        }
        x = nx_new;
        ax = nax_new;
        theta = ntheta;
    }

    let residuals: Vec<f64> = (0..m).map(|i| residual_norm(a, theta[i], &x[i])).collect();
    meta.converged = meta.converged && residuals.iter().all(|&r| r <= target);
    let spectrum = Spectrum {
        eigenvalues: theta[..m].to_vec(),
        eigenvectors: x.into_iter().take(m).collect(),
        residuals,
        meta,
    };
    if !spectrum.meta.converged {
        return Err(Error::NoConvergence {
            iterations: spectrum.meta.iterations,
            partial: Box::new(spectrum),
        });
    }
    Ok(spectrum)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits mapped to [−1, 1)
    (rng.next_u64() >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Appends the vectors of `extra` to the orthonormal `basis` after two
/// passes of classical Gram–Schmidt, dropping nearly dependent ones.
fn orthonormalize_into(basis: &mut Vec<Vec<C64>>, extra: &mut [Vec<C64>]) {
    for v in extra.iter_mut() {
        let before = norm(v);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            let coeffs: Vec<C64> = basis.iter().map(|b| dot(b, v)).collect();
            for (b, c) in basis.iter().zip(coeffs) {
                axpy(-c, b, v);
            }
        }
        let after = norm(v);
        if after <= DROP_TOL * before {
            continue;
        }
        let inv = 1.0 / after;
        let mut u = core::mem::take(v);
        for c in u.iter_mut() {
            *c *= inv;
        }
        basis.push(u);
    }
}

type RitzBlock = (Vec<Vec<C64>>, Vec<Vec<C64>>, Vec<f64>, Vec<Vec<C64>>);

/// Lowest `p` Ritz pairs of the orthonormal `basis`, with `A·x` and the
/// coefficient vectors.
fn rayleigh_ritz(basis: &[Vec<C64>], abasis: &[Vec<C64>], p: usize) -> Result<RitzBlock> {
    let s = basis.len();
    let n = basis[0].len();
    let mut h = DenseMatrix::zeros(s);
    for i in 0..s {
        for j in i..s {
            let v = dot(&basis[i], &abasis[j]);
            h[(i, j)] = v;
        }
    }
    for i in 0..s {
        h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
        for j in i + 1..s {
            h[(j, i)] = h[(i, j)].conj();
        }
    }
    let eig = jacobi_eigh(&h)?;
    let take = p.min(s);
    let mut x = Vec::with_capacity(take);
    let mut ax = Vec::with_capacity(take);
    let mut coeffs = Vec::with_capacity(take);
    for j in 0..take {
        let c = eig.vector(j);
        let mut v = vec![C64::new(0.0, 0.0); n];
        let mut av = vec![C64::new(0.0, 0.0); n];
        for k in 0..s {
            axpy(c[k], &basis[k], &mut v);
            axpy(c[k], &abasis[k], &mut av);
        }
        x.push(v);
        ax.push(av);
        coeffs.push(c);
    }
    Ok((x, ax, eig.values[..take].to_vec(), coeffs))
}

/// Full diagonalization through [`hermitian_eigh`], for `dim ≤ 400`.
pub fn dense_reference(op: &HermitianOperator) -> Result<DenseEigen> {
    if op.dim() > DENSE_LIMIT {
        return Err(Error::InvalidParameter(alloc::format!(
            "dense reference limited to dim <= {DENSE_LIMIT}, got {}",
            op.dim()
        )));
    }
    hermitian_eigh(&op.matrix().to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, Shape};
    use crate::operators::{assemble_landau2d, BoundaryCondition};

    #[test]
    fn preconditions() {
        let d = make_shape(Shape::Square { side: 1.0 }, 0.25).unwrap();
        let op = assemble_landau2d(0.0, &d, &BoundaryCondition::Dirichlet).unwrap();
        assert!(matches!(
            lowest(&op, 3, 1e-8, 0),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(matches!(
            lowest(&op, 0, 1e-8, 0),
            Err(Error::DimensionTooSmall { .. })
        ));
        assert!(lowest(&op, 1, 1e-3, 0).is_err());
        assert!(lowest(&op, 1, 1e-13, 0).is_err());
    }

    #[test]
    fn matches_dense_reference_and_is_deterministic() {
        let d = make_shape(Shape::Lshape { side: 2.0 }, 0.2).unwrap();
        for b in [0.0, 1.0] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let op = assemble_landau2d(b, &d, &bc).unwrap();
                let dense = dense_reference(&op).unwrap();
                let s = lowest(&op, 6, 1e-10, 7).unwrap();
                for (j, &l) in s.eigenvalues.iter().enumerate() {
                    let r = dense.values[j];
                    assert!((l - r).abs() <= 1e-9 * r.abs().max(1.0), "{l} vs {r}");
                }
                for i in 0..s.len() {
                    for j in 0..s.len() {
                        let g = dot(&s.eigenvectors[i], &s.eigenvectors[j]);
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((g - e).norm() < 1e-10);
                    }
                }
                let again = lowest(&op, 6, 1e-10, 7).unwrap();
                assert_eq!(again.eigenvalues, s.eigenvalues);
                let cg = lowest_with(op.matrix(), 6, 1e-10, 7, InnerSolver::Cg).unwrap();
                assert_eq!(cg.meta.inner, InnerSolver::Cg);
                for (x, y) in cg.eigenvalues.iter().zip(&s.eigenvalues) {
                    assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
        }
    }
}
