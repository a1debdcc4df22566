//! Numerical core for comparing Dirichlet and Neumann eigenvalues of the
//! Heisenberg sub-Laplacian and of the planar Landau operator.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains:
//!
//! - [`geometry`]: rasterized 2D/3D domains and boundary quadrature,
//! - [`special`]: Laguerre polynomials, the Landau level projector kernel and
//!   uniform quadrature rules for kernel integrals,
//! - [`averaging`]: the averaged energy identity, the deficit functional and
//!   trial-function selection,
//! - [`operators`]: sparse Hermitian form assembly (Peierls links, forward
//!   averaged one-sided difference sub-Laplacian, DFT fibers),
//! - [`eigen`]: dense reference diagonalization and a block shift-invert
//!   solver for the lowest eigenpairs,
//! - [`extrapolate`]: Richardson extrapolation over an `h`-ladder.
//!
//! IO, experiment orchestration and the command line live in the companion
//! `heisengap` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod averaging;
pub mod eigen;
pub mod error;
pub mod extrapolate;
pub mod geometry;
pub mod math;
pub mod operators;
pub mod special;

pub use error::{Error, Result};

/// Complex double used throughout.
pub type C64 = num_complex::Complex<f64>;
