//! Sparse Hermitian operators built from discrete quadratic forms.
//!
//! Every assembly writes the form as a sum of rank-one terms
//! `w · |Σ_n c_n u_n|²` over grid nodes and stores the representing matrix
//! `A = F / vol` of the form matrix `F`, where `vol` is the node weight. The
//! matrix is Hermitian in the Euclidean inner product and self-adjoint in the
//! node-weighted one, so Rayleigh quotients agree in both.
//!
//! Boundary conditions:
//!
//! - Neumann keeps every term whose stencil lies inside the mask and drops
//!   the rest (the free form).
//! - Dirichlet pins the outer layer of the mask to zero. The unknowns are the
//!   nodes whose every touching term lies inside the mask, so the Dirichlet
//!   matrix is a principal submatrix of the Neumann one and equals the form
//!   of the zero extension.
//! - Robin adds `σ_s h` per boundary segment to the Neumann form.

mod fiber;
mod heisenberg;
mod landau;
pub mod sparse;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{dot, norm_sqr};
use crate::{Error, Result, C64};

pub use fiber::{fiber_operator, fiber_reduce, Fiber, FiberFamily};
pub use heisenberg::assemble_heisenberg;
pub use landau::{assemble_landau2d, assemble_landau2d_gauge, assemble_landau3d};
pub use sparse::{CsrMatrix, HermitianBuilder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "sigma", rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    /// Density per boundary segment, in the order of
    /// [`GridDomain2D::boundary_segments`](crate::geometry::GridDomain2D::boundary_segments).
    Robin(Vec<f64>),
}

impl BoundaryCondition {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
            Self::Robin(_) => "robin",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Landau2d,
    Landau3d,
    Heisenberg,
    /// One DFT fiber of the t-periodic sub-Laplacian.
    Fiber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorMeta {
    pub kind: OperatorKind,
    /// Field strength (0 for the sub-Laplacian).
    pub b: f64,
    /// Constant gauge shift, Landau 2D only.
    pub gauge_shift: [f64; 2],
    /// DFT mode and frequency, fibers only.
    pub mode: Option<i64>,
    pub tau: Option<f64>,
    /// Number of grid nodes (inside or not) of the underlying lattice.
    pub grid_nodes: usize,
}

/// Assembled operator over a subset of grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator {
    matrix: CsrMatrix,
    nodes: Vec<usize>,
    weight: f64,
    bc: BoundaryCondition,
    meta: OperatorMeta,
}

impl HermitianOperator {
    /// Reassembles an operator from stored parts.
    pub fn from_parts(
        matrix: CsrMatrix,
        nodes: Vec<usize>,
        weight: f64,
        bc: BoundaryCondition,
        meta: OperatorMeta,
    ) -> Result<Self> {
        if nodes.len() != matrix.dim() {
            return Err(Error::LengthMismatch {
                left: nodes.len(),
                right: matrix.dim(),
            });
        }
        if nodes.windows(2).any(|w| w[0] >= w[1])
            || nodes.last().is_some_and(|&n| n >= meta.grid_nodes)
        {
            return Err(Error::InvalidParameter(
                "node list unsorted or out of range".into(),
            ));
        }
        if !(weight > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "node weight {weight}"
            )));
        }
        Ok(Self {
            matrix,
            nodes,
            weight,
            bc,
            meta,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Grid node id of each unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Node weight of the inner product.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn meta(&self) -> &OperatorMeta {
        &self.meta
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        self.matrix.apply(u)
    }

    fn check_len(&self, u: &[C64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::LengthMismatch {
                left: u.len(),
                right: self.dim(),
            });
        }
        Ok(())
    }

    /// Weighted inner product `vol · Σ conj(u_i) v_i`.
    pub fn inner(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        self.check_len(u)?;
        self.check_len(v)?;
        Ok(dot(u, v) * self.weight)
    }

    /// Sesquilinear form `Q(u, v) = vol · ⟨u, A v⟩`.
    pub fn form(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        self.check_len(u)?;
        self.check_len(v)?;
        Ok(dot(u, &self.apply(v)) * self.weight)
    }

    /// Scatters `u` onto the full lattice, zero elsewhere.
    pub fn to_grid(&self, u: &[C64]) -> Result<Vec<C64>> {
        self.check_len(u)?;
        let mut g = vec![C64::new(0.0, 0.0); self.meta.grid_nodes];
        for (&n, &v) in self.nodes.iter().zip(u) {
            g[n] = v;
        }
        Ok(g)
    }

    /// Gathers the unknowns of this operator from a lattice vector.
    pub fn from_grid(&self, g: &[C64]) -> Result<Vec<C64>> {
        if g.len() != self.meta.grid_nodes {
            return Err(Error::LengthMismatch {
                left: g.len(),
                right: self.meta.grid_nodes,
            });
        }
        Ok(self.nodes.iter().map(|&n| g[n]).collect())
    }
}

/// `⟨u, A u⟩ / ⟨u, u⟩`.
pub fn rayleigh(op: &HermitianOperator, u: &[C64]) -> Result<f64> {
    op.check_len(u)?;
    let nn = norm_sqr(u);
    if nn == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(u, &op.apply(u)).re / nn)
}

/// Collects form terms over grid nodes and keeps only the unknowns.
pub(crate) struct FormAssembler {
    index: Vec<usize>,
    builder: HermitianBuilder,
}

impl FormAssembler {
    pub(crate) fn new(grid_nodes: usize, unknowns: &[usize]) -> Self {
        let mut index = vec![usize::MAX; grid_nodes];
        for (k, &n) in unknowns.iter().enumerate() {
            index[n] = k;
        }
        Self {
            index,
            builder: HermitianBuilder::new(unknowns.len()),
        }
    }

    /// Adds `w |Σ c_n u_n|²`; pinned nodes carry zero and are dropped.
    pub(crate) fn term<const N: usize>(&mut self, w: f64, stencil: [(usize, C64); N]) {
        let mut local = [(0usize, C64::new(0.0, 0.0)); N];
        let mut len = 0;
        for (n, c) in stencil {
            let k = self.index[n];
            if k != usize::MAX {
                local[len] = (k, c);
                len += 1;
            }
        }
        if len > 0 {
            self.builder.add_term(w, &local[..len]);
        }
    }

    pub(crate) fn diagonal(&mut self, node: usize, v: f64) {
        let k = self.index[node];
        if k != usize::MAX {
            self.builder.add(k, k, C64::new(v, 0.0));
        }
    }

    pub(crate) fn finish(self, vol: f64) -> CsrMatrix {
        self.builder.build().scaled(1.0 / vol)
    }
}

/// Inside nodes for which every listed offset lands on an inside node.
pub(crate) fn stencil_interior<F>(inside: &[usize], offsets: usize, probe: F) -> Vec<usize>
where
    F: Fn(usize, usize) -> bool,
{
    inside
        .iter()
        .copied()
        .filter(|&n| (0..offsets).all(|o| probe(n, o)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_shape, Shape};

    #[test]
    fn rayleigh_rejects_zero_and_wrong_length() {
        let d = make_shape(Shape::Square { side: 1.0 }, 0.25).unwrap();
        let op = assemble_landau2d(0.0, &d, &BoundaryCondition::Neumann).unwrap();
        let z = vec![C64::new(0.0, 0.0); op.dim()];
        assert!(matches!(rayleigh(&op, &z), Err(Error::ZeroVector)));
        assert!(matches!(
            rayleigh(&op, &z[1..]),
            Err(Error::LengthMismatch { .. })
        ));
        let one = vec![C64::new(1.0, 0.0); op.dim()];
        assert!(rayleigh(&op, &one).unwrap().abs() < 1e-13);
    }

    #[test]
    fn grid_scatter_roundtrip() {
        let d = make_shape(Shape::Disk { radius: 1.0 }, 0.25).unwrap();
        let op = assemble_landau2d(1.0, &d, &BoundaryCondition::Dirichlet).unwrap();
        let u: Vec<C64> = (0..op.dim()).map(|i| C64::new(i as f64, 1.0)).collect();
        let g = op.to_grid(&u).unwrap();
        assert_eq!(op.from_grid(&g).unwrap(), u);
    }
}
