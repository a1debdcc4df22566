//! Exact DFT reduction of the t-periodic sub-Laplacian.
//!
//! For `u(c, t_l) = U(c) e^{iτ_m t_l}` with `τ_m = 2πm/T`, the one-sided
//! `t`-difference in direction `σ` acts as multiplication by
//! `s_σ = σ(e^{iστ_m h_t} − 1)/h_t`, so each mode gives a planar operator
//! with terms `vol/2 |σ(U_{c+σx} − U_c)/h + 2y s_σ U_c|²` and the analogous
//! `Y` terms.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, FormAssembler, HermitianOperator, OperatorKind, OperatorMeta};
use crate::geometry::{GridDomain2D, GridDomain3D, Side, TTopology};
use crate::{Error, Result, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    pub m: i64,
    pub tau: f64,
    pub operator: HermitianOperator,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberFamily {
    pub base: GridDomain2D,
    pub period: f64,
    /// Modes `m = −⌊(nt−1)/2⌋ ..= ⌊nt/2⌋` in ascending order.
    pub fibers: Vec<Fiber>,
}

impl FiberFamily {
    pub fn total_dim(&self) -> usize {
        self.fibers.iter().map(|f| f.operator.dim()).sum()
    }
}

/// Splits the periodic sub-Laplacian on `d` into its `nt` Fourier fibers.
pub fn fiber_reduce(d: &GridDomain3D, bc: &BoundaryCondition) -> Result<FiberFamily> {
    if d.topology() != TTopology::Periodic {
        return Err(Error::TopologyMismatch);
    }
    let base = d.base()?;
    let nt = d.dims().2 as i64;
    let period = d.t_extent();
    let fibers = (-(nt - 1) / 2..=nt / 2)
        .map(|m| {
            let tau = core::f64::consts::TAU * m as f64 / period;
            fiber_operator(&base, tau, d.h_t(), bc).map(|mut operator| {
                operator.meta.mode = Some(m);
                Fiber { m, tau, operator }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiberFamily {
        base,
        period,
        fibers,
    })
}

/// Planar fiber operator for frequency `tau` and time step `h_t`.
pub fn fiber_operator(
    base: &GridDomain2D,
    tau: f64,
    h_t: f64,
    bc: &BoundaryCondition,
) -> Result<HermitianOperator> {
    let nodes = match bc {
        BoundaryCondition::Dirichlet => base.interior_nodes(),
        BoundaryCondition::Neumann => base.inside_nodes().to_vec(),
        BoundaryCondition::Robin(_) => {
            return Err(Error::InvalidParameter(
                "Robin conditions are not defined for fibers".into(),
            ));
        }
    };
    if nodes.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let (sn, cs) = libm::sincos(tau * h_t);
    let h = base.h();
    let vol = base.node_weight();
    let mut asm = FormAssembler::new(base.node_count(), &nodes);
    for (sg, fwd) in [
        (1.0, [Side::East, Side::North]),
        (-1.0, [Side::West, Side::South]),
    ] {
        // σ(e^{iστh_t} − 1)/h_t
        let s = C64::new(cs - 1.0, sg * sn) * (sg / h_t);
        for &c in base.inside_nodes() {
            let p = base.point(c);
            for (side, a) in fwd.into_iter().zip([2.0 * p[1], -2.0 * p[0]]) {
                if let Some(n) = base.neighbor(c, side) {
                    let w = sg / h;
                    asm.term(0.5 * vol, [(c, s * a - w), (n, C64::new(w, 0.0))]);
                }
            }
        }
    }
    Ok(HermitianOperator {
        matrix: asm.finish(vol),
        nodes,
        weight: vol,
        bc: bc.clone(),
        meta: OperatorMeta {
            kind: OperatorKind::Fiber,
            b: 4.0 * tau,
            gauge_shift: [0.0, 0.0],
            mode: None,
            tau: Some(tau),
            grid_nodes: base.node_count(),
        },
    })
}
