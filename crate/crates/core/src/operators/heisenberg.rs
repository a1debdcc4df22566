//! Sub-Laplacian `−X² − Y²` with `X = ∂x + 2y∂t`, `Y = ∂y − 2x∂t`.
//!
//! The form is the mean of a forward and a backward difference form. For
//! `σ = ±1` and each inside node `c` it has the terms
//!
//! ```text
//! vol/2 |σ(u_{c+σx} − u_c)/h + 2y σ(u_{c+σt} − u_c)/h_t|²
//! vol/2 |σ(u_{c+σy} − u_c)/h − 2x σ(u_{c+σt} − u_c)/h_t|²
//! ```
//!
//! kept only when the three stencil nodes are inside. Either one-sided form
//! alone leaves the nodes on one family of edges without any term, which
//! gives the free form a spurious kernel.

use alloc::vec::Vec;

use super::{
    stencil_interior, BoundaryCondition, FormAssembler, HermitianOperator, OperatorKind,
    OperatorMeta,
};
use crate::geometry::GridDomain3D;
use crate::{Error, Result, C64};

/// Nodes whose terms must all be inside for a node to be a Dirichlet unknown.
pub(crate) const DIRICHLET_REACH: [(isize, isize, isize); 10] = [
    (-1, 0, 0),
    (1, 0, 0),
    (0, -1, 0),
    (0, 1, 0),
    (0, 0, -1),
    (0, 0, 1),
    (-1, 0, 1),
    (0, -1, 1),
    (1, 0, -1),
    (0, 1, -1),
];

pub fn assemble_heisenberg(d: &GridDomain3D, bc: &BoundaryCondition) -> Result<HermitianOperator> {
    let nodes: Vec<usize> = match bc {
        BoundaryCondition::Dirichlet => {
            stencil_interior(d.inside_nodes(), DIRICHLET_REACH.len(), |n, o| {
                d.neighbor(n, DIRICHLET_REACH[o]).is_some()
            })
        }
        BoundaryCondition::Neumann => d.inside_nodes().to_vec(),
        BoundaryCondition::Robin(_) => {
            return Err(Error::InvalidParameter(
                "Robin conditions are planar only".into(),
            ));
        }
    };
    if nodes.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let (h, ht) = (d.h_xy(), d.h_t());
    let vol = d.node_weight();
    let mut asm = FormAssembler::new(d.node_count(), &nodes);
    for sg in [1isize, -1] {
        let sf = sg as f64;
        for &c in d.inside_nodes() {
            let Some(tn) = d.neighbor(c, (0, 0, sg)) else {
                continue;
            };
            let p = d.point(c);
            for (dir, a) in [((sg, 0, 0), 2.0 * p[1]), ((0, sg, 0), -2.0 * p[0])] {
                if let Some(sn) = d.neighbor(c, dir) {
                    let (cs, ct) = (sf / h, sf * a / ht);
                    asm.term(
                        0.5 * vol,
                        [
                            (c, C64::new(-cs - ct, 0.0)),
                            (sn, C64::new(cs, 0.0)),
                            (tn, C64::new(ct, 0.0)),
                        ],
                    );
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
            kind: OperatorKind::Heisenberg,
            b: 0.0,
            gauge_shift: [0.0, 0.0],
            mode: None,
            tau: None,
            grid_nodes: d.node_count(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{extrude, make_shape, Shape, TTopology};
    use crate::operators::{fiber_operator, rayleigh};
    use alloc::vec;

    fn cylinder(topology: TTopology) -> GridDomain3D {
        let base = make_shape(Shape::Square { side: 1.0 }, 0.25).unwrap();
        extrude(&base, 1.0, 0.25, topology).unwrap()
    }

    #[test]
    fn constants_are_in_the_neumann_kernel() {
        for top in [TTopology::Bounded, TTopology::Periodic] {
            let d = cylinder(top);
            let op = assemble_heisenberg(&d, &BoundaryCondition::Neumann).unwrap();
            assert!(op.matrix().is_exactly_hermitian());
            let one = vec![C64::new(1.0, 0.0); op.dim()];
            assert!(rayleigh(&op, &one).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn t_independent_functions_see_the_zero_fiber() {
        let d = cylinder(TTopology::Periodic);
        let base = d.base().unwrap();
        let op3 = assemble_heisenberg(&d, &BoundaryCondition::Neumann).unwrap();
        let op2 = fiber_operator(&base, 0.0, d.h_t(), &BoundaryCondition::Neumann).unwrap();
        let u2: Vec<C64> = (0..op2.dim())
            .map(|i| C64::new(libm::sin(i as f64), libm::cos(0.3 * i as f64)))
            .collect();
        let g2 = op2.to_grid(&u2).unwrap();
        let layer = base.node_count();
        let g3: Vec<C64> = (0..d.node_count()).map(|n| g2[n % layer]).collect();
        let u3 = op3.from_grid(&g3).unwrap();
        let q3 = op3.form(&u3, &u3).unwrap().re;
        let q2 = op2.form(&u2, &u2).unwrap().re;
        // the extruded form carries an extra factor T
        assert!((q3 - q2 * d.t_extent()).abs() < 1e-10 * q3.abs());
    }

    #[test]
    fn dirichlet_positive_definite() {
        let d = cylinder(TTopology::Bounded);
        let op = assemble_heisenberg(&d, &BoundaryCondition::Dirichlet).unwrap();
        let ev = crate::eigen::dense_reference(&op).unwrap();
        assert!(ev.values[0] > 0.0);
    }
}
