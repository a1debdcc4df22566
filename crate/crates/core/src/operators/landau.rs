//! Magnetic Laplacian `(D − BA)²` by Peierls link phases.
//!
//! A link from `a` to `b` contributes `|u_a − e^{−iθ} u_b|²/h²` with
//! `θ = B A(mid)·(b − a)`, the exact line integral of the linear gauge.

use alloc::format;
use alloc::vec::Vec;

use super::{
    stencil_interior, BoundaryCondition, FormAssembler, HermitianOperator, OperatorKind,
    OperatorMeta,
};
use crate::geometry::{GridDomain2D, GridDomain3D, Side};
use crate::special::gauge;
use crate::{Error, Result, C64};

fn check_field(b: f64) -> Result<()> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("field strength B = {b}")));
    }
    Ok(())
}

#[inline]
fn link_coefficient(b: f64, shift: [f64; 2], pa: [f64; 2], pb: [f64; 2]) -> C64 {
    let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
    let a = gauge(mid);
    let theta = b * ((a[0] + shift[0]) * (pb[0] - pa[0]) + (a[1] + shift[1]) * (pb[1] - pa[1]));
    let (s, c) = libm::sincos(-theta);
    -C64::new(c, s)
}

fn unknowns_2d(d: &GridDomain2D, bc: &BoundaryCondition) -> Result<Vec<usize>> {
    let nodes = match bc {
        BoundaryCondition::Dirichlet => d.interior_nodes(),
        _ => d.inside_nodes().to_vec(),
    };
    if nodes.is_empty() {
        return Err(Error::EmptyDomain);
    }
    Ok(nodes)
}

pub fn assemble_landau2d(
    b: f64,
    d: &GridDomain2D,
    bc: &BoundaryCondition,
) -> Result<HermitianOperator> {
    assemble_landau2d_gauge(b, d, bc, [0.0, 0.0])
}

/// Landau operator in the shifted gauge `A + c`. The result is unitarily
/// equivalent to the unshifted one via `u ↦ e^{iBc·z} u`.
pub fn assemble_landau2d_gauge(
    b: f64,
    d: &GridDomain2D,
    bc: &BoundaryCondition,
    shift: [f64; 2],
) -> Result<HermitianOperator> {
    check_field(b)?;
    if let BoundaryCondition::Robin(sigma) = bc {
        if sigma.len() != d.boundary_segments().len() {
            return Err(Error::LengthMismatch {
                left: sigma.len(),
                right: d.boundary_segments().len(),
            });
        }
    }
    let nodes = unknowns_2d(d, bc)?;
    let mut asm = FormAssembler::new(d.node_count(), &nodes);
    let one = C64::new(1.0, 0.0);
    for &a in d.inside_nodes() {
        let pa = d.point(a);
        for side in [Side::East, Side::North] {
            if let Some(nb) = d.neighbor(a, side) {
                let c = link_coefficient(b, shift, pa, d.point(nb));
                asm.term(1.0, [(a, one), (nb, c)]);
            }
        }
    }
    if let BoundaryCondition::Robin(sigma) = bc {
        for (seg, &s) in d.boundary_segments().iter().zip(sigma) {
            asm.diagonal(seg.node, s * d.h());
        }
    }
    let vol = d.node_weight();
    let matrix = asm.finish(vol);
    Ok(HermitianOperator {
        matrix,
        nodes,
        weight: vol,
        bc: bc.clone(),
        meta: OperatorMeta {
            kind: OperatorKind::Landau2d,
            b,
            gauge_shift: shift,
            mode: None,
            tau: None,
            grid_nodes: d.node_count(),
        },
    })
}

const OFFSETS_6: [(isize, isize, isize); 6] = [
    (-1, 0, 0),
    (1, 0, 0),
    (0, -1, 0),
    (0, 1, 0),
    (0, 0, -1),
    (0, 0, 1),
];

/// Landau operator in `(x, y)` plus an unphased `t` direction, gauge
/// `½(−y, x, 0)`.
pub fn assemble_landau3d(
    b: f64,
    d: &GridDomain3D,
    bc: &BoundaryCondition,
) -> Result<HermitianOperator> {
    check_field(b)?;
    let nodes = match bc {
        BoundaryCondition::Dirichlet => stencil_interior(d.inside_nodes(), 6, |n, o| {
            d.neighbor(n, OFFSETS_6[o]).is_some()
        }),
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
    let w_xy = ht;
    let w_t = h * h / ht;
    let one = C64::new(1.0, 0.0);
    let mut asm = FormAssembler::new(d.node_count(), &nodes);
    for &a in d.inside_nodes() {
        let pa = d.point(a);
        for off in [(1, 0, 0), (0, 1, 0)] {
            if let Some(nb) = d.neighbor(a, off) {
                let pb = d.point(nb);
                let c = link_coefficient(b, [0.0, 0.0], [pa[0], pa[1]], [pb[0], pb[1]]);
                asm.term(w_xy, [(a, one), (nb, c)]);
            }
        }
        if let Some(nb) = d.neighbor(a, (0, 0, 1)) {
            asm.term(w_t, [(a, one), (nb, -one)]);
        }
    }
    let vol = d.node_weight();
    Ok(HermitianOperator {
        matrix: asm.finish(vol),
        nodes,
        weight: vol,
        bc: bc.clone(),
        meta: OperatorMeta {
            kind: OperatorKind::Landau3d,
            b,
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
    use crate::eigen::dense_reference;
    use crate::geometry::{extrude, make_shape, Shape, TTopology};
    use crate::math::dot;
    use alloc::vec;

    #[test]
    fn exactly_hermitian_and_zero_field_neumann_kernel() {
        let d = make_shape(Shape::Lshape { side: 2.0 }, 0.25).unwrap();
        for b in [0.0, 1.3] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let op = assemble_landau2d(b, &d, &bc).unwrap();
                assert!(op.matrix().is_exactly_hermitian());
            }
        }
        let op = assemble_landau2d(0.0, &d, &BoundaryCondition::Neumann).unwrap();
        let one = vec![C64::new(1.0, 0.0); op.dim()];
        assert!(op.apply(&one).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn dirichlet_is_principal_submatrix_of_neumann() {
        let d = make_shape(Shape::Disk { radius: 1.0 }, 0.2).unwrap();
        let dn = assemble_landau2d(0.7, &d, &BoundaryCondition::Neumann).unwrap();
        let dd = assemble_landau2d(0.7, &d, &BoundaryCondition::Dirichlet).unwrap();
        let keep: Vec<usize> = dd
            .nodes()
            .iter()
            .map(|n| dn.nodes().binary_search(n).unwrap())
            .collect();
        assert_eq!(dn.matrix().principal_submatrix(&keep), *dd.matrix());
    }

    #[test]
    fn gauge_shift_is_a_diagonal_conjugation() {
        let d = make_shape(
            Shape::Rectangle {
                width: 2.0,
                height: 1.0,
            },
            0.25,
        )
        .unwrap();
        let b = 1.5;
        let c = [0.3, -0.8];
        let a0 = assemble_landau2d(b, &d, &BoundaryCondition::Neumann).unwrap();
        let a1 = assemble_landau2d_gauge(b, &d, &BoundaryCondition::Neumann, c).unwrap();
        let phase: Vec<C64> = a0
            .nodes()
            .iter()
            .map(|&n| {
                let p = d.point(n);
                let (s, co) = libm::sincos(b * (c[0] * p[0] + c[1] * p[1]));
                C64::new(co, s)
            })
            .collect();
        // a1 = diag(e^{iBc·z}) a0 diag(e^{−iBc·z})
        for r in 0..a0.dim() {
            for (col, v) in a0.matrix().row(r) {
                let expect = phase[r] * v * phase[col].conj();
                assert!((a1.matrix().get(r, col) - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn robin_adds_boundary_diagonal() {
        let d = make_shape(Shape::Square { side: 1.0 }, 0.25).unwrap();
        let sigma = vec![1.0; d.boundary_segments().len()];
        let n = assemble_landau2d(0.0, &d, &BoundaryCondition::Neumann).unwrap();
        let r = assemble_landau2d(0.0, &d, &BoundaryCondition::Robin(sigma)).unwrap();
        let one = vec![C64::new(1.0, 0.0); n.dim()];
        // Q_σ(1) − Q_N(1) = Σ σ h = perimeter
        let qn = n.form(&one, &one).unwrap().re;
        let qr = r.form(&one, &one).unwrap().re;
        assert!((qr - qn - d.perimeter()).abs() < 1e-12);
        let bad = BoundaryCondition::Robin(vec![0.0; 3]);
        assert!(assemble_landau2d(0.0, &d, &bad).is_err());
    }

    #[test]
    fn separable_cylinder_spectrum_adds() {
        let base = make_shape(Shape::Square { side: 1.0 }, 0.25).unwrap();
        let d3 = extrude(&base, 1.0, 0.25, TTopology::Bounded).unwrap();
        let op3 = assemble_landau3d(1.0, &d3, &BoundaryCondition::Dirichlet).unwrap();
        let op2 = assemble_landau2d(1.0, &base, &BoundaryCondition::Dirichlet).unwrap();
        let l3 = dense_reference(&op3).unwrap().values[0];
        let l2 = dense_reference(&op2).unwrap().values[0];
        // 1D Dirichlet chain on the unknown layers with pinned end layers
        let nl = d3.dims().2 - 2;
        let ht = d3.h_t();
        let s = libm::sin(core::f64::consts::PI / (2.0 * (nl + 1) as f64));
        let l1 = 4.0 / (ht * ht) * s * s;
        assert!((l3 - (l2 + l1)).abs() < 1e-10 * l3);
        let u = vec![C64::new(1.0, 0.0); op3.dim()];
        assert!(dot(&u, &op3.apply(&u)).re > 0.0);
    }
}
