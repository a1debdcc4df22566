//! Property tests of the core invariants.

use heisengap_core::averaging::deficit_sample;
use heisengap_core::eigen::{count_at_most, count_below, dense_reference, multiplicity_cluster};
use heisengap_core::extrapolate::richardson;
use heisengap_core::geometry::{extrude, make_shape, Shape, TTopology};
use heisengap_core::operators::{
    assemble_heisenberg, assemble_landau2d, assemble_landau2d_gauge, BoundaryCondition,
    HermitianBuilder,
};
use heisengap_core::special::{kernel, kernel_value, laguerre, LandauParams};
use heisengap_core::C64;
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (1.0..2.0f64).prop_map(|side| Shape::Square { side }),
        (1.0..2.0f64, 0.75..1.5f64).prop_map(|(width, height)| Shape::Rectangle { width, height }),
        (0.7..1.1f64).prop_map(|radius| Shape::Disk { radius }),
        (1.2..2.0f64).prop_map(|side| Shape::Lshape { side }),
    ]
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y)| [x, y])
}

/// `L_n(x) = Σ_i (−1)^i C(n, i) x^i / i!`.
fn laguerre_sum(n: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..=n {
        term *= -x * (n - i + 1) as f64 / (i * i) as f64;
        sum += term;
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laguerre_three_term_recurrence(n in 1usize..40, x in 0.0..60.0f64) {
        let (a, b, c) = (laguerre(n + 1, x).unwrap(), laguerre(n, x).unwrap(), laguerre(n - 1, x).unwrap());
        let lhs = (n + 1) as f64 * a;
        let rhs = (2 * n + 1) as f64 * b - x * b - n as f64 * c;
        let scale = lhs.abs() + ((2 * n + 1) as f64 + x) * b.abs() + n as f64 * c.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn laguerre_matches_explicit_sum(n in 0usize..12, x in 0.0..2.0f64) {
        prop_assert!((laguerre(n, x).unwrap() - laguerre_sum(n, x)).abs() <= 1e-11);
    }

    #[test]
    fn kernel_is_hermitian_and_bounded(b in 0.2..4.0f64, k in 1u32..5, z in point(), zp in point()) {
        let p = LandauParams::new(b, k).unwrap();
        let v = kernel_value(&p, z, zp);
        let w = kernel_value(&p, zp, z);
        prop_assert!((v - w.conj()).norm() <= 1e-14 * p.diagonal());
        prop_assert!(v.norm() <= p.diagonal() * (1.0 + 1e-12));
        prop_assert!((kernel_value(&p, z, z) - C64::new(p.diagonal(), 0.0)).norm() <= 1e-14 * p.diagonal());
    }

    #[test]
    fn kernel_modulus_is_translation_invariant(b in 0.2..4.0f64, k in 1u32..4, z in point(), zp in point(), a in point()) {
        let p = LandauParams::new(b, k).unwrap();
        let za = [z[0] + a[0], z[1] + a[1]];
        let zpa = [zp[0] + a[0], zp[1] + a[1]];
        let (u, v) = (kernel(&p, z, zp), kernel(&p, za, zpa));
        prop_assert!((u.value.norm() - v.value.norm()).abs() <= 1e-12 * p.diagonal());
        let scale = p.diagonal() * p.diagonal() * p.b();
        prop_assert!((u.energy_density() - v.energy_density()).abs() <= 1e-11 * scale);
    }

    #[test]
    fn deficit_is_translation_invariant(b in 0.5..2.0f64, k in 1u32..3, zp in point(), i in -4i32..4, j in -4i32..4) {
        let p = LandauParams::new(b, k).unwrap();
        let d = make_shape(Shape::Disk { radius: 1.0 }, 0.125).unwrap();
        let a = [i as f64 * 0.125, j as f64 * 0.125];
        let s0 = deficit_sample(&p, &d, zp, 1.0);
        let s1 = deficit_sample(&p, &d.translated(a), [zp[0] + a[0], zp[1] + a[1]], 1.0);
        let scale = p.energy() * p.diagonal() * d.measure();
        prop_assert!((s0.r - s1.r).abs() <= 1e-10 * scale);
        prop_assert!((s0.mass - s1.mass).abs() <= 1e-10 * p.diagonal() * d.measure());
    }

    #[test]
    fn builder_output_is_exactly_hermitian(
        terms in prop::collection::vec(
            (0.1..3.0f64, prop::collection::vec((0usize..12, -2.0..2.0f64, -2.0..2.0f64), 1..4)),
            1..20,
        )
    ) {
        let mut bld = HermitianBuilder::new(12);
        for (w, st) in &terms {
            let st: Vec<(usize, C64)> = st.iter().map(|&(i, re, im)| (i, C64::new(re, im))).collect();
            bld.add_term(*w, &st);
        }
        let m = bld.build();
        prop_assert!(m.is_exactly_hermitian());
        for r in 0..12 {
            prop_assert!(m.get(r, r).re >= -1e-12);
        }
    }

    #[test]
    fn assembled_operators_are_hermitian(s in shape(), b in 0.0..3.0f64, sig in -1.0..1.0f64) {
        let d = make_shape(s, 0.25).unwrap();
        let n = d.boundary_segments().len();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann, BoundaryCondition::Robin(vec![sig; n])] {
            prop_assert!(assemble_landau2d(b, &d, &bc).unwrap().matrix().is_exactly_hermitian());
        }
    }

    #[test]
    fn gauge_shift_preserves_the_spectrum(s in shape(), b in 0.2..2.0f64, c in point()) {
        let d = make_shape(s, 0.25).unwrap();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let a = dense_reference(&assemble_landau2d(b, &d, &bc).unwrap()).unwrap().values;
            let g = dense_reference(&assemble_landau2d_gauge(b, &d, &bc, c).unwrap()).unwrap().values;
            let top = a.last().copied().unwrap_or(1.0).abs().max(1.0);
            for (x, y) in a.iter().zip(&g) {
                prop_assert!((x - y).abs() <= 1e-9 * top);
            }
        }
    }

    #[test]
    fn dirichlet_dominates_neumann(s in shape(), b in 0.0..3.0f64) {
        let d = make_shape(s, 0.25).unwrap();
        let dd = dense_reference(&assemble_landau2d(b, &d, &BoundaryCondition::Dirichlet).unwrap()).unwrap().values;
        let nn = dense_reference(&assemble_landau2d(b, &d, &BoundaryCondition::Neumann).unwrap()).unwrap().values;
        for (j, (x, y)) in dd.iter().zip(&nn).enumerate() {
            prop_assert!(*y <= x + 1e-9 * x.abs().max(1.0), "j={} N={} D={}", j + 1, y, x);
        }
    }

    #[test]
    fn clusters_partition_the_list(
        mut ev in prop::collection::vec(0.0..10.0f64, 1..40),
        tol in 1e-10..1e-2f64,
        level in 0.0..10.0f64,
    ) {
        ev.sort_by(f64::total_cmp);
        let cs = multiplicity_cluster(&ev, tol);
        prop_assert_eq!(cs.iter().map(|c| c.len).sum::<usize>(), ev.len());
        let mut next = 0;
        for c in &cs {
            prop_assert_eq!(c.start, next);
            prop_assert!(c.min <= c.max);
            next += c.len;
        }
        for w in cs.windows(2) {
            let scale = 1.0f64.max(w[0].max.abs()).max(w[1].min.abs());
            prop_assert!(w[1].min - w[0].max >= tol * scale);
        }
        let below = count_below(&cs, level, 0.0);
        let at_most = count_at_most(&cs, level, 0.0);
        prop_assert!(below <= at_most);
        prop_assert!(at_most <= ev.len());
        prop_assert!(count_at_most(&cs, level + 1.0, 0.0) >= at_most);
    }

    #[test]
    fn richardson_recovers_power_laws(limit in -5.0..5.0f64, c in 0.1..3.0f64, p in 1.0..3.5f64, h0 in 0.05..0.5f64) {
        let vals: Vec<f64> = (0..4).map(|i| limit + c * (h0 / (1 << i) as f64).powf(p)).collect();
        let e = richardson(&vals);
        let order = e.order.unwrap();
        prop_assert!((order - p).abs() <= 1e-6);
        prop_assert!((e.value - limit).abs() <= 1e-9 * (1.0 + c));
        prop_assert!(e.error >= 0.0);
    }

    #[test]
    fn richardson_error_bounds_a_converging_sequence(limit in -5.0..5.0f64, c in 0.1..3.0f64, p in 1.0..3.0f64) {
        let vals: Vec<f64> = (0..3).map(|i| limit + c * (0.25 / (1 << i) as f64).powf(p)).collect();
        let e = richardson(&vals);
        prop_assert!((e.value - limit).abs() <= e.error + 1e-12);
    }

    #[test]
    fn heisenberg_dirichlet_dominates_neumann(w in 1.0..1.5f64, t in 0.75..1.25f64) {
        let base = make_shape(Shape::Rectangle { width: w, height: 1.0 }, 0.25).unwrap();
        let d = extrude(&base, t, 0.25, TTopology::Bounded).unwrap();
        let dop = assemble_heisenberg(&d, &BoundaryCondition::Dirichlet).unwrap();
        let nop = assemble_heisenberg(&d, &BoundaryCondition::Neumann).unwrap();
        prop_assert!(dop.matrix().is_exactly_hermitian() && nop.matrix().is_exactly_hermitian());
        let dd = dense_reference(&dop).unwrap().values;
        let nn = dense_reference(&nop).unwrap().values;
        prop_assert!(nn[0].abs() <= 1e-9 * nn.last().unwrap());
        for (x, y) in dd.iter().zip(&nn) {
            prop_assert!(*y <= x + 1e-9 * x.abs().max(1.0));
        }
    }
}
