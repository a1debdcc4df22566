use heisengap_core::averaging::{default_scan, lemma_integrals, robin_boundary_average, scan_rule};
use heisengap_core::geometry::{BoundingBox, GridDomain2D, Shape};
use heisengap_core::special::{
    cutoff_radius, kernel_product, kernel_value, quad_grid, LandauParams,
};
use heisengap_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{families, par_deficit_scan, Check, Report, ReportBody};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::pool::map_ordered;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub b: f64,
    pub k: u32,
    pub z: [f64; 2],
    pub energy: f64,
    pub mass: f64,
    /// `|energy − B(2k−1)·mass| / (B²(2k−1)/2π)`.
    pub normalized_residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub label: String,
    pub b: f64,
    pub k: u32,
    pub h: f64,
    pub samples: usize,
    pub normalized_integral: f64,
    pub bound: f64,
    pub admissible_fraction: f64,
    pub min_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproRow {
    pub b: f64,
    pub k: u32,
    pub pairs: usize,
    /// Largest `|∫P(z,w)P(w,z')dw − P(z,z')| / (B/2π)`.
    pub max_error: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductRow {
    pub b: [f64; 2],
    pub k: [u32; 2],
    pub total_energy: f64,
    pub expected_energy: f64,
    /// Relative error of the product diagonal against `Π B_i/2π`.
    pub diagonal_error: f64,
    /// Normalized lemma residual of each factor at the origin.
    pub factor_residuals: [f64; 2],
    pub max_error: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobinRow {
    pub label: String,
    pub b: f64,
    pub k: u32,
    pub density: String,
    pub average: f64,
    /// `(B/2π) ∫σ dω`.
    pub expected: f64,
    pub relative_error: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub lemma: Vec<LemmaRow>,
    pub scans: Vec<ScanRow>,
    pub reproducing: Vec<ReproRow>,
    pub products: Vec<ProductRow>,
    pub robin: Vec<RobinRow>,
}

fn lattice(n: usize, w: f64) -> Vec<[f64; 2]> {
    let at = |i: usize| {
        if n == 1 {
            0.0
        } else {
            -w + 2.0 * w * i as f64 / (n - 1) as f64
        }
    };
    (0..n)
        .flat_map(|j| (0..n).map(move |i| [at(i), at(j)]))
        .collect()
}

fn lemma_row(p: &LandauParams, z: [f64; 2], tail: f64) -> Result<LemmaRow> {
    let li = lemma_integrals(p, z, tail)?;
    Ok(LemmaRow {
        b: p.b(),
        k: p.k(),
        z,
        energy: li.energy,
        mass: li.mass,
        normalized_residual: li.residual(p).abs() / (p.energy() * p.diagonal()),
        bound: 100.0 * tail,
    })
}

fn reproducing(p: &LandauParams, pairs: &[([f64; 2], [f64; 2])], tail: f64) -> Result<ReproRow> {
    let mut max_error: f64 = 0.0;
    for &(z, zp) in pairs {
        let rule = quad_grid(
            p,
            &BoundingBox::point(z).union(&BoundingBox::point(zp)),
            tail,
        )?;
        let v: C64 = rule.integrate(|w| kernel_value(p, z, w) * kernel_value(p, w, zp));
        max_error = max_error.max((v - kernel_value(p, z, zp)).norm() / p.diagonal());
    }
    Ok(ReproRow {
        b: p.b(),
        k: p.k(),
        pairs: pairs.len(),
        max_error,
        bound: 10.0 * tail,
    })
}

fn product_row(b: [f64; 2], k: [u32; 2], tail: f64) -> Result<ProductRow> {
    let ps = [
        LandauParams::new(b[0], k[0])?,
        LandauParams::new(b[1], k[1])?,
    ];
    let z = [[0.3, -0.1], [-0.2, 0.4]];
    let kp = kernel_product(&ps, &z, &z)?;
    let diag = ps[0].diagonal() * ps[1].diagonal();
    let diagonal_error = (kp.value - C64::new(diag, 0.0)).norm() / diag;
    let expected_energy = ps.iter().map(|p| p.energy()).sum::<f64>();
    let r0 = lemma_row(&ps[0], [0.0, 0.0], tail)?.normalized_residual;
    let r1 = lemma_row(&ps[1], [0.0, 0.0], tail)?.normalized_residual;
    let max_error = diagonal_error.max(r0).max(r1);
    Ok(ProductRow {
        b,
        k,
        total_energy: kp.total_energy,
        expected_energy: b[0] * (2 * k[0] - 1) as f64 + b[1] * (2 * k[1] - 1) as f64,
        diagonal_error,
        factor_residuals: [r0, r1],
        max_error: max_error.max((expected_energy - kp.total_energy).abs()),
        bound: 100.0 * tail,
    })
}

fn is_polygon(shape: Option<Shape>) -> bool {
    !matches!(shape, Some(Shape::Disk { .. } | Shape::Annulus { .. }))
}

/// Boundary densities of the Robin average check.
fn densities(d: &GridDomain2D) -> Vec<(String, Vec<f64>)> {
    let wavy = d
        .boundary_segments()
        .iter()
        .map(|s| {
            let m = d.segment_midpoint(s);
            -1.0 + 0.5 * (m[0] + 2.0 * m[1]).sin()
        })
        .collect();
    vec![
        (
            "constant -1".into(),
            vec![-1.0; d.boundary_segments().len()],
        ),
        ("-1 + sin(x + 2y)/2".into(), wavy),
    ]
}

/// Kernel identities: the pointwise lemma on a lattice, the mean-zero
/// deficit on each configured domain, the reproducing property, product
/// kernels and the boundary average of `σ|P|²`.
pub fn run_identity_suite(cfg: &ExperimentConfig) -> Result<Report> {
    let q = &cfg.quadrature;
    let tail = q.tail_tol;
    let mut params = Vec::new();
    for &b in &cfg.physics.b {
        for &k in &cfg.physics.k {
            params.push(LandauParams::new(b, k)?);
        }
    }
    let points = lattice(q.lattice, q.lattice_half_width);
    let lemma_jobs: Vec<(LandauParams, [f64; 2])> = params
        .iter()
        .flat_map(|p| points.iter().map(move |z| (*p, *z)))
        .collect();
    let lemma = map_ordered(&lemma_jobs, |(p, z)| lemma_row(p, *z, tail))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let fams = families(cfg)?;
    let mut scans = Vec::new();
    for f in &fams {
        let d = &f.levels[0];
        for p in &params {
            let rule = match q.scan_step {
                Some(step) => scan_rule(d, cutoff_radius(p, tail), step)?,
                None => default_scan(p, d, tail)?,
            };
            let map = par_deficit_scan(p, d, &rule)?;
            scans.push(ScanRow {
                label: f.label.clone(),
                b: p.b(),
                k: p.k(),
                h: d.h(),
                samples: rule.len(),
                normalized_integral: map.normalized_integral(),
                bound: 1e4 * tail,
                admissible_fraction: map.admissible_fraction(),
                min_r: map.min_r(),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let w = q.lattice_half_width;
    let pair_sets: Vec<Vec<([f64; 2], [f64; 2])>> = params
        .iter()
        .map(|_| {
            (0..q.pairs)
                .map(|_| {
                    let mut pt = || [rng.random_range(-w..=w), rng.random_range(-w..=w)];
                    (pt(), pt())
                })
                .collect()
        })
        .collect();
    let repro_jobs: Vec<usize> = (0..params.len()).collect();
    let reproducing = map_ordered(&repro_jobs, |&i| {
        reproducing(&params[i], &pair_sets[i], tail)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut product_cases = vec![([1.0, 3.0], [1, 2])];
    if let (Some(&b0), Some(&b1)) = (cfg.physics.b.first(), cfg.physics.b.last()) {
        let k0 = cfg.physics.k[0];
        let k1 = *cfg.physics.k.last().unwrap_or(&k0);
        product_cases.push(([b0, b1], [k0, k1]));
    }
    let products = map_ordered(&product_cases, |(b, k)| product_row(*b, *k, tail))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut robin_jobs = Vec::new();
    for f in fams.iter().filter(|f| is_polygon(f.shape)) {
        for p in &params {
            for (name, sigma) in densities(&f.levels[0]) {
                robin_jobs.push((f, *p, name, sigma));
            }
        }
    }
    let robin = map_ordered(&robin_jobs, |(f, p, name, sigma)| -> Result<RobinRow> {
        let d = &f.levels[0];
        let rule = quad_grid(p, &d.bounding_box(), tail)?;
        let average = robin_boundary_average(p, d, sigma, &rule)?;
        let expected = p.diagonal() * sigma.iter().sum::<f64>() * d.h();
        Ok(RobinRow {
            label: f.label.clone(),
            b: p.b(),
            k: p.k(),
            density: name.clone(),
            average,
            expected,
            relative_error: ((average - expected) / expected).abs(),
            bound: 1e-4,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut checks = Vec::new();
    let worst = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
    for p in &params {
        let tag = format!("B={} k={}", p.b(), p.k());
        let rows = lemma.iter().filter(|r| r.b == p.b() && r.k == p.k());
        let v = worst(&mut rows.clone().map(|r| r.normalized_residual));
        checks.push(Check::at_most(
            format!("{tag}: lemma residual over the lattice"),
            v,
            100.0 * tail,
        ));
    }
    for r in &scans {
        let tag = format!("{} B={} k={}", r.label, r.b, r.k);
        checks.push(Check::at_most(
            format!("{tag}: deficit mean"),
            r.normalized_integral.abs(),
            r.bound,
        ));
        checks.push(Check::at_least(
            format!("{tag}: admissible fraction"),
            r.admissible_fraction,
            0.01,
        ));
    }
    for r in &reproducing {
        checks.push(Check::at_most(
            format!("B={} k={}: reproducing property", r.b, r.k),
            r.max_error,
            r.bound,
        ));
    }
    for r in &products {
        let tag = format!("product B={:?} k={:?}", r.b, r.k);
        checks.push(Check::at_most(
            format!("{tag}: total energy"),
            (r.total_energy - r.expected_energy).abs(),
            1e-12 * r.expected_energy,
        ));
        checks.push(Check::at_most(
            format!("{tag}: diagonal and factor residuals"),
            r.max_error,
            r.bound,
        ));
    }
    for r in &robin {
        checks.push(Check::at_most(
            format!(
                "{} B={} k={} σ={}: boundary average",
                r.label, r.b, r.k, r.density
            ),
            r.relative_error,
            r.bound,
        ));
    }
    let body = IdentityReport {
        lemma,
        scans,
        reproducing,
        products,
        robin,
    };
    Ok(Report::new(
        cfg,
        ReportBody::Identities(body),
        checks,
        Vec::new(),
    ))
}
