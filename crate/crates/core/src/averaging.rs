//! Averaged kernel identities and the deficit functional.
//!
//! For a kernel column `P(·, z')` restricted to `Ω` the deficit is
//!
//! ```text
//! R(z') = ∫_Ω |(D − BA)P(z, z')|² dz − B(2k−1) ∫_Ω |P(z, z')|² dz
//! ```
//!
//! Integrating the pointwise identity `∫|(D−BA)P(z,·)|² = B(2k−1) B/2π` over
//! `z ∈ Ω` shows that `R` has zero mean, so `K = {R ≤ 0}` is not empty and
//! every `z' ∈ K` gives a function with Rayleigh quotient at most `B(2k−1)`.
//! Domain integrals use the operator node weight `h²`.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::eigen::jacobi_eigh;
use crate::geometry::{BoundingBox, GridDomain2D};
use crate::math::{dot, pairwise_sum, DenseMatrix};
use crate::special::{
    cutoff_radius, kernel, kernel_value, quad_grid, LandauParams, QuadRule, DEFAULT_NODE_BUDGET,
};
use crate::{Error, Result, C64};

/// Largest supported `B · diam(Ω)²`.
pub const MAX_REGIME: f64 = 200.0;

/// Default Gram tolerance of [`select_trials`].
pub const DEFAULT_GRAM_TOL: f64 = 1e-6;

/// Relative slack of the test `R ≤ 0`, in units of `B(2k−1)|Ω|`.
pub const DEFICIT_SLACK: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaIntegrals {
    /// `∫ |(D_z − BA(z))P(z, z')|² dz'`
    pub energy: f64,
    /// `∫ |P(z, z')|² dz'`
    pub mass: f64,
}

impl LemmaIntegrals {
    pub fn residual(&self, p: &LandauParams) -> f64 {
        self.energy - p.energy() * self.mass
    }
}

/// Both planar integrals over `z'` at fixed `z`.
pub fn lemma_integrals(p: &LandauParams, z: [f64; 2], tail_tol: f64) -> Result<LemmaIntegrals> {
    let rule = quad_grid(p, &BoundingBox::point(z), tail_tol)?;
    let energy = rule.integrate(|w| kernel(p, z, w).energy_density());
    let mass = rule.integrate(|w| kernel_value(p, z, w).norm_sqr());
    Ok(LemmaIntegrals { energy, mass })
}

/// `∫|(D−BA)P(z,·)|² − B(2k−1)∫|P(z,·)|²`, zero in exact arithmetic.
pub fn lemma_residual(p: &LandauParams, z: [f64; 2], tail_tol: f64) -> Result<f64> {
    Ok(lemma_integrals(p, z, tail_tol)?.residual(p))
}

/// Contract bound `20 · tail_tol · B²(2k−1)/2π` on [`lemma_residual`].
pub fn lemma_bound(p: &LandauParams, tail_tol: f64) -> f64 {
    20.0 * tail_tol * p.energy() * p.diagonal()
}

/// Rejects `B · diam² > 200`, where kernel columns become too oscillatory
/// for the node rule.
pub fn check_regime(p: &LandauParams, d: &GridDomain2D) -> Result<()> {
    let diam = d.diameter();
    let v = p.b() * diam * diam;
    if v > MAX_REGIME {
        return Err(Error::KernelRegime(v));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitSample {
    pub z: [f64; 2],
    /// Scan-rule weight of `z`.
    pub weight: f64,
    /// `∫_Ω |(D−BA)P(·, z')|²`
    pub energy: f64,
    /// `∫_Ω |P(·, z')|²`
    pub mass: f64,
    pub r: f64,
}

/// Deficit at one point `z'`, by the node rule on `Ω`.
pub fn deficit_sample(
    p: &LandauParams,
    d: &GridDomain2D,
    zp: [f64; 2],
    weight: f64,
) -> DeficitSample {
    let nodes = d.inside_nodes();
    let w = d.node_weight();
    let (energy, mass): (f64, f64) = {
        let e = pairwise_sum(nodes.len(), |i| {
            kernel(p, d.point(nodes[i]), zp).energy_density()
        });
        let m = pairwise_sum(nodes.len(), |i| {
            kernel_value(p, d.point(nodes[i]), zp).norm_sqr()
        });
        (e * w, m * w)
    };
    DeficitSample {
        z: zp,
        weight,
        energy,
        mass,
        r: energy - p.energy() * mass,
    }
}

/// Scan rule covering `Ω` inflated by the cutoff radius, with step
/// `min(0.25/√B, 4h)`.
pub fn default_scan(p: &LandauParams, d: &GridDomain2D, tail_tol: f64) -> Result<QuadRule> {
    let r_cut = cutoff_radius(p, tail_tol);
    let step = (0.25 * p.magnetic_length()).min(4.0 * d.h());
    scan_rule(d, r_cut, step)
}

/// Scan rule on the bounding box of `Ω` inflated by `r_cut`.
pub fn scan_rule(d: &GridDomain2D, r_cut: f64, step: f64) -> Result<QuadRule> {
    let mut rule = QuadRule::uniform(&d.bounding_box().inflate(r_cut), step)?;
    rule.r_cut = r_cut;
    if rule.len() > DEFAULT_NODE_BUDGET {
        return Err(Error::BudgetExceeded {
            needed: rule.len(),
            budget: DEFAULT_NODE_BUDGET,
        });
    }
    Ok(rule)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeficitMap {
    pub params: LandauParams,
    pub domain: GridDomain2D,
    pub rule: QuadRule,
    /// Sorted by `R` ascending, ties in rule order.
    pub samples: Vec<DeficitSample>,
    /// `Σ w R` over the rule, accumulated in rule order.
    pub integral: f64,
    /// Absolute slack of the test `R ≤ 0`.
    pub slack: f64,
}

impl DeficitMap {
    /// Builds a map from samples given in rule order.
    pub fn from_samples(
        params: LandauParams,
        domain: GridDomain2D,
        rule: QuadRule,
        samples: Vec<DeficitSample>,
    ) -> Result<Self> {
        if samples.len() != rule.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: rule.len(),
            });
        }
        let integral = pairwise_sum(samples.len(), |i| samples[i].r * samples[i].weight);
        let slack = DEFICIT_SLACK * params.energy() * domain.measure();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].r.total_cmp(&samples[b].r).then(a.cmp(&b)));
        let samples = order.into_iter().map(|i| samples[i]).collect();
        Ok(Self {
            params,
            domain,
            rule,
            samples,
            integral,
            slack,
        })
    }

    /// `∫R dz' / (B(2k−1) · B/2π · |Ω|)`.
    pub fn normalized_integral(&self) -> f64 {
        self.integral / (self.params.energy() * self.params.diagonal() * self.domain.measure())
    }

    /// Samples with `R ≤ slack`.
    pub fn admissible(&self) -> impl Iterator<Item = &DeficitSample> + '_ {
        self.samples.iter().filter(move |s| s.r <= self.slack)
    }

    pub fn admissible_fraction(&self) -> f64 {
        self.admissible().count() as f64 / self.samples.len() as f64
    }

    /// Rule-weighted area of the admissible set.
    pub fn admissible_measure(&self) -> f64 {
        self.admissible().map(|s| s.weight).sum()
    }

    pub fn min_r(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.r)
    }
}

/// Deficit at every node of `rule`.
pub fn deficit_scan(p: &LandauParams, d: &GridDomain2D, rule: &QuadRule) -> Result<DeficitMap> {
    check_scan(p, d, rule)?;
    let samples = (0..rule.len())
        .map(|i| deficit_sample(p, d, rule.point(i), rule.weight(i)))
        .collect();
    DeficitMap::from_samples(*p, d.clone(), rule.clone(), samples)
}

/// Preconditions of [`deficit_scan`], exposed for parallel drivers.
pub fn check_scan(p: &LandauParams, d: &GridDomain2D, rule: &QuadRule) -> Result<()> {
    check_regime(p, d)?;
    let need = d.bounding_box().inflate(rule.r_cut - 1e-9 * rule.spacing);
    if !rule.bounding_box().contains_box(&need) {
        return Err(Error::InvalidParameter(
            "scan rule does not cover the inflated domain".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFunction {
    pub params: LandauParams,
    pub z: [f64; 2],
    /// `P(·, z')` at the inside nodes of the domain.
    pub restriction: Vec<C64>,
    /// Node-rule energy over mass.
    pub energy_ratio: f64,
}

/// Kernel column `P(·, z')` at the inside nodes of `d`.
pub fn restriction(p: &LandauParams, d: &GridDomain2D, zp: [f64; 2]) -> Vec<C64> {
    d.inside_nodes()
        .iter()
        .map(|&n| kernel_value(p, d.point(n), zp))
        .collect()
}

fn gram_ok(vectors: &[Vec<C64>], gram_tol: f64) -> Result<bool> {
    let n = vectors.len();
    let mut g = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = dot(&vectors[i], &vectors[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)] = C64::new(g[(i, i)].re, 0.0);
    }
    let ev = jacobi_eigh(&g)?;
    let hi = ev.values[n - 1];
    Ok(hi > 0.0 && ev.values[0] >= gram_tol * hi)
}

/// Picks `count` admissible kernel columns with a well-conditioned Gram
/// matrix: the minimizer of `R` first, then greedy farthest points.
pub fn select_trials(map: &DeficitMap, count: usize, gram_tol: f64) -> Result<Vec<TrialFunction>> {
    let lambda = map.params.energy();
    let cands: Vec<&DeficitSample> = map
        .admissible()
        .filter(|s| s.mass > 0.0 && s.energy / s.mass <= lambda)
        .collect();
    let not_enough = |found| Error::NotEnoughTrials {
        requested: count,
        found,
    };
    if count == 0 {
        return Ok(Vec::new());
    }
    if cands.len() < count {
        return Err(not_enough(cands.len()));
    }
    let mut chosen: Vec<usize> = vec![0];
    let mut vectors = vec![restriction(&map.params, &map.domain, cands[0].z)];
    let mut dist: Vec<f64> = cands.iter().map(|s| sq_dist(s.z, cands[0].z)).collect();
    while chosen.len() < count {
        let mut order: Vec<usize> = (0..cands.len()).filter(|i| dist[*i] > 0.0).collect();
        order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]).then(a.cmp(&b)));
        let mut picked = None;
        for i in order {
            let v = restriction(&map.params, &map.domain, cands[i].z);
            vectors.push(v);
            if gram_ok(&vectors, gram_tol)? {
                picked = Some(i);
                break;
            }
            vectors.pop();
        }
        let Some(i) = picked else {
            return Err(not_enough(chosen.len()));
        };
        chosen.push(i);
        for (k, s) in cands.iter().enumerate() {
            dist[k] = dist[k].min(sq_dist(s.z, cands[i].z));
        }
    }
    Ok(chosen
        .into_iter()
        .zip(vectors)
        .map(|(i, restriction)| TrialFunction {
            params: map.params,
            z: cands[i].z,
            restriction,
            energy_ratio: cands[i].energy / cands[i].mass,
        })
        .collect())
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

/// `∫ ∫_{∂Ω} σ |P(z, z')|² dω(z) dz'` with `z'` on `rule` and the segment
/// midpoint rule on `∂Ω`. `sigma` is given per boundary segment.
pub fn robin_boundary_average(
    p: &LandauParams,
    d: &GridDomain2D,
    sigma: &[f64],
    rule: &QuadRule,
) -> Result<f64> {
    let segs = d.boundary_segments();
    if sigma.len() != segs.len() {
        return Err(Error::LengthMismatch {
            left: sigma.len(),
            right: segs.len(),
        });
    }
    if let Some(bad) = sigma.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("sigma value {bad}")));
    }
    let mids: Vec<[f64; 2]> = segs.iter().map(|s| d.segment_midpoint(s)).collect();
    let h = d.h();
    Ok(rule.integrate(|zp| {
        pairwise_sum(mids.len(), |s| {
            sigma[s] * h * kernel_value(p, mids[s], zp).norm_sqr()
        })
    }))
}
