//! Numerical replay of the trial-space argument for the sub-Laplacian.
//!
//! At each level, `τ = λ_j^D / (4(2k−1))` and `B = 4τ`. The trial space is
//! `span{φ_1, …, φ_j, e^{iτt}U}` with `φ_i` the discrete Dirichlet
//! eigenvectors (extended by zero) and `U` the kernel column at the
//! minimizer of the deficit on the `(x, y)` shadow.

use heisengap_core::averaging::{default_scan, scan_rule, select_trials, DEFAULT_GRAM_TOL};
use heisengap_core::eigen::{jacobi_eigh, lowest_with, Spectrum};
use heisengap_core::geometry::{extrude, GridDomain3D, Shape, TTopology};
use heisengap_core::math::DenseMatrix;
use heisengap_core::operators::{assemble_heisenberg, BoundaryCondition, HermitianOperator};
use heisengap_core::special::{cutoff_radius, kernel_value, LandauParams};
use heisengap_core::C64;
use serde::{Deserialize, Serialize};

use super::{families, par_deficit_scan, shrinks, Check, Report, ReportBody};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::pool::map_ordered;
use crate::report::float;

/// Required shrink factor per halving of `h`.
pub const SHRINK_FACTOR: f64 = 1.7;

/// Largest admissible Rayleigh excess at the finest level.
pub const EXCESS_BOUND: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayLevel {
    pub h: f64,
    pub dim_dirichlet: usize,
    pub dim_neumann: usize,
    pub lambda_j: f64,
    pub tau: f64,
    pub b: f64,
    /// Kernel centre `z'` of `U`.
    pub z: [f64; 2],
    /// Planar energy over mass of `U` on the shadow.
    pub energy_ratio: f64,
    pub admissible_fraction: f64,
    /// `|Q(e^{iτt}U, φ_i) − λ_j⟨e^{iτt}U, φ_i⟩| / (λ_j‖e^{iτt}U‖‖φ_i‖)`.
    pub defects: Vec<f64>,
    pub defect: f64,
    /// Largest Rayleigh quotient over the trial space.
    pub rayleigh_max: f64,
    /// `max(0, rayleigh_max/λ_j − 1)`.
    pub excess: f64,
    /// Smallest eigenvalue of the unit-diagonal Gram matrix of the basis.
    pub gram_min: f64,
    /// `λ_{j+1}^N`, bounded above by `rayleigh_max` by min-max.
    pub neumann_next: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub label: String,
    pub shape: Option<Shape>,
    pub k: u32,
    pub j: usize,
    pub levels: Vec<ReplayLevel>,
    /// Worst `coarse / fine` ratio over the halvings.
    #[serde(with = "float")]
    pub defect_shrink: f64,
    #[serde(with = "float")]
    pub excess_shrink: f64,
}

struct Solved {
    domain: GridDomain3D,
    dirichlet: HermitianOperator,
    neumann: HermitianOperator,
    sd: Spectrum,
    sn: Spectrum,
}

/// `vol · ⟨u, v⟩` and `Q(u, v)` matrices of a basis.
fn gram_and_form(op: &HermitianOperator, basis: &[Vec<C64>]) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = basis.len();
    let mut g = DenseMatrix::zeros(n);
    let mut f = DenseMatrix::zeros(n);
    for a in 0..n {
        for b in a..n {
            let gv = op.inner(&basis[a], &basis[b])?;
            let fv = op.form(&basis[a], &basis[b])?;
            g[(a, b)] = gv;
            g[(b, a)] = gv.conj();
            f[(a, b)] = fv;
            f[(b, a)] = fv.conj();
        }
        g[(a, a)] = C64::new(g[(a, a)].re, 0.0);
        f[(a, a)] = C64::new(f[(a, a)].re, 0.0);
    }
    Ok((g, f))
}

/// Largest generalized eigenvalue of `(F, G)` and the smallest eigenvalue
/// of `G` after scaling it to unit diagonal.
fn max_rayleigh(g: &DenseMatrix, f: &DenseMatrix) -> Result<(f64, f64)> {
    let n = g.dim();
    let s: Vec<f64> = (0..n).map(|a| 1.0 / g[(a, a)].re.sqrt()).collect();
    let mut gn = DenseMatrix::zeros(n);
    let mut fn_ = DenseMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            gn[(a, b)] = g[(a, b)] * (s[a] * s[b]);
            fn_[(a, b)] = f[(a, b)] * (s[a] * s[b]);
        }
    }
    let ge = jacobi_eigh(&gn)?;
    let gmin = ge.values[0];
    if !(gmin > 0.0) {
        return Err(HarnessError::format(
            "trial space",
            "basis is linearly dependent",
        ));
    }
    // W = V Λ^{-1/2} makes the basis orthonormal.
    let mut w = DenseMatrix::zeros(n);
    for a in 0..n {
        for c in 0..n {
            w[(a, c)] = ge.vectors[(a, c)] / ge.values[c].sqrt();
        }
    }
    let mut fw = DenseMatrix::zeros(n);
    for a in 0..n {
        for c in 0..n {
            fw[(a, c)] = (0..n).map(|x| fn_[(a, x)] * w[(x, c)]).sum();
        }
    }
    let mut r = DenseMatrix::zeros(n);
    for a in 0..n {
        for b in 0..n {
            r[(a, b)] = (0..n).map(|x| w[(x, a)].conj() * fw[(x, b)]).sum();
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            let v = (r[(a, b)] + r[(b, a)].conj()) * 0.5;
            r[(a, b)] = v;
            r[(b, a)] = v.conj();
        }
        r[(a, a)] = C64::new(r[(a, a)].re, 0.0);
    }
    let re = jacobi_eigh(&r)?;
    Ok((re.values[n - 1], gmin))
}

fn replay_level(cfg: &ExperimentConfig, s: &Solved, k: u32, j: usize) -> Result<ReplayLevel> {
    let d = &s.domain;
    let lambda = s.sd.eigenvalues[j - 1];
    let tau = lambda / (4.0 * (2 * k - 1) as f64);
    let p = LandauParams::new(4.0 * tau, k)?;
    let shadow = d.shadow()?;
    let tail = cfg.quadrature.tail_tol;
    let rule = match cfg.quadrature.scan_step {
        Some(step) => scan_rule(&shadow, cutoff_radius(&p, tail), step)?,
        None => default_scan(&p, &shadow, tail)?,
    };
    let map = par_deficit_scan(&p, &shadow, &rule)?;
    let trial = select_trials(&map, 1, DEFAULT_GRAM_TOL)?.remove(0);

    let mut grid = vec![C64::new(0.0, 0.0); d.node_count()];
    for &n in d.inside_nodes() {
        let q = d.point(n);
        grid[n] = C64::from_polar(1.0, tau * q[2]) * kernel_value(&p, [q[0], q[1]], trial.z);
    }
    let on = &s.neumann;
    let eu = on.from_grid(&grid)?;
    let phis = (0..j)
        .map(|i| Ok(on.from_grid(&s.dirichlet.to_grid(&s.sd.eigenvectors[i])?)?))
        .collect::<Result<Vec<_>>>()?;
    let nu = on.inner(&eu, &eu)?.re.sqrt();
    let defects = phis
        .iter()
        .map(|ph| {
            let c = on.form(&eu, ph)? - on.inner(&eu, ph)? * lambda;
            let np = on.inner(ph, ph)?.re.sqrt();
            Ok(c.norm() / (lambda * nu * np))
        })
        .collect::<Result<Vec<f64>>>()?;
    let defect = defects.iter().copied().fold(0.0, f64::max);

    let mut basis = phis;
    basis.push(eu);
    let (g, f) = gram_and_form(on, &basis)?;
    let (rayleigh_max, gram_min) = max_rayleigh(&g, &f)?;
    Ok(ReplayLevel {
        h: d.h_xy(),
        dim_dirichlet: s.dirichlet.dim(),
        dim_neumann: on.dim(),
        lambda_j: lambda,
        tau,
        b: p.b(),
        z: trial.z,
        energy_ratio: trial.energy_ratio,
        admissible_fraction: map.admissible_fraction(),
        defects,
        defect,
        rayleigh_max,
        excess: (rayleigh_max / lambda - 1.0).max(0.0),
        gram_min,
        neumann_next: s.sn.eigenvalues[j],
    })
}

/// Replays the trial-space argument for each configured `k` and `j` on
/// bounded cylinders. Fails with [`HarnessError::DefectTooLarge`] when the
/// cross-term defect does not decrease at all along the ladder; the
/// required shrink factor is reported as a check.
pub fn replay_proof(cfg: &ExperimentConfig) -> Result<Report> {
    let fams = families(cfg)?;
    let s = &cfg.solver;
    let js = cfg
        .replay
        .as_ref()
        .map(|r| r.j.clone())
        .ok_or_else(|| HarnessError::Config("replay run without replay.j".into()))?;
    let j_top = js.iter().copied().max().unwrap_or(1);
    let mut jobs = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for li in 0..f.levels.len() {
            jobs.push((fi, li));
        }
    }
    let solved = map_ordered(&jobs, |&(fi, li)| -> Result<Solved> {
        let base = &fams[fi].levels[li];
        let domain = extrude(base, cfg.domain.t_len, base.h(), TTopology::Bounded)?;
        let dirichlet = assemble_heisenberg(&domain, &BoundaryCondition::Dirichlet)?;
        let neumann = assemble_heisenberg(&domain, &BoundaryCondition::Neumann)?;
        let sd = lowest_with(dirichlet.matrix(), j_top, s.tol, s.seed, s.inner)?;
        let sn = lowest_with(neumann.matrix(), j_top + 1, s.tol, s.seed, s.inner)?;
        Ok(Solved {
            domain,
            dirichlet,
            neumann,
            sd,
            sn,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut combos = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for &k in &cfg.physics.k {
            for &j in &js {
                for li in 0..f.levels.len() {
                    combos.push((fi, k, j, li));
                }
            }
        }
    }
    let offsets: Vec<usize> = fams
        .iter()
        .scan(0, |acc, f| {
            let o = *acc;
            *acc += f.levels.len();
            Some(o)
        })
        .collect();
    let levels = map_ordered(&combos, |&(fi, k, j, li)| {
        replay_level(cfg, &solved[offsets[fi] + li], k, j)
    });
    let mut levels = levels.into_iter();

    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for f in &fams {
        for &k in &cfg.physics.k {
            for &j in &js {
                let lv: Vec<ReplayLevel> = levels
                    .by_ref()
                    .take(f.levels.len())
                    .collect::<Result<_>>()?;
                let defects: Vec<f64> = lv.iter().map(|l| l.defect).collect();
                let excesses: Vec<f64> = lv.iter().map(|l| l.excess).collect();
                if defects.len() >= 2 && defects[defects.len() - 1] >= defects[0] {
                    return Err(HarnessError::DefectTooLarge { defects });
                }
                let (defect_shrink, defect_ok) = shrinks(&defects, SHRINK_FACTOR);
                let (excess_shrink, excess_ok) = shrinks(&excesses, SHRINK_FACTOR);
                let tag = format!("{} x (0,{}) k={k} j={j}", f.label, cfg.domain.t_len);
                if lv.len() >= 2 {
                    checks.push(Check {
                        passed: defect_ok,
                        ..Check::at_least(
                            format!("{tag}: cross-term defect shrink per halving"),
                            defect_shrink,
                            SHRINK_FACTOR,
                        )
                    });
                    checks.push(Check {
                        passed: excess_ok,
                        ..Check::at_least(
                            format!("{tag}: Rayleigh excess shrink per halving"),
                            excess_shrink,
                            SHRINK_FACTOR,
                        )
                    });
                }
                let last = lv.last().expect("non-empty ladder");
                checks.push(Check::at_most(
                    format!("{tag}: Rayleigh excess at finest h"),
                    last.excess,
                    EXCESS_BOUND,
                ));
                let gmin = lv.iter().map(|l| l.gram_min).fold(f64::INFINITY, f64::min);
                checks.push(Check::at_least(
                    format!("{tag}: trial basis Gram minimum"),
                    gmin,
                    DEFAULT_GRAM_TOL,
                ));
                let minmax = lv
                    .iter()
                    .map(|l| (l.neumann_next - l.rayleigh_max) / l.rayleigh_max)
                    .fold(f64::NEG_INFINITY, f64::max);
                checks.push(Check::at_most(
                    format!("{tag}: λ_j+1^N above the trial maximum"),
                    minmax,
                    10.0 * s.tol,
                ));
                runs.push(ReplayReport {
                    label: f.label.clone(),
                    shape: f.shape,
                    k,
                    j,
                    levels: lv,
                    defect_shrink,
                    excess_shrink,
                });
            }
        }
    }
    Ok(Report::new(
        cfg,
        ReportBody::Replay(runs),
        checks,
        Vec::new(),
    ))
}
