use heisengap_core::averaging::robin_boundary_average;
use heisengap_core::eigen::{
    count_at_most, count_below, lowest_with, multiplicity_cluster, Spectrum,
};
use heisengap_core::geometry::{extrude, GridDomain2D, Shape, TTopology};
use heisengap_core::operators::{
    assemble_heisenberg, assemble_landau2d, BoundaryCondition, HermitianOperator,
};
use heisengap_core::special::{quad_grid, LandauParams};
use heisengap_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use super::fiber::fiber_check_entry;
use super::{
    families, fiber_check, margin_verdict, Check, Estimate, Family, FiberCheck, Report, ReportBody,
    Verdict, MARGIN_NOTE,
};
use crate::config::{ExperimentConfig, SolverConfig};
use crate::error::{HarnessError, Result};
use crate::pool::map_ordered;
use crate::report::float;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum LevelStatus {
    Solved,
    InconclusiveAtBudget { reason: String },
}

/// Spectra at one ladder level. `other` is the Neumann or Robin spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub h: f64,
    pub dim_dirichlet: usize,
    pub dim_other: usize,
    pub status: LevelStatus,
    pub dirichlet: Vec<f64>,
    pub other: Vec<f64>,
    /// Largest residual relative to the Gershgorin bound, per operator.
    #[serde(with = "float")]
    pub residual_dirichlet: f64,
    #[serde(with = "float")]
    pub residual_other: f64,
    /// `λ_j^D − λ_{j+1}^other` for `j = 1..=j_max`.
    pub gaps: Vec<f64>,
}

impl Level {
    pub fn solved(&self) -> bool {
        self.status == LevelStatus::Solved
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapVerdict {
    pub j: usize,
    pub gaps: Vec<f64>,
    pub estimate: Estimate,
    pub verdict: Verdict,
}

/// Interval count at one level for `B(2k−1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingCheck {
    pub h: f64,
    pub k: u32,
    pub level: f64,
    /// `B(2k−1) ≤ λ_{m−1}^D`, so the count is complete.
    pub applicable: bool,
    pub dirichlet_at_most: usize,
    pub other_below: usize,
    pub passed: bool,
}

/// `B(2k−1) − λ_{j+1}^other` along the ladder, `j` the Dirichlet count at
/// the finest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingMargin {
    pub k: u32,
    pub level: f64,
    pub j: usize,
    pub margins: Vec<f64>,
    pub estimate: Estimate,
    pub verdict: Verdict,
}

/// Boundary average of `σ|P|²` against `(B/2π)∫σ dω` on the coarsest level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobinAverage {
    pub k: u32,
    pub average: f64,
    pub expected: f64,
    pub relative_error: f64,
    /// The raster boundary coincides with the polygon.
    pub raster_exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub label: String,
    pub shape: Option<Shape>,
    pub b: Option<f64>,
    pub bc: String,
    pub j_max: usize,
    pub m: usize,
    pub levels: Vec<Level>,
    pub gaps: Vec<GapVerdict>,
    pub counting: Vec<CountingCheck>,
    pub margins: Vec<CountingMargin>,
    /// `∫σ dω` per level, Robin only.
    pub sigma_integral: Vec<f64>,
    pub robin_average: Vec<RobinAverage>,
    pub fiber: Vec<FiberCheck>,
}

/// Solves for `m` pairs; non-convergence is reported, not raised.
fn solve(
    op: &HermitianOperator,
    m: usize,
    s: &SolverConfig,
) -> Result<std::result::Result<Spectrum, String>> {
    match lowest_with(op.matrix(), m, s.tol, s.seed, s.inner) {
        Ok(sp) => Ok(Ok(sp)),
        Err(e @ (CoreError::NoConvergence { .. } | CoreError::BudgetExceeded { .. })) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

fn max_rel_residual(sp: &Spectrum) -> f64 {
    let g = sp.meta.norm_bound.max(f64::MIN_POSITIVE);
    sp.residuals.iter().fold(0.0, |a, r| a.max(r / g))
}

fn solve_level(
    h: f64,
    dop: &HermitianOperator,
    oop: &HermitianOperator,
    s: &SolverConfig,
) -> Result<Level> {
    let m = s.eigenpairs();
    let ds = solve(dop, m, s)?;
    let os = solve(oop, m, s)?;
    let mut level = Level {
        h,
        dim_dirichlet: dop.dim(),
        dim_other: oop.dim(),
        status: LevelStatus::Solved,
        dirichlet: Vec::new(),
        other: Vec::new(),
        residual_dirichlet: f64::NAN,
        residual_other: f64::NAN,
        gaps: Vec::new(),
    };
    match (ds, os) {
        (Ok(d), Ok(o)) => {
            level.residual_dirichlet = max_rel_residual(&d);
            level.residual_other = max_rel_residual(&o);
            level.gaps = (1..=s.j_max)
                .map(|j| d.eigenvalues[j - 1] - o.eigenvalues[j])
                .collect();
            level.dirichlet = d.eigenvalues;
            level.other = o.eigenvalues;
        }
        (Err(r), _) | (_, Err(r)) => level.status = LevelStatus::InconclusiveAtBudget { reason: r },
    }
    Ok(level)
}

fn gap_verdicts(levels: &[Level], j_max: usize) -> Vec<GapVerdict> {
    let complete = levels.iter().all(Level::solved);
    (1..=j_max)
        .map(|j| {
            let gaps: Vec<f64> = levels
                .iter()
                .filter(|l| l.solved())
                .map(|l| l.gaps[j - 1])
                .collect();
            let (estimate, verdict) = margin_verdict(&gaps, complete);
            GapVerdict {
                j,
                gaps,
                estimate,
                verdict,
            }
        })
        .collect()
}

fn counting(
    levels: &[Level],
    b: f64,
    ks: &[u32],
    tol: f64,
) -> (Vec<CountingCheck>, Vec<CountingMargin>) {
    let gap_tol = 10.0 * tol;
    let mut checks = Vec::new();
    let mut margins = Vec::new();
    if b <= 0.0 {
        return (checks, margins);
    }
    for &k in ks {
        let level = b * (2 * k - 1) as f64;
        let slack = gap_tol * level.max(1.0);
        let mut finest_count = None;
        for l in levels.iter().filter(|l| l.solved()) {
            let m = l.dirichlet.len();
            let applicable = m >= 2 && level <= l.dirichlet[m - 2];
            let dc = count_at_most(&multiplicity_cluster(&l.dirichlet, gap_tol), level, slack);
            let oc = count_below(&multiplicity_cluster(&l.other, gap_tol), level, slack);
            checks.push(CountingCheck {
                h: l.h,
                k,
                level,
                applicable,
                dirichlet_at_most: dc,
                other_below: oc,
                passed: !applicable || oc > dc,
            });
            finest_count = applicable.then_some(dc);
        }
        let complete = levels.iter().all(Level::solved) && !levels.is_empty();
        if let Some(j) = finest_count {
            let ms: Vec<f64> = levels
                .iter()
                .filter(|l| l.solved())
                .map(|l| level - l.other[j])
                .collect();
            let (estimate, verdict) = margin_verdict(&ms, complete);
            margins.push(CountingMargin {
                k,
                level,
                j,
                margins: ms,
                estimate,
                verdict,
            });
        }
    }
    (checks, margins)
}

fn report_checks(r: &InequalityReport, tol: f64) -> Vec<Check> {
    let tag = match r.b {
        Some(b) => format!("{} B={b}", r.label),
        None => r.label.clone(),
    };
    let mut out = vec![Check::holds(
        format!("{tag}: all levels solved"),
        r.levels.iter().all(Level::solved),
    )];
    let solved = || r.levels.iter().filter(|l| l.solved());
    let min_gap = solved()
        .flat_map(|l| l.gaps.iter().copied())
        .fold(f64::INFINITY, f64::min);
    out.push(Check::at_least(
        format!("{tag}: discrete gap min_j,h (λ_j^D − λ_j+1^{})", r.bc),
        min_gap,
        0.0,
    ));
    let interlace = solved()
        .flat_map(|l| {
            l.dirichlet
                .iter()
                .zip(&l.other)
                .map(|(d, o)| (o - d) / d.abs().max(1.0))
                .collect::<Vec<_>>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::at_most(
        format!("{tag}: interlacing λ_j^{} ≤ λ_j^D", r.bc),
        interlace,
        10.0 * tol,
    ));
    for g in &r.gaps {
        out.push(Check::holds(
            format!("{tag}: j={} gap not inconclusive ({:?})", g.j, g.verdict),
            g.verdict != Verdict::Inconclusive,
        ));
    }
    for c in r.counting.iter().filter(|c| c.applicable) {
        out.push(Check::holds(
            format!(
                "{tag} h={} k={}: {} Dirichlet ≤ {}, {} {} below",
                c.h, c.k, c.dirichlet_at_most, c.level, c.other_below, r.bc
            ),
            c.passed,
        ));
    }
    for m in &r.margins {
        out.push(Check::holds(
            format!(
                "{tag} k={} j={}: counting margin not inconclusive ({:?})",
                m.k, m.j, m.verdict
            ),
            m.verdict != Verdict::Inconclusive,
        ));
    }
    for a in &r.robin_average {
        out.push(Check::at_most(
            format!("{tag} k={}: boundary average of σ|P|² ≤ 0", a.k),
            a.average,
            0.0,
        ));
        if a.raster_exact {
            out.push(Check::at_most(
                format!("{tag} k={}: boundary average vs (B/2π)∫σ", a.k),
                a.relative_error,
                1e-4,
            ));
        }
    }
    out.extend(r.fiber.iter().map(fiber_check_entry));
    out
}

fn finish(cfg: &ExperimentConfig, runs: Vec<InequalityReport>) -> Report {
    let checks = runs
        .iter()
        .flat_map(|r| report_checks(r, cfg.solver.tol))
        .collect();
    Report::new(
        cfg,
        ReportBody::Inequality(runs),
        checks,
        vec![MARGIN_NOTE.to_string()],
    )
}

fn is_polygon(shape: Option<Shape>) -> bool {
    !matches!(shape, Some(Shape::Disk { .. } | Shape::Annulus { .. }))
}

fn sigma_integral(d: &GridDomain2D, sigma: &[f64]) -> f64 {
    sigma.iter().sum::<f64>() * d.h()
}

fn planar(cfg: &ExperimentConfig, robin: bool) -> Result<Report> {
    let fams = families(cfg)?;
    let s = &cfg.solver;
    let bs = &cfg.physics.b;
    let sigma_at = |d: &GridDomain2D| -> Result<Vec<f64>> {
        let spec = cfg
            .physics
            .sigma
            .as_ref()
            .ok_or_else(|| HarnessError::Config("Robin run without sigma".into()))?;
        let v = spec.values(d.boundary_segments().len())?;
        let mean = sigma_integral(d, &v);
        if mean > 0.0 {
            return Err(HarnessError::SigmaMeanPositive { mean });
        }
        Ok(v)
    };
    if robin {
        for f in &fams {
            for d in &f.levels {
                sigma_at(d)?;
            }
        }
    }
    let mut jobs = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for bi in 0..bs.len() {
            for li in 0..f.levels.len() {
                jobs.push((fi, bi, li));
            }
        }
    }
    let levels = map_ordered(&jobs, |&(fi, bi, li)| {
        let d = &fams[fi].levels[li];
        let b = bs[bi];
        let other = if robin {
            BoundaryCondition::Robin(sigma_at(d)?)
        } else {
            BoundaryCondition::Neumann
        };
        let dop = assemble_landau2d(b, d, &BoundaryCondition::Dirichlet)?;
        let oop = assemble_landau2d(b, d, &other)?;
        solve_level(d.h(), &dop, &oop, s)
    });
    let mut levels = levels.into_iter();
    let mut runs = Vec::new();
    for f in &fams {
        for &b in bs {
            let lv: Vec<Level> = levels
                .by_ref()
                .take(f.levels.len())
                .collect::<Result<_>>()?;
            let (counting, margins) = counting(&lv, b, &cfg.physics.k, s.tol);
            let mut run = InequalityReport {
                label: f.label.clone(),
                shape: f.shape,
                b: Some(b),
                bc: if robin { "robin" } else { "neumann" }.into(),
                j_max: s.j_max,
                m: s.eigenpairs(),
                gaps: gap_verdicts(&lv, s.j_max),
                levels: lv,
                counting,
                margins,
                sigma_integral: Vec::new(),
                robin_average: Vec::new(),
                fiber: Vec::new(),
            };
            if robin {
                run.sigma_integral = f
                    .levels
                    .iter()
                    .map(|d| sigma_at(d).map(|v| sigma_integral(d, &v)))
                    .collect::<Result<_>>()?;
                run.robin_average = robin_averages(cfg, f, b)?;
            }
            runs.push(run);
        }
    }
    Ok(finish(cfg, runs))
}

fn robin_averages(cfg: &ExperimentConfig, f: &Family, b: f64) -> Result<Vec<RobinAverage>> {
    let d = &f.levels[0];
    let sigma = cfg
        .physics
        .sigma
        .as_ref()
        .map(|s| s.values(d.boundary_segments().len()))
        .transpose()?
        .unwrap_or_default();
    let ks = &cfg.physics.k;
    let rows = map_ordered(ks, |&k| {
        let p = LandauParams::new(b, k)?;
        let rule = quad_grid(&p, &d.bounding_box(), cfg.quadrature.tail_tol)?;
        let average = robin_boundary_average(&p, d, &sigma, &rule)?;
        let expected = p.diagonal() * sigma_integral(d, &sigma);
        let relative_error = if expected == 0.0 {
            average.abs()
        } else {
            ((average - expected) / expected).abs()
        };
        Ok(RobinAverage {
            k,
            average,
            expected,
            relative_error,
            raster_exact: is_polygon(f.shape),
        })
    });
    rows.into_iter().collect()
}

/// Dirichlet against Neumann for the planar magnetic Laplacian.
pub fn run_inequality_2d(cfg: &ExperimentConfig) -> Result<Report> {
    planar(cfg, false)
}

/// Dirichlet against Robin with the configured boundary density.
pub fn run_robin(cfg: &ExperimentConfig) -> Result<Report> {
    planar(cfg, true)
}

/// Dirichlet against Neumann for the sub-Laplacian on bounded cylinders
/// `ω × (0, T)`, with `h_t = h_xy`, plus a fiber cross-check of the periodic
/// cylinder at the coarsest spacing.
pub fn run_inequality_heisenberg(cfg: &ExperimentConfig) -> Result<Report> {
    let fams = families(cfg)?;
    let s = &cfg.solver;
    let t_len = cfg.domain.t_len;
    let mut jobs = Vec::new();
    for (fi, f) in fams.iter().enumerate() {
        for li in 0..f.levels.len() {
            jobs.push((fi, Some(li), None));
        }
        for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
            jobs.push((fi, None, Some(bc)));
        }
    }
    enum Out {
        Level(Level),
        Fiber(FiberCheck),
    }
    let outs = map_ordered(&jobs, |(fi, li, bc)| -> Result<Out> {
        let f = &fams[*fi];
        match (li, bc) {
            (Some(li), _) => {
                let base = &f.levels[*li];
                let d = extrude(base, t_len, base.h(), TTopology::Bounded)?;
                let dop = assemble_heisenberg(&d, &BoundaryCondition::Dirichlet)?;
                let nop = assemble_heisenberg(&d, &BoundaryCondition::Neumann)?;
                Ok(Out::Level(solve_level(base.h(), &dop, &nop, s)?))
            }
            (None, Some(bc)) => Ok(Out::Fiber(fiber_check(
                &f.label,
                &f.levels[0],
                t_len,
                bc,
                s.eigenpairs(),
                s,
            )?)),
            (None, None) => unreachable!("every job has a level or a boundary condition"),
        }
    });
    let mut outs = outs.into_iter();
    let mut runs = Vec::new();
    for f in &fams {
        let mut levels = Vec::new();
        let mut fiber = Vec::new();
        for _ in 0..f.levels.len() + 2 {
            match outs.next().expect("one output per job")? {
                Out::Level(l) => levels.push(l),
                Out::Fiber(c) => fiber.push(c),
            }
        }
        runs.push(InequalityReport {
            label: format!("{} x (0,{t_len})", f.label),
            shape: f.shape,
            b: None,
            bc: "neumann".into(),
            j_max: s.j_max,
            m: s.eigenpairs(),
            gaps: gap_verdicts(&levels, s.j_max),
            levels,
            counting: Vec::new(),
            margins: Vec::new(),
            sigma_integral: Vec::new(),
            robin_average: Vec::new(),
            fiber,
        });
    }
    Ok(finish(cfg, runs))
}
