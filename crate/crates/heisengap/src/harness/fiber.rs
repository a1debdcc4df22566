use heisengap_core::eigen::{dense_reference, lowest_with, DENSE_LIMIT};
use heisengap_core::geometry::{extrude, GridDomain2D, TTopology};
use heisengap_core::operators::{assemble_heisenberg, fiber_reduce, BoundaryCondition};
use serde::{Deserialize, Serialize};

use super::{families, Check, Report, ReportBody};
use crate::config::{ExperimentConfig, SolverConfig};
use crate::error::Result;
use crate::pool::map_ordered;
use crate::report::float;

/// Full periodic spectrum against the union of its fiber spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberCheck {
    pub label: String,
    pub h: f64,
    pub nt: usize,
    pub bc: String,
    pub dim: usize,
    pub full: Vec<f64>,
    pub union: Vec<f64>,
    /// `max |λ_i − μ_i| / |λ_m|`.
    #[serde(with = "float")]
    pub max_rel_mismatch: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Compares the lowest `m` eigenvalues of the sub-Laplacian on the periodic
/// extrusion of `base` with the lowest `m` of the fiber union.
pub fn fiber_check(
    label: &str,
    base: &GridDomain2D,
    t_len: f64,
    bc: &BoundaryCondition,
    m: usize,
    s: &SolverConfig,
) -> Result<FiberCheck> {
    let d = extrude(base, t_len, base.h(), TTopology::Periodic)?;
    let op = assemble_heisenberg(&d, bc)?;
    let full = lowest_with(op.matrix(), m, s.tol, s.seed, s.inner)?.eigenvalues;
    let fam = fiber_reduce(&d, bc)?;
    let mut union = Vec::new();
    for f in &fam.fibers {
        let n = f.operator.dim();
        if n <= DENSE_LIMIT {
            union.extend(dense_reference(&f.operator)?.values);
        } else {
            union.extend(
                lowest_with(f.operator.matrix(), m.min(n / 4), s.tol, s.seed, s.inner)?.eigenvalues,
            );
        }
    }
    union.sort_by(f64::total_cmp);
    union.truncate(m);
    let scale = full.last().map_or(1.0, |v| v.abs()).max(f64::MIN_POSITIVE);
    let max_rel_mismatch = full
        .iter()
        .zip(&union)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    let bound = 10.0 * s.tol;
    Ok(FiberCheck {
        label: label.to_string(),
        h: base.h(),
        nt: d.dims().2,
        bc: bc.name().to_string(),
        dim: op.dim(),
        full,
        union,
        max_rel_mismatch,
        bound,
        passed: max_rel_mismatch <= bound,
    })
}

pub(crate) fn fiber_check_entry(c: &FiberCheck) -> Check {
    Check::at_most(
        format!("{} h={} {}: fiber union mismatch", c.label, c.h, c.bc),
        c.max_rel_mismatch,
        c.bound,
    )
}

pub fn run_fiber_check(cfg: &ExperimentConfig) -> Result<Report> {
    let fams = families(cfg)?;
    let m = cfg.solver.eigenpairs();
    let mut jobs = Vec::new();
    for f in &fams {
        for d in &f.levels {
            for bc in [BoundaryCondition::Neumann, BoundaryCondition::Dirichlet] {
                jobs.push((f.label.as_str(), d, bc));
            }
        }
    }
    let rows = map_ordered(&jobs, |(label, d, bc)| {
        fiber_check(label, d, cfg.domain.t_len, bc, m, &cfg.solver)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let checks = rows.iter().map(fiber_check_entry).collect();
    Ok(Report::new(
        cfg,
        ReportBody::Fiber(rows),
        checks,
        Vec::new(),
    ))
}
