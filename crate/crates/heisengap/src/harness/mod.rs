//! Verification experiments and their reports.

mod fiber;
mod identities;
mod inequality;
mod replay;
mod scan;

use heisengap_core::extrapolate::richardson;
use heisengap_core::geometry::{make_shape, GridDomain2D, Shape};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::report::float;

pub use fiber::{fiber_check, run_fiber_check, FiberCheck};
pub use identities::{
    run_identity_suite, IdentityReport, LemmaRow, ProductRow, ReproRow, RobinRow, ScanRow,
};
pub use inequality::{
    run_inequality_2d, run_inequality_heisenberg, run_robin, CountingCheck, CountingMargin,
    GapVerdict, InequalityReport, Level, LevelStatus,
};
pub use replay::{replay_proof, ReplayLevel, ReplayReport, SHRINK_FACTOR};
pub use scan::par_deficit_scan;

/// Margin rule for strict verdicts: extrapolated value above this many
/// error estimates.
pub const MARGIN_FACTOR: f64 = 3.0;

pub const MARGIN_NOTE: &str = "verified-strict means the extrapolated margin exceeds 3x its error \
     estimate; this threshold is a reporting policy, not a property of the continuum problem";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

/// One pass/fail entry of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "float")]
    pub value: f64,
    pub relation: Relation,
    #[serde(with = "float")]
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtMost,
            bound,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::AtLeast,
            bound,
            passed: value >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self {
            name: name.into(),
            value: v,
            relation: Relation::Equal,
            bound: 1.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    VerifiedStrict,
    VerifiedNonstrict,
    Inconclusive,
}

/// Extrapolated value of a quantity measured along the ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "float")]
    pub value: f64,
    #[serde(with = "float")]
    pub error: f64,
    pub order: Option<f64>,
}

impl Estimate {
    pub fn from_ladder(values: &[f64]) -> Self {
        let e = richardson(values);
        Self {
            value: e.value,
            error: e.error,
            order: e.order,
        }
    }
}

/// Verdict on a margin that should be positive in the limit `h → 0`.
pub fn margin_verdict(margins: &[f64], complete: bool) -> (Estimate, Verdict) {
    let est = Estimate::from_ladder(margins);
    let verdict = if !complete || margins.is_empty() || margins.iter().any(|g| !(*g >= 0.0)) {
        Verdict::Inconclusive
    } else if est.value > 0.0 && est.value > MARGIN_FACTOR * est.error {
        Verdict::VerifiedStrict
    } else {
        Verdict::VerifiedNonstrict
    };
    (est, verdict)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "data", rename_all = "kebab-case")]
pub enum ReportBody {
    Identities(IdentityReport),
    Inequality(Vec<InequalityReport>),
    Replay(Vec<ReplayReport>),
    Fiber(Vec<FiberCheck>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub body: ReportBody,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl Report {
    pub(crate) fn new(
        config: &ExperimentConfig,
        body: ReportBody,
        checks: Vec<Check>,
        notes: Vec<String>,
    ) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            tool: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            kind: config.kind,
            config: config.clone(),
            body,
            checks,
            passed,
            notes,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs the experiment selected by `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Identities => run_identity_suite(cfg),
        ExperimentKind::Inequality2d => run_inequality_2d(cfg),
        ExperimentKind::InequalityHeis => run_inequality_heisenberg(cfg),
        ExperimentKind::Robin => run_robin(cfg),
        ExperimentKind::Replay => replay_proof(cfg),
        ExperimentKind::FiberCheck => run_fiber_check(cfg),
    }
}

/// Short human label of a shape.
pub fn shape_label(shape: &Shape) -> String {
    match *shape {
        Shape::Disk { radius } => format!("disk r={radius}"),
        Shape::Square { side } => format!("square {side}"),
        Shape::Rectangle { width, height } => format!("rectangle {width}x{height}"),
        Shape::Annulus { inner, outer } => format!("annulus {inner}-{outer}"),
        Shape::Lshape { side } => format!("lshape {side}"),
    }
}

/// A planar domain family along the ladder.
#[derive(Clone, Debug)]
pub(crate) struct Family {
    pub label: String,
    pub shape: Option<Shape>,
    pub levels: Vec<GridDomain2D>,
}

pub(crate) fn families(cfg: &ExperimentConfig) -> Result<Vec<Family>> {
    if let Some(path) = &cfg.domain.file {
        let d: GridDomain2D = crate::io::read_json(path)?;
        if (d.h() - cfg.domain.h[0]).abs() > 1e-12 * d.h() {
            return Err(crate::HarnessError::Config(format!(
                "domain file spacing {} differs from the configured h {}",
                d.h(),
                cfg.domain.h[0]
            )));
        }
        let label = path
            .file_stem()
            .map_or("file".into(), |s| s.to_string_lossy().into_owned());
        return Ok(vec![Family {
            label,
            shape: None,
            levels: vec![d],
        }]);
    }
    cfg.domain
        .shapes
        .iter()
        .map(|s| {
            let levels = cfg
                .domain
                .h
                .iter()
                .map(|&h| make_shape(*s, h))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(Family {
                label: shape_label(s),
                shape: Some(*s),
                levels,
            })
        })
        .collect()
}

/// `(fine ≤ coarse / factor)` for each halving.
pub(crate) fn shrinks(values: &[f64], factor: f64) -> (f64, bool) {
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for w in values.windows(2) {
        let ratio = if w[1] == 0.0 {
            f64::INFINITY
        } else {
            w[0] / w[1]
        };
        worst = worst.min(ratio);
        ok &= w[1] <= w[0] / factor;
    }
    (worst, ok)
}
