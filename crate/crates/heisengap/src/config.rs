//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use heisengap_core::eigen::InnerSolver;
use heisengap_core::geometry::{Shape, TTopology};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Identities,
    Inequality2d,
    InequalityHeis,
    Robin,
    Replay,
    FiberCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::Inequality2d => "inequality2d",
            Self::InequalityHeis => "inequality-heis",
            Self::Robin => "robin",
            Self::Replay => "replay",
            Self::FiberCheck => "fiber-check",
        }
    }

    fn is_3d(self) -> bool {
        matches!(self, Self::InequalityHeis | Self::Replay | Self::FiberCheck)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Json,
    Csv,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// Planar shapes (cross-sections in 3D), run in order.
    #[serde(default)]
    pub shapes: Vec<Shape>,
    /// Domain JSON file used in place of `shapes`; its spacing is the only level.
    #[serde(default)]
    pub file: Option<PathBuf>,
    /// Spacing ladder, coarsest first. In 3D `h_t = h_xy`.
    pub h: Vec<f64>,
    #[serde(default = "default_t_len")]
    pub t_len: f64,
    #[serde(default = "default_topology")]
    pub topology: TTopology,
}

fn default_t_len() -> f64 {
    1.0
}

fn default_topology() -> TTopology {
    TTopology::Bounded
}

/// Boundary density for Robin runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaSpec {
    Constant(f64),
    /// One value per boundary segment.
    Segments(Vec<f64>),
}

impl SigmaSpec {
    pub fn values(&self, segments: usize) -> Result<Vec<f64>> {
        match self {
            Self::Constant(c) => Ok(vec![*c; segments]),
            Self::Segments(v) if v.len() == segments => Ok(v.clone()),
            Self::Segments(v) => Err(HarnessError::Config(format!(
                "{} sigma values for {segments} boundary segments",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    /// Field strengths (2D runs and identities).
    #[serde(default)]
    pub b: Vec<f64>,
    /// Landau indices.
    #[serde(default)]
    pub k: Vec<u32>,
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Eigenpairs per solve; defaults to `j_max + 2`.
    #[serde(default)]
    pub m: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    pub j_max: usize,
    #[serde(default)]
    pub inner: InnerSolver,
}

impl SolverConfig {
    pub fn eigenpairs(&self) -> usize {
        self.m.unwrap_or(self.j_max + 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub tail_tol: f64,
    /// Deficit scan step; defaults to `min(0.25/√B, 4h)`.
    #[serde(default)]
    pub scan_step: Option<f64>,
    /// Points per side of the lemma test lattice.
    #[serde(default = "default_lattice")]
    pub lattice: usize,
    /// The lattice covers `[-w, w]²`.
    #[serde(default = "default_half_width")]
    pub lattice_half_width: f64,
    /// Random `(z, z')` pairs per parameter set for the reproducing check.
    #[serde(default = "default_pairs")]
    pub pairs: usize,
}

fn default_lattice() -> usize {
    5
}

fn default_half_width() -> f64 {
    1.0
}

fn default_pairs() -> usize {
    6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayConfig {
    /// Indices `j` whose Dirichlet eigenvalue fixes `τ`.
    pub j: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub emit: Vec<EmitFormat>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub domain: DomainConfig,
    pub physics: PhysicsConfig,
    pub solver: SolverConfig,
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub replay: Option<ReplayConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Planar shape suite.
pub fn shape_suite() -> Vec<Shape> {
    vec![
        Shape::Square { side: 3.0 },
        Shape::Rectangle {
            width: 4.0,
            height: 2.0,
        },
        Shape::Disk { radius: 1.75 },
        Shape::Annulus {
            inner: 0.4,
            outer: 2.0,
        },
        Shape::Lshape { side: 3.0 },
    ]
}

/// Default shape of the given family for an experiment kind.
pub fn named_shape(kind: ExperimentKind, name: &str) -> Option<Shape> {
    let planar = shape_suite();
    let pick = |i: usize| planar[i];
    let shape = match (kind.is_3d(), name) {
        (false, "square") => pick(0),
        (false, "rectangle") => pick(1),
        (false, "disk") => pick(2),
        (false, "annulus") => pick(3),
        (false, "lshape") => pick(4),
        (true, "square") => Shape::Square { side: 1.0 },
        (true, "rectangle") => Shape::Rectangle {
            width: 2.0,
            height: 1.0,
        },
        (true, "disk") => Shape::Disk { radius: 1.0 },
        (true, "annulus") => Shape::Annulus {
            inner: 0.25,
            outer: 1.0,
        },
        (true, "lshape") => Shape::Lshape { side: 2.0 },
        _ => return None,
    };
    Some(shape)
}

fn solver(j_max: usize) -> SolverConfig {
    SolverConfig {
        m: None,
        tol: 1e-9,
        seed: 1,
        j_max,
        inner: InnerSolver::Auto,
    }
}

fn quadrature() -> QuadratureConfig {
    QuadratureConfig {
        tail_tol: 1e-8,
        scan_step: None,
        lattice: default_lattice(),
        lattice_half_width: default_half_width(),
        pairs: default_pairs(),
    }
}

impl ExperimentConfig {
    /// The standard run of each experiment.
    pub fn default_for(kind: ExperimentKind) -> Self {
        let ladder = |ns: &[f64]| ns.iter().map(|n| 1.0 / n).collect::<Vec<_>>();
        let (shapes, h, topology, b, k, j_max) = match kind {
            ExperimentKind::Identities => (
                vec![Shape::Disk { radius: 1.0 }, Shape::Square { side: 2.0 }],
                ladder(&[16.0]),
                TTopology::Bounded,
                vec![0.5, 1.0, 2.0],
                vec![1, 2, 3],
                0,
            ),
            ExperimentKind::Inequality2d => (
                shape_suite(),
                ladder(&[8.0, 16.0, 32.0]),
                TTopology::Bounded,
                vec![0.5, 1.0, 2.0],
                vec![1, 2],
                8,
            ),
            ExperimentKind::InequalityHeis => (
                vec![
                    Shape::Rectangle {
                        width: 2.0,
                        height: 1.0,
                    },
                    Shape::Lshape { side: 2.0 },
                ],
                ladder(&[4.0, 8.0, 16.0]),
                TTopology::Bounded,
                vec![],
                vec![],
                5,
            ),
            ExperimentKind::Robin => (
                vec![
                    Shape::Square { side: 3.0 },
                    Shape::Rectangle {
                        width: 4.0,
                        height: 2.0,
                    },
                    Shape::Lshape { side: 3.0 },
                ],
                ladder(&[8.0, 16.0, 32.0]),
                TTopology::Bounded,
                vec![1.0],
                vec![1, 2],
                8,
            ),
            ExperimentKind::Replay => (
                vec![Shape::Square { side: 1.0 }],
                ladder(&[8.0, 16.0]),
                TTopology::Bounded,
                vec![],
                vec![1, 2],
                1,
            ),
            ExperimentKind::FiberCheck => (
                vec![Shape::Square { side: 0.875 }],
                ladder(&[8.0]),
                TTopology::Periodic,
                vec![],
                vec![],
                10,
            ),
        };
        Self {
            kind,
            domain: DomainConfig {
                shapes,
                file: None,
                h,
                t_len: 1.0,
                topology,
            },
            physics: PhysicsConfig {
                b,
                k,
                sigma: (kind == ExperimentKind::Robin).then_some(SigmaSpec::Constant(-1.0)),
            },
            solver: solver(j_max),
            quadrature: quadrature(),
            replay: (kind == ExperimentKind::Replay).then(|| ReplayConfig { j: vec![1] }),
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let h = &self.domain.h;
        if h.is_empty() {
            return bad("empty h ladder".into());
        }
        if h.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad(format!("spacings must be positive, got {h:?}"));
        }
        for w in h.windows(2) {
            if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
                return bad(format!("h ladder must halve at each level, got {h:?}"));
            }
        }
        if self.domain.shapes.is_empty() && self.domain.file.is_none() {
            return bad("no shapes and no domain file".into());
        }
        if self.domain.file.is_some() && h.len() != 1 {
            return bad("a domain file fixes a single level".into());
        }
        let s = &self.solver;
        if !(1e-12..=1e-4).contains(&s.tol) {
            return bad(format!("solver tolerance {} outside [1e-12, 1e-4]", s.tol));
        }
        let q = &self.quadrature;
        if !(q.tail_tol > 0.0 && q.tail_tol <= 1e-3) {
            return bad(format!("tail_tol {} outside (0, 1e-3]", q.tail_tol));
        }
        if let Some(step) = q.scan_step {
            if !(step > 0.0 && step.is_finite()) {
                return bad(format!("scan step {step}"));
            }
        }
        if self.physics.k.contains(&0) {
            return bad("Landau index k must be at least 1".into());
        }
        if self.physics.b.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return bad(format!("field strengths {:?}", self.physics.b));
        }
        let needs_b = matches!(
            self.kind,
            ExperimentKind::Identities | ExperimentKind::Inequality2d | ExperimentKind::Robin
        );
        if needs_b && self.physics.b.is_empty() {
            return bad("no field strength given".into());
        }
        let positive_b = matches!(
            self.kind,
            ExperimentKind::Identities | ExperimentKind::Robin
        );
        if positive_b && self.physics.b.contains(&0.0) {
            return bad("this experiment needs B > 0".into());
        }
        let needs_k = matches!(
            self.kind,
            ExperimentKind::Identities | ExperimentKind::Replay | ExperimentKind::Robin
        );
        if needs_k && self.physics.k.is_empty() {
            return bad("no Landau index given".into());
        }
        match self.kind {
            ExperimentKind::Inequality2d
            | ExperimentKind::InequalityHeis
            | ExperimentKind::Robin => {
                if s.j_max == 0 {
                    return bad("j_max must be at least 1".into());
                }
                if s.eigenpairs() < s.j_max + 2 {
                    return bad(format!(
                        "m = {} < j_max + 2 = {}",
                        s.eigenpairs(),
                        s.j_max + 2
                    ));
                }
            }
            _ => {}
        }
        match self.kind {
            ExperimentKind::InequalityHeis | ExperimentKind::Replay
                if self.domain.topology != TTopology::Bounded =>
            {
                return bad("the 3D inequality needs a bounded t-interval".into());
            }
            ExperimentKind::FiberCheck if self.domain.topology != TTopology::Periodic => {
                return bad("the fiber check needs a periodic t-direction".into());
            }
            _ => {}
        }
        if self.kind.is_3d() && !(self.domain.t_len.is_finite() && self.domain.t_len > 0.0) {
            return bad(format!("t_len {}", self.domain.t_len));
        }
        if self.kind == ExperimentKind::Robin && self.physics.sigma.is_none() {
            return bad("Robin run without a boundary density".into());
        }
        if self.kind == ExperimentKind::Replay {
            match &self.replay {
                Some(r) if !r.j.is_empty() && !r.j.contains(&0) => {}
                _ => return bad("replay needs indices j ≥ 1".into()),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        for kind in [
            ExperimentKind::Identities,
            ExperimentKind::Inequality2d,
            ExperimentKind::InequalityHeis,
            ExperimentKind::Robin,
            ExperimentKind::Replay,
            ExperimentKind::FiberCheck,
        ] {
            let cfg = ExperimentConfig::default_for(kind);
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn ladder_must_halve() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Inequality2d);
        cfg.domain.h = vec![0.125, 0.1];
        assert!(matches!(cfg.validate(), Err(HarnessError::Config(_))));
        cfg.domain.h = vec![0.125, 0.0625];
        cfg.validate().unwrap();
    }

    #[test]
    fn eigenpair_count_must_cover_j_max() {
        let mut cfg = ExperimentConfig::default_for(ExperimentKind::Inequality2d);
        cfg.solver.m = Some(cfg.solver.j_max + 1);
        assert!(cfg.validate().is_err());
    }
}
