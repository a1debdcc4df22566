//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use heisengap::config::{shape_suite, EmitFormat, ExperimentConfig, ExperimentKind, SigmaSpec};
use heisengap::harness::{run, InequalityReport, Report, ReportBody, Verdict};
use heisengap::report::emit_report;
use heisengap_core::eigen::{dense_reference, lowest};
use heisengap_core::extrapolate::observed_order;
use heisengap_core::geometry::{make_shape, Shape};
use heisengap_core::operators::{assemble_landau2d, BoundaryCondition};
use heisengap_core::special::{gauge, kernel, kernel_value, LandauParams};
use heisengap_core::C64;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_cfg(cfg: &ExperimentConfig) -> Result<Report, String> {
    run(cfg).map_err(|e| format!("{} run failed: {e}", cfg.kind.name()))
}

fn inequality(r: &Report) -> Result<&[InequalityReport], String> {
    match &r.body {
        ReportBody::Inequality(v) => Ok(v),
        _ => Err("not an inequality report".into()),
    }
}

fn failed_checks(r: &Report) -> Vec<String> {
    r.failures()
        .map(|c| format!("{} = {:e} (bound {:e})", c.name, c.value, c.bound))
        .collect()
}

fn identity_report() -> Result<(Report, Duration), String> {
    let t = Instant::now();
    let r = run_cfg(&ExperimentConfig::default_for(ExperimentKind::Identities))?;
    Ok((r, t.elapsed()))
}

/// Pointwise lemma on 25 points for every (B, k), within the time budget.
fn c1(r: &Report, elapsed: Duration) -> Outcome {
    let ReportBody::Identities(id) = &r.body else {
        return Err("not an identity report".into());
    };
    let mut worst: f64 = 0.0;
    for b in [0.5, 1.0, 2.0] {
        for k in 1..=3 {
            let rows: Vec<_> = id.lemma.iter().filter(|x| x.b == b && x.k == k).collect();
            ensure(rows.len() == 25, || {
                format!("B={b} k={k}: {} points", rows.len())
            })?;
            for x in rows {
                worst = worst.max(x.normalized_residual);
            }
        }
    }
    ensure(worst <= 1e-6, || {
        format!("normalized residual {worst:e} > 1e-6")
    })?;
    ensure(elapsed.as_secs_f64() <= 120.0, || {
        format!("suite took {elapsed:?}")
    })?;
    Ok(format!(
        "max normalized residual {worst:.2e}, suite {:.1} s",
        elapsed.as_secs_f64()
    ))
}

/// Mean-zero deficit and non-empty admissible set on disk and square.
fn c2(r: &Report) -> Outcome {
    let ReportBody::Identities(id) = &r.body else {
        return Err("not an identity report".into());
    };
    ensure(id.scans.iter().any(|s| s.label.starts_with("disk")), || {
        "no disk scan".into()
    })?;
    ensure(
        id.scans.iter().any(|s| s.label.starts_with("square")),
        || "no square scan".into(),
    )?;
    ensure(id.scans.len() == 18, || format!("{} scans", id.scans.len()))?;
    let mut worst: f64 = 0.0;
    let mut min_frac: f64 = 1.0;
    for s in &id.scans {
        worst = worst.max(s.normalized_integral.abs());
        min_frac = min_frac.min(s.admissible_fraction);
    }
    ensure(worst <= 1e-4, || format!("scan mean {worst:e}"))?;
    ensure(min_frac >= 0.01, || {
        format!("admissible fraction {min_frac}")
    })?;
    Ok(format!(
        "max |mean| {worst:.2e}, min admissible fraction {min_frac:.3}"
    ))
}

/// `(D − BA)P` by fourth-order central differences of `P`.
fn fd_magnetic_gradient(p: &LandauParams, z: [f64; 2], zp: [f64; 2], e: f64) -> [C64; 2] {
    let mut g = [C64::new(0.0, 0.0); 2];
    for (axis, slot) in g.iter_mut().enumerate() {
        let at = |s: f64| {
            let mut q = z;
            q[axis] += s * e;
            kernel_value(p, q, zp)
        };
        let d = (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * e);
        let a = gauge(z)[axis];
        *slot = C64::new(0.0, -1.0) * d - kernel_value(p, z, zp) * (p.b() * a);
    }
    g
}

/// Max over interior nodes of `|A P − B(2k−1) P|`, relative to `B(2k−1) max|P|`.
fn eigen_residual(p: &LandauParams, zp: [f64; 2], h: f64) -> Result<f64, String> {
    let d = make_shape(Shape::Square { side: 2.0 }, h).map_err(|e| e.to_string())?;
    let op =
        assemble_landau2d(p.b(), &d, &BoundaryCondition::Neumann).map_err(|e| e.to_string())?;
    let u: Vec<C64> = op
        .nodes()
        .iter()
        .map(|&n| kernel_value(p, d.point(n), zp))
        .collect();
    let au = op.apply(&u);
    let interior: std::collections::HashSet<usize> = d.interior_nodes().into_iter().collect();
    let scale = p.energy() * u.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (i, n) in op.nodes().iter().enumerate() {
        if interior.contains(n) {
            worst = worst.max((au[i] - u[i] * p.energy()).norm() / scale);
        }
    }
    Ok(worst)
}

/// Reproducing property, analytic gradient, discrete eigen-equation.
fn c3(r: &Report) -> Outcome {
    let ReportBody::Identities(id) = &r.body else {
        return Err("not an identity report".into());
    };
    let tail = r.config.quadrature.tail_tol;
    let repro = id
        .reproducing
        .iter()
        .map(|x| x.max_error)
        .fold(0.0, f64::max);
    ensure(!id.reproducing.is_empty() && repro <= 10.0 * tail, || {
        format!("reproducing error {repro:e}")
    })?;

    let mut grad: f64 = 0.0;
    let pts = [[0.3, -0.2], [-0.7, 0.45], [1.1, 0.9]];
    for b in [0.5, 1.0, 2.0] {
        for k in 1..=3 {
            let p = LandauParams::new(b, k).map_err(|e| e.to_string())?;
            for z in pts {
                let zp = [0.1, 0.25];
                let a = kernel(&p, z, zp).magnetic_gradient;
                let f = fd_magnetic_gradient(&p, z, zp, 1e-3);
                let n = (a[0].norm_sqr() + a[1].norm_sqr())
                    .sqrt()
                    .max(p.diagonal() * p.b().sqrt() * 1e-3);
                let e = ((a[0] - f[0]).norm_sqr() + (a[1] - f[1]).norm_sqr()).sqrt() / n;
                grad = grad.max(e);
            }
        }
    }
    ensure(grad <= 1e-6, || format!("gradient mismatch {grad:e}"))?;

    let p = LandauParams::new(1.0, 2).map_err(|e| e.to_string())?;
    let r1 = eigen_residual(&p, [0.1, -0.2], 1.0 / 16.0)?;
    let r2 = eigen_residual(&p, [0.1, -0.2], 1.0 / 32.0)?;
    let order = (r1 / r2).log2();
    ensure(order >= 1.8, || {
        format!("eigen-equation residual {r1:e} -> {r2:e}, order {order:.2}")
    })?;
    Ok(format!(
        "reproducing {repro:.1e}, gradient {grad:.1e}, eigen residual {r1:.2e} -> {r2:.2e} (order {order:.2})"
    ))
}

/// Iterative solver against dense diagonalization on coarse grids.
fn c4() -> Outcome {
    let m = 8;
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for shape in shape_suite() {
        let d = make_shape(shape, 0.25).map_err(|e| e.to_string())?;
        for b in [0.0, 1.0] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let op = assemble_landau2d(b, &d, &bc).map_err(|e| e.to_string())?;
                ensure(op.dim() <= 400, || format!("{shape:?} dim {}", op.dim()))?;
                let it = lowest(&op, m, 1e-10, 3)
                    .map_err(|e| e.to_string())?
                    .eigenvalues;
                let dense = dense_reference(&op).map_err(|e| e.to_string())?.values;
                for (a, r) in it.iter().zip(&dense) {
                    worst = worst.max((a - r).abs() / r.abs().max(1.0));
                }
                cases += 1;
            }
        }
    }
    ensure(worst <= 1e-9, || format!("relative mismatch {worst:e}"))?;
    Ok(format!(
        "{cases} operators, max relative mismatch {worst:.2e}"
    ))
}

/// Unit-square Dirichlet Laplacian against `π²(p² + q²)`.
fn c5() -> Outcome {
    let exact = [2.0 * PI * PI, 5.0 * PI * PI, 5.0 * PI * PI, 8.0 * PI * PI];
    let mut levels = Vec::new();
    for n in [16.0, 32.0, 64.0] {
        let d = make_shape(Shape::Square { side: 1.0 }, 1.0 / n).map_err(|e| e.to_string())?;
        let op =
            assemble_landau2d(0.0, &d, &BoundaryCondition::Dirichlet).map_err(|e| e.to_string())?;
        levels.push(
            lowest(&op, 4, 1e-10, 1)
                .map_err(|e| e.to_string())?
                .eigenvalues,
        );
    }
    let fine = &levels[2];
    let rel = fine
        .iter()
        .zip(&exact)
        .map(|(a, e)| (a - e).abs() / e)
        .fold(0.0, f64::max);
    ensure(rel <= 0.01, || {
        format!("relative error {rel:e} at h = 1/64")
    })?;
    let mut min_order = f64::INFINITY;
    for (i, ((a, b), c)) in levels[0].iter().zip(&levels[1]).zip(&levels[2]).enumerate() {
        let o = observed_order([*a, *b, *c])
            .ok_or_else(|| format!("no monotone convergence for eigenvalue {}", i + 1))?;
        min_order = min_order.min(o);
    }
    ensure(min_order >= 1.9, || {
        format!("observed order {min_order:.3}")
    })?;
    Ok(format!(
        "max relative error {rel:.2e} at h=1/64, min observed order {min_order:.3}"
    ))
}

/// Periodic 8×8×8 cylinder against the fiber union.
fn c6() -> Outcome {
    let cfg = ExperimentConfig::default_for(ExperimentKind::FiberCheck);
    let r = run_cfg(&cfg)?;
    let ReportBody::Fiber(rows) = &r.body else {
        return Err("not a fiber report".into());
    };
    let n = rows
        .iter()
        .find(|f| f.bc == "neumann")
        .ok_or("no Neumann row")?;
    ensure(n.dim == 512 && n.nt == 8, || {
        format!("cylinder dim {} nt {}", n.dim, n.nt)
    })?;
    let worst = rows.iter().map(|f| f.max_rel_mismatch).fold(0.0, f64::max);
    ensure(worst <= 10.0 * cfg.solver.tol, || {
        format!("mismatch {worst:e}")
    })?;
    Ok(format!(
        "{} spectra, max relative mismatch {worst:.2e}",
        rows.len()
    ))
}

/// Interval counting on the planar suite.
fn c7() -> Outcome {
    let cfg = ExperimentConfig::default_for(ExperimentKind::Inequality2d);
    let r = run_cfg(&cfg)?;
    let runs = inequality(&r)?;
    ensure(runs.len() == 15, || format!("{} runs", runs.len()))?;
    let mut counted = 0;
    let mut margins = 0;
    for run in runs {
        let tag = format!("{} B={:?}", run.label, run.b);
        ensure(run.levels.iter().all(|l| l.solved()), || {
            format!("{tag}: unsolved level")
        })?;
        for c in run.counting.iter().filter(|c| c.applicable) {
            ensure(c.passed, || {
                format!("{tag} h={} k={}: counting failed", c.h, c.k)
            })?;
            counted += 1;
        }
        for k in [1, 2] {
            ensure(
                run.counting
                    .iter()
                    .filter(|c| c.k == k && c.applicable)
                    .count()
                    == run.levels.len(),
                || format!("{tag} k={k}: level B(2k-1) above the computed spectrum"),
            )?;
        }
        for m in run.margins.iter().filter(|m| m.j <= 8) {
            ensure(m.verdict == Verdict::VerifiedStrict, || {
                format!("{tag} k={} j={}: margin {:?}", m.k, m.j, m.verdict)
            })?;
            margins += 1;
        }
    }
    let failed = failed_checks(&r);
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!(
        "{counted} counts at every h, {margins} strict margins"
    ))
}

/// Sub-Laplacian on two boxes and an L-shaped cylinder.
fn c8() -> Outcome {
    let mut cube = ExperimentConfig::default_for(ExperimentKind::InequalityHeis);
    cube.domain.shapes = vec![Shape::Square { side: 1.0 }];
    cube.domain.h = vec![1.0 / 8.0, 1.0 / 16.0];
    let rest = ExperimentConfig::default_for(ExperimentKind::InequalityHeis);
    let mut runs = Vec::new();
    let mut reports = Vec::new();
    for cfg in [&cube, &rest] {
        reports.push(run_cfg(cfg)?);
    }
    for r in &reports {
        runs.extend(inequality(r)?.iter().cloned());
        let failed = failed_checks(r);
        ensure(failed.is_empty(), || failed.join("; "))?;
    }
    ensure(runs.len() == 3, || format!("{} domains", runs.len()))?;
    let mut min_gap = f64::INFINITY;
    for run in &runs {
        for l in &run.levels {
            ensure(l.solved(), || format!("{} h={}: unsolved", run.label, l.h))?;
            for j in 1..=5 {
                let (d, n) = (l.dirichlet[j - 1], l.other[j]);
                ensure(n < d, || {
                    format!("{} h={} j={j}: {n} !< {d}", run.label, l.h)
                })?;
                min_gap = min_gap.min(d - n);
            }
        }
        for g in run.gaps.iter().filter(|g| g.j <= 3) {
            ensure(g.verdict == Verdict::VerifiedStrict, || {
                format!("{} j={}: {:?}", run.label, g.j, g.verdict)
            })?;
        }
    }
    Ok(format!(
        "3 domains, min discrete gap {min_gap:.3}, j <= 3 strict"
    ))
}

/// Trial-space replay on the unit cube.
fn c9() -> Outcome {
    let cfg = ExperimentConfig::default_for(ExperimentKind::Replay);
    let r = run_cfg(&cfg)?;
    let ReportBody::Replay(runs) = &r.body else {
        return Err("not a replay report".into());
    };
    let mut parts = Vec::new();
    for run in runs {
        ensure(run.defect_shrink >= 1.7, || {
            format!("k={} defect shrink {}", run.k, run.defect_shrink)
        })?;
        ensure(run.excess_shrink >= 1.7, || {
            format!("k={} excess shrink {}", run.k, run.excess_shrink)
        })?;
        let last = run.levels.last().ok_or("empty ladder")?;
        ensure(last.rayleigh_max <= last.lambda_j * 1.1, || {
            format!(
                "k={} max RQ {} vs λ_j {}",
                run.k, last.rayleigh_max, last.lambda_j
            )
        })?;
        parts.push(format!(
            "k={} j={}: defect x{:.2}, excess x{:.2}, δ={:.1e}",
            run.k, run.j, run.defect_shrink, run.excess_shrink, last.excess
        ));
    }
    let failed = failed_checks(&r);
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(parts.join("; "))
}

/// Robin: zero density, negative density, boundary average identity.
fn c10() -> Outcome {
    let mut neu = ExperimentConfig::default_for(ExperimentKind::Inequality2d);
    neu.domain.shapes = vec![Shape::Square { side: 3.0 }, Shape::Lshape { side: 3.0 }];
    neu.domain.h = vec![1.0 / 8.0, 1.0 / 16.0];
    neu.physics.b = vec![1.0];
    let mut zero = neu.clone();
    zero.kind = ExperimentKind::Robin;
    zero.physics.sigma = Some(SigmaSpec::Constant(0.0));
    let a = run_cfg(&neu)?;
    let b = run_cfg(&zero)?;
    for (x, y) in inequality(&a)?.iter().zip(inequality(&b)?) {
        for (lx, ly) in x.levels.iter().zip(&y.levels) {
            let same = lx
                .dirichlet
                .iter()
                .map(|v| v.to_bits())
                .eq(ly.dirichlet.iter().map(|v| v.to_bits()))
                && lx
                    .other
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(ly.other.iter().map(|v| v.to_bits()));
            ensure(same, || {
                format!("{} h={}: σ=0 differs from Neumann", x.label, lx.h)
            })?;
        }
    }
    for s in [Shape::Square { side: 3.0 }, Shape::Lshape { side: 3.0 }] {
        let d = make_shape(s, 0.125).map_err(|e| e.to_string())?;
        let n =
            assemble_landau2d(1.0, &d, &BoundaryCondition::Neumann).map_err(|e| e.to_string())?;
        let z = assemble_landau2d(
            1.0,
            &d,
            &BoundaryCondition::Robin(vec![0.0; d.boundary_segments().len()]),
        )
        .map_err(|e| e.to_string())?;
        ensure(n.matrix() == z.matrix(), || {
            format!("{s:?}: σ=0 matrix differs")
        })?;
    }

    let neg = run_cfg(&ExperimentConfig::default_for(ExperimentKind::Robin))?;
    let mut counts = 0;
    let mut avg: f64 = 0.0;
    for run in inequality(&neg)? {
        for c in run.counting.iter().filter(|c| c.applicable) {
            ensure(c.passed, || {
                format!("{} h={} k={}: counting failed", run.label, c.h, c.k)
            })?;
            counts += 1;
        }
        for ra in run.robin_average.iter().filter(|r| r.raster_exact) {
            avg = avg.max(ra.relative_error);
        }
    }
    ensure(avg <= 1e-4, || format!("boundary average error {avg:e}"))?;
    let failed = failed_checks(&neg);
    ensure(failed.is_empty(), || failed.join("; "))?;
    Ok(format!(
        "σ=0 bitwise equal, σ=-1 {counts} counts pass, boundary average {avg:.1e}"
    ))
}

/// Identical config and seed give byte-identical JSON.
fn c11() -> Outcome {
    let mut sizes = Vec::new();
    for kind in [ExperimentKind::Replay, ExperimentKind::FiberCheck] {
        let cfg = ExperimentConfig::default_for(kind);
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let r = run_cfg(&cfg)?;
            let files =
                emit_report(&r, dir.path(), &[EmitFormat::Json]).map_err(|e| e.to_string())?;
            bytes.push(std::fs::read(&files[0]).map_err(|e| e.to_string())?);
        }
        ensure(bytes[0] == bytes[1], || {
            format!("{} reports differ", kind.name())
        })?;
        sizes.push(format!("{} {} bytes", kind.name(), bytes[0].len()));
    }
    Ok(sizes.join(", "))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!(
            "{tag} criterion {id:>2} {name}: {detail} [{:.1} s]",
            el.as_secs_f64()
        );
        results.push((id, name, out, el));
    };
    let ident = identity_report();
    let ident_ref = ident.as_ref().map_err(|e| e.clone());
    timed(1, "pointwise kernel lemma", &mut || {
        let (r, el) = ident_ref.clone()?;
        c1(r, *el)
    });
    timed(2, "averaged energy identity", &mut || {
        c2(&ident_ref.clone()?.0)
    });
    timed(3, "kernel oracles", &mut || c3(&ident_ref.clone()?.0));
    timed(4, "eigensolver vs dense", &mut || c4());
    timed(5, "B=0 analytic spectrum", &mut || c5());
    timed(6, "fiber decomposition", &mut || c6());
    timed(7, "planar interval counting", &mut || c7());
    timed(8, "sub-Laplacian inequality", &mut || c8());
    timed(9, "trial-space replay", &mut || c9());
    timed(10, "Robin boundary density", &mut || c10());
    timed(11, "determinism", &mut || c11());
    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!("acceptance: {} criteria, {failed} failed", results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
