//! Report emission: JSON dump, CSV tables and SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::EmitFormat;
use crate::error::{HarnessError, Result};
use crate::harness::{InequalityReport, Report, ReportBody};
use crate::io;

/// Serde adapter writing non-finite floats as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }

    /// The same for `Vec<f64>`.
    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(Deserialize)]
        struct Item(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            struct Item<'a>(&'a f64);
            impl serde::Serialize for Item<'_> {
                fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                    super::serialize(self.0, s)
                }
            }
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&Item(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Item>::deserialize(d)?
                .into_iter()
                .map(|i| i.0)
                .collect())
        }
    }
}

/// Base name of the emitted files.
pub fn stem(report: &Report) -> String {
    report.kind.name().replace('-', "_")
}

/// Writes `report` in each requested format under `dir` and returns the
/// written paths. Output is a function of the report alone.
pub fn emit_report(report: &Report, dir: &Path, formats: &[EmitFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let stem = stem(report);
    let mut out = Vec::new();
    let mut formats = formats.to_vec();
    formats.sort_by_key(|f| *f as u8);
    formats.dedup();
    for f in formats {
        match f {
            EmitFormat::Json => {
                let p = dir.join(format!("{stem}.json"));
                io::write_json(&p, report)?;
                out.push(p);
            }
            EmitFormat::Csv => {
                let p = dir.join(format!("{stem}.csv"));
                write_csv(&p, report)?;
                out.push(p);
                let c = dir.join(format!("{stem}_checks.csv"));
                write_checks(&c, report)?;
                out.push(c);
            }
            EmitFormat::Svg => {
                if let ReportBody::Inequality(runs) = &report.body {
                    for (i, run) in runs.iter().enumerate() {
                        let p = dir.join(format!("{stem}_{i}_gaps.svg"));
                        write_text(&p, &gap_plot(run))?;
                        out.push(p);
                        let p = dir.join(format!("{stem}_{i}_convergence.svg"));
                        write_text(&p, &convergence_plot(run))?;
                        out.push(p);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[derive(Serialize)]
struct GapRow<'a> {
    run: usize,
    label: &'a str,
    b: Option<f64>,
    h: f64,
    j: usize,
    lambda_d: String,
    lambda_other_next: String,
    gap: String,
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// Main table. Inequality reports give one row per `(h, j)` for each run;
/// other kinds list their measured rows.
fn write_csv(path: &Path, report: &Report) -> Result<()> {
    let file = io::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    match &report.body {
        ReportBody::Inequality(runs) => {
            for (i, run) in runs.iter().enumerate() {
                for lvl in &run.levels {
                    for j in 1..=run.j_max {
                        w.serialize(GapRow {
                            run: i,
                            label: &run.label,
                            b: run.b,
                            h: lvl.h,
                            j,
                            lambda_d: num(lvl.dirichlet.get(j - 1).copied()),
                            lambda_other_next: num(lvl.other.get(j).copied()),
                            gap: num(lvl.gaps.get(j - 1).copied()),
                        })?;
                    }
                }
            }
        }
        ReportBody::Replay(runs) => {
            w.write_record([
                "label",
                "k",
                "j",
                "h",
                "lambda_j",
                "tau",
                "defect",
                "rayleigh_max",
                "excess",
                "gram_min",
            ])?;
            for run in runs {
                for l in &run.levels {
                    w.write_record([
                        run.label.clone(),
                        run.k.to_string(),
                        run.j.to_string(),
                        format!("{:e}", l.h),
                        format!("{:e}", l.lambda_j),
                        format!("{:e}", l.tau),
                        format!("{:e}", l.defect),
                        format!("{:e}", l.rayleigh_max),
                        format!("{:e}", l.excess),
                        format!("{:e}", l.gram_min),
                    ])?;
                }
            }
        }
        ReportBody::Fiber(rows) => {
            w.write_record(["label", "h", "bc", "index", "full", "fiber_union"])?;
            for f in rows {
                for (i, (a, b)) in f.full.iter().zip(&f.union).enumerate() {
                    w.write_record([
                        f.label.clone(),
                        format!("{:e}", f.h),
                        f.bc.clone(),
                        (i + 1).to_string(),
                        format!("{a:e}"),
                        format!("{b:e}"),
                    ])?;
                }
            }
        }
        ReportBody::Identities(r) => {
            w.write_record(["identity", "b", "k", "detail", "value", "bound"])?;
            for row in &r.lemma {
                w.write_record([
                    "lemma".into(),
                    row.b.to_string(),
                    row.k.to_string(),
                    format!("z=({} {})", row.z[0], row.z[1]),
                    format!("{:e}", row.normalized_residual),
                    format!("{:e}", row.bound),
                ])?;
            }
            for row in &r.scans {
                w.write_record([
                    "deficit-mean".into(),
                    row.b.to_string(),
                    row.k.to_string(),
                    row.label.clone(),
                    format!("{:e}", row.normalized_integral),
                    format!("{:e}", row.bound),
                ])?;
            }
            for row in &r.reproducing {
                w.write_record([
                    "reproducing".into(),
                    row.b.to_string(),
                    row.k.to_string(),
                    format!("pairs={}", row.pairs),
                    format!("{:e}", row.max_error),
                    format!("{:e}", row.bound),
                ])?;
            }
            for row in &r.products {
                w.write_record([
                    "product".into(),
                    format!("{:?}", row.b),
                    format!("{:?}", row.k),
                    format!("energy={}", row.total_energy),
                    format!("{:e}", row.max_error),
                    format!("{:e}", row.bound),
                ])?;
            }
            for row in &r.robin {
                w.write_record([
                    "robin-average".into(),
                    row.b.to_string(),
                    row.k.to_string(),
                    row.label.clone(),
                    format!("{:e}", row.relative_error),
                    format!("{:e}", row.bound),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

fn write_checks(path: &Path, report: &Report) -> Result<()> {
    let file = io::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["name", "value", "relation", "bound", "passed"])?;
    for c in &report.checks {
        let rel = serde_json::to_value(c.relation)?;
        w.write_record([
            c.name.clone(),
            format!("{:e}", c.value),
            rel.as_str().unwrap_or_default().to_string(),
            format!("{:e}", c.bound),
            c.passed.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Minimal line plot; `log_x` plots `log₂ x`.
fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log2() } else { x };
    let pts = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(tx(x));
        x1 = x1.max(tx(x));
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (tx(x) - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        W / 2.0,
        H - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y:.2}" text-anchor="end" font-size="10">{v:.4}</text>"#,
            PAD - 4.0
        );
    }
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            W - PAD + 4.0,
            PAD + 14.0 * i as f64,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn gap_plot(run: &InequalityReport) -> String {
    let series: Vec<Series> = run
        .levels
        .iter()
        .map(|l| Series {
            name: format!("h={}", l.h),
            points: l
                .gaps
                .iter()
                .enumerate()
                .map(|(j, g)| ((j + 1) as f64, *g))
                .collect(),
        })
        .collect();
    line_plot(
        &format!("{}: gap vs j", run.label),
        "j",
        "gap",
        &series,
        false,
    )
}

fn convergence_plot(run: &InequalityReport) -> String {
    let series: Vec<Series> = run
        .gaps
        .iter()
        .map(|g| Series {
            name: format!("j={}", g.j),
            points: run
                .levels
                .iter()
                .map(|l| l.h)
                .zip(g.gaps.iter().copied())
                .collect(),
        })
        .collect();
    line_plot(
        &format!("{}: gap vs h", run.label),
        "log2 h",
        "gap",
        &series,
        true,
    )
}
