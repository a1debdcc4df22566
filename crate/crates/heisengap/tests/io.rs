use heisengap::config::{EmitFormat, ExperimentConfig, ExperimentKind};
use heisengap::harness::{run, Check, Report};
use heisengap::io::{
    read_deficit, read_json, read_spectrum, write_deficit, write_json, write_spectrum,
};
use heisengap::report::emit_report;
use heisengap_core::averaging::deficit_scan;
use heisengap_core::averaging::scan_rule;
use heisengap_core::eigen::lowest;
use heisengap_core::geometry::{make_shape, Shape};
use heisengap_core::operators::{assemble_landau2d, BoundaryCondition};
use heisengap_core::special::LandauParams;
use quick_xml::events::Event;
use quick_xml::Reader;

fn small_inequality() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_for(ExperimentKind::Inequality2d);
    cfg.domain.shapes = vec![Shape::Square { side: 3.0 }];
    cfg.domain.h = vec![0.25, 0.125];
    cfg.physics.b = vec![1.0];
    cfg
}

#[test]
fn spectrum_round_trip_is_bit_exact() {
    let d = make_shape(Shape::Disk { radius: 1.0 }, 0.125).unwrap();
    let op = assemble_landau2d(1.0, &d, &BoundaryCondition::Dirichlet).unwrap();
    let s = lowest(&op, 4, 1e-9, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("disk.json");
    write_spectrum(&p, &s).unwrap();
    assert!(dir.path().join("disk.eigv").exists());
    assert_eq!(read_spectrum(&p).unwrap(), s);
}

#[test]
fn truncated_eigenvector_file_is_rejected() {
    let d = make_shape(Shape::Square { side: 1.0 }, 0.125).unwrap();
    let op = assemble_landau2d(0.0, &d, &BoundaryCondition::Neumann).unwrap();
    let s = lowest(&op, 2, 1e-9, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sq.json");
    write_spectrum(&p, &s).unwrap();
    let bin = dir.path().join("sq.eigv");
    let bytes = std::fs::read(&bin).unwrap();
    std::fs::write(&bin, &bytes[..bytes.len() - 8]).unwrap();
    assert!(read_spectrum(&p).is_err());
}

#[test]
fn deficit_csv_round_trip() {
    let p = LandauParams::new(1.0, 1).unwrap();
    let d = make_shape(Shape::Square { side: 1.0 }, 0.125).unwrap();
    let rule = scan_rule(&d, 4.0, 0.5).unwrap();
    let map = deficit_scan(&p, &d, &rule).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("deficit.csv");
    write_deficit(&path, &map).unwrap();
    let (rows, header) = read_deficit(&path).unwrap();
    assert_eq!(rows.len(), map.samples.len());
    assert_eq!(header.samples, rows.len());
    for (r, s) in rows.iter().zip(&map.samples) {
        assert_eq!((r.z_x, r.z_y, r.r), (s.z[0], s.z[1], s.r));
    }
    assert_eq!(header.domain_sha256.len(), 64);
}

#[test]
fn non_finite_check_values_round_trip() {
    let checks = vec![
        Check::at_most("nan", f64::NAN, 1.0),
        Check::at_least("inf", f64::INFINITY, 1.7),
        Check::at_most("-inf", f64::NEG_INFINITY, 0.0),
    ];
    let text = serde_json::to_string(&checks).unwrap();
    assert!(text.contains("\"nan\"") && text.contains("\"inf\"") && text.contains("\"-inf\""));
    let back: Vec<Check> = serde_json::from_str(&text).unwrap();
    assert!(back[0].value.is_nan());
    assert_eq!(back[1].value, f64::INFINITY);
    assert_eq!(back[2].value, f64::NEG_INFINITY);
}

#[test]
fn report_json_round_trips_and_csv_has_one_row_per_h_and_j() {
    let cfg = small_inequality();
    let r = run(&cfg).unwrap();
    assert!(r.passed, "{:?}", r.failures().collect::<Vec<_>>());
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(
        &r,
        dir.path(),
        &[EmitFormat::Svg, EmitFormat::Json, EmitFormat::Csv],
    )
    .unwrap();

    let json = dir.path().join("inequality2d.json");
    let back: Report = read_json(&json).unwrap();
    assert_eq!(back, r);
    let again = dir.path().join("again.json");
    write_json(&again, &back).unwrap();
    assert_eq!(
        std::fs::read(&json).unwrap(),
        std::fs::read(&again).unwrap()
    );

    let mut rd = csv::Reader::from_path(dir.path().join("inequality2d.csv")).unwrap();
    let rows = rd.records().count();
    assert_eq!(rows, cfg.domain.h.len() * cfg.solver.j_max);

    let svgs: Vec<_> = files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .collect();
    assert_eq!(svgs.len(), 2);
    for p in svgs {
        let text = std::fs::read_to_string(p).unwrap();
        let mut reader = Reader::from_str(&text);
        let mut depth = 0i32;
        let mut polylines = 0;
        loop {
            match reader.read_event().unwrap() {
                Event::Start(e) => {
                    depth += 1;
                    assert!(depth > 1 || e.name().as_ref() == b"svg");
                }
                Event::Empty(e) if e.name().as_ref() == b"polyline" => polylines += 1,
                Event::End(_) => depth -= 1,
                Event::Eof => break,
                _ => {}
            }
        }
        assert_eq!(depth, 0);
        assert!(polylines >= 2);
    }
}

#[test]
fn emission_is_byte_deterministic() {
    let cfg = ExperimentConfig::default_for(ExperimentKind::FiberCheck);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = emit_report(
        &run(&cfg).unwrap(),
        a.path(),
        &[EmitFormat::Json, EmitFormat::Csv],
    )
    .unwrap();
    let fb = emit_report(
        &run(&cfg).unwrap(),
        b.path(),
        &[EmitFormat::Json, EmitFormat::Csv],
    )
    .unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(
            std::fs::read(x).unwrap(),
            std::fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}
