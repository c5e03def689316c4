use std::fs;
use std::path::Path;

use epshoot::formats::{
    read_match, read_sweep_csv, read_template, template_from_str, write_json, write_sweep_csv, write_template, MatchDoc,
};
use epshoot::CliError;
use epshoot_core::analysis::{convergence_sweep, SweepGrid};
use epshoot_core::shapes::{circle, heart4};
use epshoot_core::{match_templates, KernelFamily, ShootingConfig, Vec2};

#[test]
fn template_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heart.json");
    let t = heart4(24).unwrap();
    write_template(&path, &t).unwrap();
    let back = read_template(&path).unwrap();
    assert_eq!(back.label(), t.label());
    assert_eq!(back.points(), t.points());
}

#[test]
fn hand_written_template_without_version_is_accepted() {
    let t = template_from_str(Path::new("x"), r#"{"label":"tri","points":[[0,0],[1,0],[0,1]]}"#).unwrap();
    assert_eq!(t.len(), 3);
    assert_eq!(t.points()[2], Vec2::new(0.0, 1.0));
}

#[test]
fn unknown_versions_and_fields_are_rejected() {
    let p = Path::new("x");
    let e = template_from_str(p, r#"{"version":2,"label":"t","points":[[0,0],[1,0]]}"#).unwrap_err();
    assert!(matches!(e, CliError::Format { .. }));
    assert!(e.to_string().contains("version 2"));
    assert_eq!(e.exit_code(), 2);
    let e = template_from_str(p, r#"{"label":"t","points":[[0,0]],"colour":"red"}"#).unwrap_err();
    assert!(matches!(e, CliError::Format { .. }));
    // coincident landmarks are a format problem of the file
    let e = template_from_str(p, r#"{"label":"t","points":[[0,0],[0,0]]}"#).unwrap_err();
    assert!(matches!(e, CliError::Format { .. }));
}

#[test]
fn match_document_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let reference = circle(2.0, Vec2::ZERO, 12).unwrap();
    let target = heart4(12).unwrap();
    let cfg = ShootingConfig { h: 0.5, ..ShootingConfig::default() };
    let r = match_templates(&reference, &target, &cfg).unwrap();
    let doc = MatchDoc::new(&reference, &target, "feedback", &r, &cfg);
    let path = dir.path().join("result.json");
    write_json(&path, &doc).unwrap();
    let back = read_match(&path).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.momenta(), r.p0);
    assert_eq!(back.energy, 2.0 * back.hamiltonian);

    let text = fs::read_to_string(&path).unwrap().replace("\"version\": 1", "\"version\": 7");
    fs::write(&path, text).unwrap();
    assert!(read_match(&path).unwrap_err().to_string().contains("version 7"));
}

#[test]
fn sweep_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let reference = circle(2.0, Vec2::ZERO, 8).unwrap();
    let target = heart4(8).unwrap();
    let grid = SweepGrid { tolerance: 1e-3, ..SweepGrid::new(vec![0.6, 1.0], vec![0.5], 8, KernelFamily::Conical) };
    let table = convergence_sweep(&reference, &target, &grid, &ShootingConfig::default()).unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep_csv(&path, &table).unwrap();
    let rows = read_sweep_csv(&path).unwrap();
    assert_eq!(rows.len(), 2);
    for (row, cell) in rows.iter().zip(&table.cells) {
        assert_eq!(
            (row.alpha2, row.h, row.iterations, row.converged),
            (cell.alpha2, cell.h, cell.iterations, cell.converged)
        );
    }
}
