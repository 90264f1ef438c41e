mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

use baffle_cli::plan::{FINAL_MESH_JSON, MANIFEST, SECTIONS_CSV};
use baffle_cli::{ReportSummary, RunManifest};
use baffle_core::mesh::io::parse_json;
use baffle_core::phantom::VENTRICLE_REFERENCE_AREA;
use common::{baffle, csv_column, plan, small_case, stderr};

/// One planned small phantom shared by the read-only tests.
fn planned() -> &'static (TempDir, PathBuf) {
    static RUN: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
        let out = dir.path().join("run");
        let o = plan(&config, &out);
        assert!(o.status.success(), "{}", stderr(&o));
        (dir, out)
    })
}

fn manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(out.join(MANIFEST)).unwrap()).unwrap()
}

fn report_json(out: &Path) -> ReportSummary {
    let o = baffle(&["report", "--manifest", out.join(MANIFEST).to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn plan_writes_every_output() {
    let (_, out) = planned();
    let m = manifest(out);
    for name in m.output_digests.keys() {
        assert!(out.join(name).is_file(), "{name}");
    }
    for name in ["final_mesh.json", "final_mesh.vtk", "sections.csv", "area_profile.csv", "cfd_manifest.json", "report.txt"] {
        assert!(m.output_digests.contains_key(name), "{name} not in the manifest");
    }
    assert!(m.topology.watertight);
    assert!(m.boundary_preserved);
    let text = fs::read_to_string(out.join(MANIFEST)).unwrap();
    assert!(!text.contains("/tmp"), "manifest holds an absolute path");
    let mesh = parse_json(&fs::read_to_string(out.join(FINAL_MESH_JSON)).unwrap()).unwrap();
    assert!(mesh.has_label(m.labels.baffle));
    let cfd: Value = serde_json::from_str(&fs::read_to_string(out.join("cfd_manifest.json")).unwrap()).unwrap();
    assert_eq!(cfd["fluid_density"], 1.06);
    assert_eq!(cfd["fluid_viscosity"], 0.04);
}

#[test]
fn report_agrees_with_the_csv() {
    let (_, out) = planned();
    let s = report_json(out);
    let csv = fs::read_to_string(out.join(SECTIONS_CSV)).unwrap();
    let accepted = csv_column(&csv, "accepted");
    let alpha: Vec<f64> = csv_column(&csv, "alpha")
        .iter()
        .zip(&accepted)
        .filter(|(_, a)| *a == "1")
        .map(|(v, _)| v.parse().unwrap())
        .collect();
    assert_eq!(s.accepted_sections, alpha.len());
    assert_eq!(s.alpha_max, alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    assert_eq!(s.alpha_min, alpha.iter().copied().fold(f64::INFINITY, f64::min));
    assert!(s.integrity_warnings.is_empty());
    let m = manifest(out);
    assert_eq!(s.a_target, m.a_target);
    assert_eq!(s.dp_estimate, m.dp_estimate);
    assert!(s.min_area >= 0.99 * m.a_target, "{} < {}", s.min_area, m.a_target);
    // the text form carries the same numbers
    let o = baffle(&["report", "--manifest", out.join(MANIFEST).to_str().unwrap()]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains(&format!("{:.9}", s.alpha_max)));
    assert!(!text.contains("WARNING"));
    // the report written at plan time is the same rendering
    assert_eq!(fs::read_to_string(out.join("report.txt")).unwrap(), text);
}

#[test]
fn tampered_output_is_flagged() {
    let (_, src) = planned();
    let dir = TempDir::new().unwrap();
    for e in fs::read_dir(src).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), dir.path().join(e.file_name())).unwrap();
    }
    let vtk = dir.path().join("final_mesh.vtk");
    let mut bytes = fs::read(&vtk).unwrap();
    let k = bytes.len() / 2;
    bytes[k] = if bytes[k] == b'1' { b'2' } else { b'1' };
    fs::write(&vtk, bytes).unwrap();
    let s = report_json(dir.path());
    assert_eq!(s.integrity_warnings.len(), 1);
    assert!(s.integrity_warnings[0].starts_with("final_mesh.vtk"));
    let o = baffle(&["report", "--manifest", dir.path().join(MANIFEST).to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("WARNING integrity    final_mesh.vtk"));
}

fn edit_config(config: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(config).unwrap()).unwrap();
    f(&mut v);
    fs::write(config, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn expect_failure(config: &Path, code: i32, stage: &str) {
    let out = config.parent().unwrap().join("run");
    let o = plan(config, &out);
    assert_eq!(o.status.code(), Some(code), "{}", stderr(&o));
    assert!(stderr(&o).starts_with(&format!("error [{stage}]")), "{}", stderr(&o));
    assert!(!out.join(MANIFEST).exists());
}

#[test]
fn missing_mesh_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    fs::remove_file(dir.path().join("meshes/RV.json")).unwrap();
    expect_failure(&config, 2, "input");
}

#[test]
fn unknown_config_field_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    edit_config(&config, |v| v["tolerances"] = serde_json::json!({ "no_such_knob": 1 }));
    expect_failure(&config, 2, "input");
}

#[test]
fn corrupt_mesh_is_a_mesh_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    fs::write(dir.path().join("meshes/combined.json"), "{\"vertices\": [[0, 0, 0]], \"triangles\": [[0, 1, 2]]}").unwrap();
    expect_failure(&config, 9, "mesh-core");
}

#[test]
fn collinear_points_are_a_boundary_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    let pts: Vec<[f64; 3]> = (0..8).map(|i| [0.5 + 0.3 * i as f64, 0.0, 0.35]).collect();
    fs::write(dir.path().join("points.json"), serde_json::json!({ "points": pts }).to_string()).unwrap();
    expect_failure(&config, 3, "baffle-boundary");
}

#[test]
fn too_few_points_are_a_boundary_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    fs::write(dir.path().join("points.json"), "{\"points\": [[1, 0, 0.3], [2, 0.1, 0.3]]}").unwrap();
    expect_failure(&config, 3, "baffle-boundary");
}

#[test]
fn malformed_points_are_an_input_error() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    fs::write(dir.path().join("points.json"), "{\"points\": [[1, 0, ").unwrap();
    expect_failure(&config, 2, "input");
}

#[test]
fn a_target_already_met_leaves_the_baffle_flat() {
    let dir = TempDir::new().unwrap();
    let config = small_case(dir.path(), VENTRICLE_REFERENCE_AREA);
    edit_config(&config, |v| v["patient"]["a_target"] = serde_json::json!(0.01));
    let out = dir.path().join("run");
    let o = plan(&config, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join(SECTIONS_CSV)).unwrap();
    let accepted = csv_column(&csv, "accepted");
    for (col, acc) in csv_column(&csv, "alpha_smoothed").iter().zip(&accepted) {
        if acc == "1" {
            assert_eq!(col.parse::<f64>().unwrap(), 0.0);
        }
    }
    let m = manifest(&out);
    assert!(m.raised_sections.is_empty());
    assert!(m.boundary_preserved && m.topology.watertight);
    // without shaping the domain keeps the placeholder's volume
    let r = &m.final_report;
    assert!((r.final_volume - r.placeholder_volume).abs() < 1e-3 * r.placeholder_volume);
}

#[test]
fn phantom_command_writes_a_case() {
    let dir = TempDir::new().unwrap();
    let o = baffle(&["phantom", "--out", dir.path().to_str().unwrap(), "--a-target", "0.7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(v["patient"]["a_target"], 0.7);
    for f in ["meshes/combined.json", "meshes/LV.json", "meshes/RV.json", "meshes/ao.json", "points.json"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn missing_manifest_is_reported() {
    let o = baffle(&["report", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(o.status.code(), Some(2));
}
