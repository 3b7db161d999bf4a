use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hyperwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperwalk")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `key=...` in key=value output.
fn field(o: &Output, key: &str) -> String {
    let text = stdout(o);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
        .unwrap_or_else(|| panic!("no {key} in:\n{text}"))
}

#[test]
fn tiling_stats() {
    let o = hyperwalk(&["tiling", "--schlafli", "4,3,4", "--depth", "1", "--stats"]);
    assert!(o.status.success());
    assert_eq!(field(&o, "cellCount"), "7");
    assert_eq!(field(&o, "kind"), "euclidean");
    let o = hyperwalk(&["--json", "tiling", "--schlafli", "{4,3,6}", "--depth", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cellCount"], 175);
}

#[test]
fn tiling_export_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = hyperwalk(&["tiling", "--schlafli", "4,6", "--depth", "2", "--export", path.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["cellCount"].as_u64().unwrap() as usize, v["cells"].as_array().unwrap().len());
    assert_eq!(v["cellCount"].to_string(), field(&o, "cellCount"));
}

#[test]
fn square_walk_solves_the_closing_step() {
    let o = hyperwalk(&["square-walk", "--space", "h2e", "--solve-step"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "movesToClose"), "6");
    let step: f64 = field(&o, "step").parse().unwrap();
    // equilateral right-angled hexagon: cosh(step/2) = √(3/2)
    assert!((step - 2.0 * 1.5f64.sqrt().acosh()).abs() < 1e-9);
    assert!((step - 1.316958).abs() < 1e-6);
    assert_eq!(field(&o, "physicalSquaresAway"), "2");

    let o = hyperwalk(&["square-walk", "--space", "euclidean", "--step", "0.7"]);
    assert_eq!(field(&o, "movesToClose"), "4");
    assert_eq!(field(&o, "physicalEndpoint"), "[0,0]");
}

#[test]
fn vergence_far_limit() {
    let o = hyperwalk(&["vergence", "--ipd", "62.21", "--distance", "1e9", "--space", "h3"]);
    assert!(o.status.success());
    let v: f64 = field(&o, "vergenceRad").parse().unwrap();
    assert!((v - 0.0311).abs() < 5e-5);
    assert!((v - (0.062_21f64 / 2.0).sinh().atan()).abs() < 1e-9);
    let flat: f64 = field(&o, "euclideanRad").parse().unwrap();
    assert!(flat < 1e-9);
}

#[test]
fn floor_drop_list() {
    let o = hyperwalk(&["--json", "floor-drop", "--height", "0.5", "--t", "1,2,3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for (i, d) in v["distance"].as_array().unwrap().iter().enumerate() {
        let t = (i + 1) as f64;
        assert!((d.as_f64().unwrap().sinh() - 0.5f64.sinh() * t.cosh()).abs() < 1e-12);
    }
}

#[test]
fn walk_runs_a_script_file() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("ruld.txt");
    std::fs::write(&script, "T right 0.5\nT up 0.5\nT left 0.5\nT down 0.5\n").unwrap();
    let s = script.to_str().unwrap();
    let o = hyperwalk(&["walk", "--space", "h3", "--script", s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "classification"), "rotation");
    let o = hyperwalk(&["walk", "--space", "h2e", "--script", s]);
    assert_eq!(field(&o, "classification"), "identity");
}

#[test]
fn figure_and_render_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("m.svg");
    let o = hyperwalk(&["figure", "models2d", "--model", "poincare", "--width", "400", "-o", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/render/h3_room.json");
    let fixture: Value = serde_json::from_str(&std::fs::read_to_string(&scene).unwrap()).unwrap();
    let scene_file = dir.path().join("scene.json");
    std::fs::write(&scene_file, fixture["scene"].to_string()).unwrap();
    let png = dir.path().join("s.png");
    let o = hyperwalk(&[
        "render", "--scene", scene_file.to_str().unwrap(), "--camera", "0,0,0,0.3,-0.1", "--width", "64", "--height", "48",
        "--stereo", "--mode", "modelSpace", "-o", png.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "width"), "128");
    assert_eq!(&std::fs::read(&png).unwrap()[1..4], b"PNG");
}

#[test]
fn exit_codes() {
    assert_eq!(hyperwalk(&["tiling", "--bogus"]).status.code(), Some(2));
    assert_eq!(hyperwalk(&["square-walk", "--space", "h2e"]).status.code(), Some(2));
    let o = hyperwalk(&["tiling", "--schlafli", "4,3,3", "--depth", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(hyperwalk(&["vergence", "--ipd", "0", "--distance", "1", "--space", "h3"]).status.code(), Some(1));
    assert_eq!(hyperwalk(&["walk", "--space", "h3", "--script", "/nonexistent"]).status.code(), Some(1));
    assert_eq!(hyperwalk(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"space": "h2e", "squareWalk": {"solveStep": true, "turnDeg": 90}, "tiling": {"schlafli": [4,3,4], "depth": 2}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = hyperwalk(&["--config", c, "square-walk"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(field(&o, "movesToClose"), "6");
    assert_eq!(field(&o, "space"), "h2e");
    let o = hyperwalk(&["tiling", "--config", c]);
    assert_eq!(field(&o, "cellCount"), "25");
    // flags win
    let o = hyperwalk(&["tiling", "--depth", "1", "--config", c]);
    assert_eq!(field(&o, "cellCount"), "7");
    let o = hyperwalk(&["--config", c, "square-walk", "--space", "euclidean", "--step", "1"]);
    assert!(!o.status.success());
    let o = hyperwalk(&["--config", c, "square-walk", "--space", "euclidean"]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(&cfg, r#"{"tiling": {"nope": 1}}"#).unwrap();
    assert_eq!(hyperwalk(&["--config", c, "tiling", "--schlafli", "4,3,4", "--depth", "1"]).status.code(), Some(2));
}
