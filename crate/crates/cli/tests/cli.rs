use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgf")).args(args).env_remove("QGF_TOL").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const H: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn maximal_json(s_entries: &str) -> String {
    format!(
        r#"{{"n": 4, "r": 2, "S": {s_entries},
            "T": [[[{H}, 0], [{H}, 0]], [[{H}, 0], [-{H}, 0]]],
            "lines": [{{"role": "input"}}, {{"role": "output"}},
                      {{"role": "controller", "V": 1.0}}, {{"role": "drain"}}]}}"#
    )
}

const ZERO_S: &str = "[[[0, 0], [0, 0]], [[0, 0], [0, 0]]]";

struct Row {
    e: f64,
    p: f64,
    re_t: f64,
    im_t: f64,
    flux: f64,
}

fn rows(csv: &str) -> Vec<Row> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("E,P,re_t,im_t,refl2,flux"));
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            assert_eq!(f.len(), 6);
            Row { e: f[0], p: f[1], re_t: f[2], im_t: f[3], flux: f[5] }
        })
        .collect()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.json", &maximal_json(ZERO_S));
    assert_eq!(code(&qgf(&["validate", s(&good)])), 0);
    assert_eq!(code(&qgf(&["validate", "--coupling", s(&good)])), 0);

    let bad = write(&dir, "bad.json", &maximal_json("[[[0, 0], [1, 0]], [[0, 0], [0, 0]]]"));
    let out = qgf(&["validate", s(&bad)]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("NonHermitianS"), "{}", stderr(&out));

    let broken = write(&dir, "broken.json", "{\"n\": 4,\n \"r\": }");
    let out = qgf(&["validate", s(&broken)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    assert_eq!(code(&qgf(&["validate", s(&dir.path().join("missing.json"))])), 1);
}

#[test]
fn tolerance_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let slightly = write(&dir, "s.json", &maximal_json("[[[0, 0], [1e-8, 0]], [[0, 0], [0, 0]]]"));
    assert_eq!(code(&qgf(&["validate", s(&slightly)])), 2);
    let run = |tol: &str| {
        Command::new(env!("CARGO_BIN_EXE_qgf")).args(["validate", s(&slightly)]).env("QGF_TOL", tol).output().unwrap()
    };
    assert_eq!(code(&run("hermitian=1e-6")), 0);
    assert_eq!(code(&run("nonsense")), 1);
}

#[test]
fn scan_of_maximal_filter() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "max.json", &maximal_json(ZERO_S));
    let out_path = dir.path().join("scan.csv");
    let out = qgf(&["scan", "--coupling", s(&f), "--emin", "0.001", "--emax", "5", "--points", "500", "--out", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(!text.contains('\r'));
    let rows = rows(&text);
    assert_eq!(rows.len(), 500);
    for r in &rows {
        assert!((r.p - (r.re_t * r.re_t + r.im_t * r.im_t)).abs() < 1e-12);
        assert!(r.flux <= 1.0 + 1e-8);
        if r.e < 1.0 {
            assert!((r.p - 0.25).abs() < 1e-9, "{} {}", r.e, r.p);
        } else if r.e > 1.0 {
            assert!(r.p < 0.25);
        }
    }

    // Identical inputs give byte-identical output.
    let again = qgf(&["scan", "--coupling", s(&f), "--emin", "0.001", "--emax", "5", "--points", "500"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn default_scan_grid_and_log_spacing() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "max.json", &maximal_json(ZERO_S));
    let rows = rows(&stdout(&qgf(&["scan", s(&f)])));
    assert_eq!(rows.len(), 500);
    assert!((rows[0].e - 0.002).abs() < 1e-15 && (rows[499].e - 5.0).abs() < 1e-12);
    let rows = rows_of(&qgf(&["scan", s(&f), "--spacing", "log", "--points", "3", "--emin", "0.01", "--emax", "1"]));
    assert!((rows[1].e - 0.1).abs() < 1e-12);
    assert_eq!(code(&qgf(&["scan", s(&f), "--emin", "0"])), 1);
}

fn rows_of(o: &Output) -> Vec<Row> {
    rows(&stdout(o))
}

#[test]
fn scan_without_dissipation_conserves_flux() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"n": 3, "r": 1, "S": [[[0.3, 0]]], "T": [[[0.8, 0.1], [1.2, -0.4]]],
                   "lines": [{"role": "input"}, {"role": "output"}, {"role": "controller", "V": 2.0}]}"#;
    let f = write(&dir, "c.json", text);
    for r in rows_of(&qgf(&["scan", s(&f), "--emin", "0.01", "--emax", "1.99", "--points", "50"])) {
        assert!((r.flux - 1.0).abs() < 1e-8, "{}", r.flux);
    }
}

#[test]
fn decoupled_output_never_transmits() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"n": 3, "r": 1, "S": [[[0.5, 0]]], "T": [[[0, 0], [1, 0]]],
                   "lines": [{"role": "input"}, {"role": "output"}, {"role": "controller", "V": 1.0}]}"#;
    let f = write(&dir, "d.json", text);
    for r in rows_of(&qgf(&["scan", s(&f)])) {
        assert_eq!(r.p, 0.0);
    }
}

#[test]
fn check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "max.json", &maximal_json(ZERO_S));
    let out = qgf(&["check", s(&f)]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["case"], "S_zero");
    assert_eq!(report["verdict"], true);

    let t = "[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]";
    let f = write(&dir, "diag.json", &maximal_json(ZERO_S).replacen(&format!("[[[{H}, 0], [{H}, 0]], [[{H}, 0], [-{H}, 0]]]"), t, 1));
    let out = qgf(&["check", s(&f)]);
    assert_eq!(code(&out), 3);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["residual_diagonality"].as_f64().unwrap() > 0.0);

    let r1 = r#"{"n": 3, "r": 1, "S": [[[0, 0]]], "T": [[[1, 0], [1, 0]]],
                 "lines": [{"role": "input"}, {"role": "output"}, {"role": "controller", "V": 1.0}]}"#;
    let out = qgf(&["check", s(&write(&dir, "r1.json", r1))]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("flat-band check requires r=2"));

    let mixed = r#"{"n": 4, "r": 2, "S": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
                    "T": [[[1, 0], [1, 0]], [[1, 0], [-1, 0]]],
                    "lines": [{"role": "input"}, {"role": "output"},
                              {"role": "controller", "V": 1.0}, {"role": "controller", "V": 2.0}]}"#;
    let out = qgf(&["check", s(&write(&dir, "mixed.json", mixed))]);
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).contains("ConfigMismatch"));
}

#[test]
fn r3_layout_reports_diagonality() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"n": 4, "r": 3, "S": [[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]],
                   "T": [[[1, 0]], [[0, 0]], [[1, 0]]],
                   "lines": [{"role": "input"}, {"role": "output"}, {"role": "controller", "V": 1.0}, {"role": "drain"}]}"#;
    let out = qgf(&["check", s(&write(&dir, "r3.json", text))]);
    assert_eq!(code(&out), 4);
    assert!(stdout(&out).contains("r3_diagonality"));
}

#[test]
fn maximal_design_matches_the_known_coupling() {
    let out = qgf(&["design", "--maximal", "--alpha", "1", "--s", "0"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t = &v["T"];
    let expect = [[H, H], [H, -H]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((t[i][j][0].as_f64().unwrap() - expect[i][j]).abs() < 1e-15);
            assert_eq!(t[i][j][1].as_f64().unwrap(), 0.0);
        }
    }
    assert_eq!(code(&qgf(&["design", "--maximal", "--alpha", "1.5"])), 2);
}

#[test]
fn design_round_trips_through_check() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("fig.json");
    let args = ["design", "--case", "S_zero", "--v1sq", "0.625", "--w1sq", "0.875", "--drains", "2", "--w2-phase", "0", "--out", s(&out_path)];
    assert_eq!(code(&qgf(&args)), 0);
    let out = qgf(&["check", s(&out_path)]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["predicted_p"].as_f64().unwrap() - 0.16).abs() < 1e-12);

    let again = dir.path().join("again.json");
    assert_eq!(code(&qgf(&["design", "--spec", s(&out_path), "--out", s(&again)])), 0);
    assert_eq!(std::fs::read(&out_path).unwrap(), std::fs::read(&again).unwrap());

    let same = dir.path().join("same.json");
    let args = ["design", "--case", "same_sign", "--s", "-0.7", "--v1sq", "0.6", "--lambda", "0.3,0.9", "--controllers", "2", "--drains", "2", "--w2-phase", "1.1", "--out", s(&same)];
    assert_eq!(code(&qgf(&args)), 0);
    assert_eq!(code(&qgf(&["check", s(&same)])), 0);
}

#[test]
fn opposite_sign_designs_are_rejected() {
    let out = qgf(&["design", "--case", "opposite_sign", "--v1sq", "0.2", "--s", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("InfeasibleNegCase"));
    // Admissible norms, but no sign choice gives det S = 0.
    let out = qgf(&["design", "--case", "opposite_sign", "--v1sq", "0.5", "--s", "1"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("NotFlat"));
}

#[test]
fn probes_and_optimizer() {
    for layout in ["r1", "lindep"] {
        let out = qgf(&["probe", "--layout", layout, "--samples", "1000", "--seed", "7"]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).contains(" 0 violations"), "{}", stdout(&out));
        assert_eq!(stdout(&out), stdout(&qgf(&["probe", "--layout", layout, "--samples", "1000", "--seed", "7"])));
    }
    let out = qgf(&["optimize", "--density", "50"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("F* = 0.250000000"), "{text}");
    assert!(text.contains("at_boundary = true"));
}
