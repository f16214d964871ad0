//! End-to-end runs of the `weierforge` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn weierforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weierforge")).args(args).env("WEIERFORGE_THREADS", "2").output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_cm_writes_surface_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "disc.json", r#"{ "domain": { "outer_radius": 1.0 } }"#);
    let out = tmp.path().join("run");
    let r = weierforge(&["synth", "--recipe", "cm", "--config", &cfg, "--out", s(&out), "--quiet"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(r.stdout.is_empty());
    for f in ["surface.obj", "surface.csv", "manifest.json", "distances.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(!out.join("manifest.partial.json").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "complete");
    assert_eq!(m["stages"].as_array().unwrap().len(), 3);
    assert!(m["audit"].as_array().unwrap().iter().all(|r| r["pass"] == true));
    assert!(m["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("non-properness")));
    let obj = fs::read_to_string(out.join("surface.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("v ")) && obj.lines().any(|l| l.starts_with("f ")));
    let csv = fs::read_to_string(out.join("surface.csv")).unwrap();
    assert!(csv.starts_with("u,v,x1,x2,x3,x4,density"));
    let dist = fs::read_to_string(out.join("distances.csv")).unwrap();
    assert_eq!(dist.lines().count(), 4);

    let exp = tmp.path().join("exp");
    let r = weierforge(&["export", "--in", s(&out.join("manifest.json")), "--out", s(&exp), "--grid-spacing", "0.1", "--quiet"]);
    assert_eq!(r.status.code(), Some(0));
    assert!(exp.join("surface.obj").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.json", "{\n  \"domain\": { \"outer_radius\": 1.0,, }\n}");
    let r = weierforge(&["synth", "--recipe", "cm", "--config", &bad, "--out", s(&tmp.path().join("a"))]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("line 2") && err.contains("column"), "{err}");

    let nine = write(tmp.path(), "nine.json", r#"{ "domain": { "outer_radius": 1.0 }, "plan": { "stages": 9 } }"#);
    let r = weierforge(&["synth", "--recipe", "cm", "--config", &nine, "--out", s(&tmp.path().join("b"))]);
    assert_eq!(r.status.code(), Some(2));
    let ok = write(tmp.path(), "ok.json", r#"{ "domain": { "outer_radius": 1.0 } }"#);
    let r = weierforge(&["synth", "--recipe", "cm", "--config", &ok, "--stages", "9", "--out", s(&tmp.path().join("c"))]);
    assert_eq!(r.status.code(), Some(2));
    let r = weierforge(&["synth", "--recipe", "cm", "--config", &ok, "--period-tol", "-1", "--out", s(&tmp.path().join("d"))]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(weierforge(&["nonsense"]).status.code(), Some(2));
    assert_eq!(weierforge(&["synth", "--recipe", "spiral", "--config", &ok]).status.code(), Some(2));
}

#[test]
fn audit_report_and_failure_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.json", r#"{ "domain": { "outer_radius": 1.0 }, "recipe": "gauss-omit", "dimension": 4, "plan": { "stages": 1 } }"#);
    let out = tmp.path().join("g");
    assert_eq!(weierforge(&["synth", "--config", &cfg, "--out", s(&out), "--quiet"]).status.code(), Some(0));
    let omitted = write(
        tmp.path(),
        "planes.json",
        r#"[ { "coefficients": [[1,0],[0,1],[0,0],[0,0]], "label": "pi_1_0" },
             { "coefficients": [[0,0],[0,0],[1,0],[0,-1]], "label": "pi_2_1" } ]"#,
    );
    let report = tmp.path().join("report.csv");
    let r = weierforge(&["audit", "--in", s(&out.join("manifest.json")), "--hyperplanes", &omitted, "--out", s(&report), "--quiet"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("check,value,threshold,pass\n"));
    assert!(text.contains("min_incidence:pi_1_0"));

    // The Gauss image at z = 0 is [1 : 0 : i : 0], which lies on this hyperplane.
    let met = write(tmp.path(), "met.json", r#"[ { "coefficients": [[1,0],[0,0],[0,1],[0,0]], "label": "through_origin" } ]"#);
    let r = weierforge(&["audit", "--in", s(&out.join("manifest.json")), "--hyperplanes", &met, "--out", s(&report), "--quiet"]);
    assert_eq!(r.status.code(), Some(4));
}

#[test]
fn period_fix_and_bench() {
    let tmp = tempfile::tempdir().unwrap();
    let t = 2.0 * std::f64::consts::PI * 0.3;
    let cfg = write(
        tmp.path(),
        "pf.json",
        &format!(
            r#"{{ "domain": {{ "outer_radius": 2.0, "holes": [ {{ "center": [0, 0], "radius": 0.5 }} ] }},
                 "period_fix": {{ "targets": [ [ [0, {t}], [{m}, 0] ] ] }} }}"#,
            m = -t
        ),
    );
    let out = tmp.path().join("pf");
    let r = weierforge(&["period-fix", "--config", &cfg, "--out", s(&out), "--quiet"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let sol: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("solution.json")).unwrap()).unwrap();
    assert!(sol["residual"].as_f64().unwrap() <= 1e-10);
    assert!(out.join("manifest.json").exists());

    let r = weierforge(&["period-fix", "--config", &cfg, "--out", s(&out), "--max-iter", "0", "--quiet"]);
    assert_eq!(r.status.code(), Some(2));

    let bench = tmp.path().join("bench");
    let r = weierforge(&["labyrinth-bench", "--collar", "0.2,1", "--identity-chart", "--m", "3", "--out", s(&bench), "--quiet"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(bench.join("bench.csv")).unwrap();
    assert!(csv.starts_with("m,lambda,mu,measured_length,rho_hat"));
    assert!(fs::read_to_string(bench.join("labyrinth_m3.svg")).unwrap().starts_with("<svg"));
    let r = weierforge(&["labyrinth-bench", "--collar", "0.8,1", "--identity-chart", "--m", "3", "--out", s(&bench), "--quiet"]);
    assert_eq!(r.status.code(), Some(2));
}
