use std::process::{Command, Output};

use serde_json::Value;

fn magnon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnon")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn free_energy_report_fields() {
    let v = json(&magnon(&["free-energy", "--d", "3", "--two-s", "2", "--beta-tilde", "8"]));
    let r = &v["results"][0];
    for key in ["leading", "correction", "total_upper_bound", "error_total"] {
        assert!(r[key].is_f64(), "{key}");
    }
    assert!(r["error_terms"]["r_d_over_s2"].is_f64());
    assert_eq!(r["ell"], 512);
    assert!(v["version"].as_str().unwrap().starts_with("magnon "));
    assert_eq!(v["config"]["d"], "3");
    assert_eq!(v["config"]["n_max"], "12");
}

#[test]
fn beta_list_gives_one_report_each() {
    let v = json(&magnon(&["free-energy", "--beta-tilde", "4,8,16"]));
    let r = v["results"].as_array().unwrap();
    assert_eq!(r.len(), 3);
    assert_eq!(r[2]["beta_tilde"], 16.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["free-energy", "--d", "3"][..],
        &["free-energy", "--beta-tilde", "-1"],
        &["free-energy", "--beta-tilde", "4", "--bogus"],
        &["free-energy", "--beta-tilde", "4", "--set", "colour=red"],
        &["diagrams", "--ell", "12"],
        &["diagrams", "--zero-mode", "include"],
        &["diagrams", "--d", "2"],
        &["correction", "--d", "3", "--ell", "4", "--two-s", "2", "--beta-tilde", "4", "--boundary", "periodic"],
        &["verify", "--only", "nonsense"],
    ] {
        let out = magnon(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# theorem bound\nd = 2\ntwo_s = 4\nbeta_tilde = 3\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&magnon(&["free-energy", "--config", c]));
    assert_eq!(v["results"][0]["d"], 2);
    let v = json(&magnon(&["free-energy", "--config", c, "--d", "3"]));
    assert_eq!(v["results"][0]["d"], 3);
    assert_eq!(v["results"][0]["two_s"], 4);
}

#[test]
fn correction_and_wick_outputs() {
    let v = json(&magnon(&["correction", "--d", "2", "--ell", "4", "--two-s", "2", "--beta-tilde", "2"]));
    let r = &v["results"][0];
    assert!(r["continuum"].as_f64().unwrap() < 0.0);
    let v = json(&magnon(&["wick-verify", "--d", "2", "--ell", "2", "--two-s", "2", "--beta-tilde", "2,4"]));
    for r in v["results"].as_array().unwrap() {
        assert_eq!(r["pass"], true);
        assert!(r["fock"].is_f64());
    }
}

#[test]
fn ed_compare_margins() {
    let v = json(&magnon(&["ed-compare", "--d", "2", "--ell", "2", "--beta-tilde", "2,4,8"]));
    for r in v["results"].as_array().unwrap() {
        assert!(r["margin"].as_f64().unwrap() >= -1e-10);
    }
}

#[test]
fn diagrams_single_beta_has_no_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = magnon(&["diagrams", "--ell", "4", "--beta-tilde", "4", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(lines[0].starts_with("beta_tilde,biggest_error,left_f1f2,combined"));
    assert_eq!(lines.len(), 2);
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("scan.csv.summary.json")).unwrap()).unwrap();
    assert!(summary["summary"]["slopes"].is_null());
    assert!(summary["summary"]["k3_identity_max_residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn diagrams_scan_reports_slopes() {
    let v = json(&magnon(&["diagrams", "--ell", "4", "--beta-tilde", "4,6,8,12", "--format", "json"]));
    assert_eq!(v["results"].as_array().unwrap().len(), 4);
    assert!(v["summary"]["slopes"]["biggest_error"]["slope"].is_f64());
}

#[test]
fn verify_suite_and_induced_failure() {
    let out = magnon(&["verify", "--only", "trig"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS trig")).count() == 16);
    assert!(!text.contains("FAIL"));
    assert!(text.contains("tol="));

    let out = magnon(&["verify", "--only", "magnon", "--perturb-epsilon", "1e-6"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().contains("FAIL magnon"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = magnon(&[
            "diagrams",
            "--ell",
            "5",
            "--beta-tilde",
            "4,8",
            "--threads",
            "2",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        std::fs::read(&p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let a = magnon(&["free-energy", "--beta-tilde", "4,8", "--threads", "1"]);
    let b = magnon(&["free-energy", "--beta-tilde", "4,8", "--threads", "1"]);
    assert_eq!(a.stdout, b.stdout);
}
