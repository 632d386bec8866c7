use std::process::{Command, Output};

use ckn_core::params::curve_constants;
use ckn_core::spectrum::spectral_gap;
use ckn_core::make_params;
use serde_json::Value;

fn ckn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckn")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/golden/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn gap_case_ii() {
    let out = ckn(&["gap", "4", "0", "0.5"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["region"], "CaseII");
    assert!((v["lambda_star"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn invalid_point_names_condition() {
    let out = ckn(&["region", "4", "0", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].as_str().unwrap().contains("b < a+1 violated"));
}

#[test]
fn degenerate_boundary_is_a_parameter_error() {
    let b = curve_constants(4).b_fs(-1.0).to_string();
    let out = ckn(&["gap", "4", "-1", &b]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["kind"], "DegenerateBoundary");
}

#[test]
fn out_of_range_options_exit_2() {
    let out = ckn(&["energy", "4", "0", "0.5", "--s", "1e6"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ckn(&["spectrum", "4", "0", "0.5", "--imax", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].is_string());
}

#[test]
fn negative_arguments_parse() {
    let out = ckn(&["bounds", "3", "-1", "-0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn golden_reports_carry_both_variants() {
    for (args, file) in [
        (["gap", "4", "0", "0.3"], "gap_4_0_0.3.json"),
        (["bounds", "4", "0", "0.5"], "bounds_4_0_0.5.json"),
        (["zhat", "4", "0", "0.3"], "zhat_4_0_0.3.json"),
    ] {
        let out = ckn(&args);
        assert_eq!(String::from_utf8(out.stdout).unwrap(), golden(file), "{file}");
    }
    let gap: Value = serde_json::from_str(&golden("gap_4_0_0.3.json")).unwrap();
    let (m1, st) = (gap["lambda_star_mode1"].as_f64().unwrap(), gap["lambda_star_mode1_statement"].as_f64().unwrap());
    assert!((m1 - 318.0 / 858.0).abs() < 1e-14);
    assert!((st - m1).abs() > 0.1);
    let b: Value = serde_json::from_str(&golden("bounds_4_0_0.5.json")).unwrap();
    let p = 5.0_f64 / 3.0;
    assert!((b["bound_two_bubble"].as_f64().unwrap() - (2.0 - 2f64.powf(2.0 / (p + 1.0)))).abs() < 1e-15);
    assert!((b["bound_two_bubble_statement"].as_f64().unwrap() - (2.0 - 2f64.powf(1.0 / (p + 1.0)))).abs() < 1e-15);
}

#[test]
fn json_round_trip_reproduces_values() {
    let v = json(&ckn(&["gap", "3", "-0.3", "0.25"]));
    let p = make_params(v["N"].as_u64().unwrap() as u32, v["a"].as_f64().unwrap(), v["b"].as_f64().unwrap()).unwrap();
    let g = spectral_gap(&p);
    assert_eq!(v["lambda_star"].as_f64().unwrap(), g.lambda_star);
    assert_eq!(v["lambda_star_mode1_statement"].as_f64().unwrap(), g.lambda_star_mode1_statement);
    assert_eq!(v["p"].as_f64().unwrap(), p.p);
}

#[test]
fn sweep_csv_flags_invalid_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    let out = dir.path().join("rows.csv");
    let spec = serde_json::json!({
        "N": 4,
        "a": {"min": -1.0, "max": 0.9, "steps": 50},
        "b": {"absolute": {"min": -1.0, "max": 1.5, "steps": 50}},
        "tasks": ["bounds", "gap"],
        "output": out,
    });
    std::fs::write(&cfg, spec.to_string()).unwrap();
    let res = ckn(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,a,b,region,lambda_star,bound_two_bubble,effective_bound");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2500);
    let mut valid = 0;
    for r in &rows {
        let (a, b): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        let ok = make_params(4, a, b).is_ok();
        valid += usize::from(ok);
        assert_eq!(ok, !r[4].is_empty());
        assert_eq!(ok, !matches!(r[3], "Invalid" | "DegenerateBoundary"));
        if ok {
            assert_eq!(r[4].split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
        }
    }
    assert_eq!(json(&res)["valid_rows"], valid);
    let first = text.clone();
    assert!(ckn(&["sweep", "--config", cfg.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
}

#[test]
fn sweep_offsets_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    let spec = serde_json::json!({
        "N": 3,
        "a": {"min": -1.0, "max": -0.5, "steps": 3},
        "b": {"offset": {"min": 0.01, "max": 0.2, "steps": 2}},
        "tasks": ["zhat", "region", "spectrum"],
        "format": "json",
    });
    std::fs::write(&cfg, spec.to_string()).unwrap();
    let out = ckn(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    let bfs = curve_constants(3).b_fs(-1.0);
    assert!((rows[0]["b"].as_f64().unwrap() - (bfs + 0.01)).abs() < 1e-15);
    assert!(rows[0]["zhat"].as_f64().unwrap() < 0.0);
    assert!(rows[0]["lambda_02"].is_number() && rows[0]["p"].is_number());
}

#[test]
fn bad_sweep_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(&cfg, r#"{"N": 4, "a": {"min": 1, "max": 0, "steps": 3}, "b": {"absolute": {"min": 0, "max": 1, "steps": 2}}, "tasks": ["gap"]}"#).unwrap();
    let out = ckn(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"].as_str().unwrap().contains("min <= max"));
}

#[test]
fn minimize_is_byte_identical_under_a_seed() {
    let args = ["minimize", "4", "0.5", "0.6", "--starts", "1", "--seed", "9"];
    let (one, two) = (ckn(&args), ckn(&args));
    assert!(one.status.success(), "{}", String::from_utf8_lossy(&one.stdout));
    assert_eq!(one.stdout, two.stdout);
    let v = json(&one);
    let q = v["value"].as_f64().unwrap();
    assert!(q > 0.0 && q <= v["bounds"]["effective_bound"].as_f64().unwrap() + 1e-3);
}
