use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orthant(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthant"))
        .args(args)
        .env_remove("ORTHANT_OUT")
        .current_dir(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_matches_golden_files() {
    let dir = TempDir::new().unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut cases = vec![(vec!["--help"], "help.txt".to_string())];
    for c in ["indexes", "fit", "smooth", "diagnose", "mo-sim", "kernels-probe", "fixture"] {
        cases.push((vec![c, "--help"], format!("help_{c}.txt")));
    }
    for (args, file) in cases {
        let out = orthant(&args, dir.path());
        assert!(out.status.success());
        let want = fs::read_to_string(golden.join(&file)).unwrap();
        assert_eq!(String::from_utf8(out.stdout).unwrap(), want, "{file}");
    }
}

#[test]
fn help_lists_every_diagnose_flag() {
    let dir = TempDir::new().unwrap();
    let text = String::from_utf8(orthant(&["diagnose", "--help"], dir.path()).stdout).unwrap();
    for flag in [
        "--fixture", "--data", "--no-header", "--counts", "--columns", "--kernel", "--selector", "--h ", "--alpha",
        "--beta", "--mu ", "--mu0", "--start", "--band", "--standardize", "--sensitivity", "--out", "--threads",
        "--format",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn indexes_reproduce_the_waterpump_table() {
    let dir = TempDir::new().unwrap();
    let out = orthant(&["indexes", "--fixture", "waterpumps"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("indexes.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "GVI=0.0533,X1,X2,X3");
    assert_eq!(lines[1], "X1,1.9425,0.0558,1.0549");
    assert_eq!(lines[4], "GDI=15.1230,X1,X2,X3");
    assert_eq!(lines[5], "X1,89.5860,14.3224,70.7096");
    let report = json(&dir.path().join("indexes.json"));
    let joint = &report["joint"];
    assert!((joint["gvi"].as_f64().unwrap() - 0.0533).abs() < 5e-4);
    assert!((joint["gdi"].as_f64().unwrap() - 15.1229).abs() < 5e-4);
}

#[test]
fn json_floats_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    orthant(&["indexes", "--fixture", "waterpumps", "--format", "json"], dir.path());
    let text = fs::read_to_string(dir.path().join("indexes.json")).unwrap();
    let line = text.lines().find(|l| l.contains("\"gdi\"")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{number}");
    assert!(!dir.path().join("indexes.csv").exists());
}

#[test]
fn fit_reports_start_parameters_and_correlations() {
    let dir = TempDir::new().unwrap();
    assert!(orthant(&["fit", "--fixture", "waterpumps"], dir.path()).status.success());
    let r = json(&dir.path().join("fit.json"));
    let mu = r["exponential"]["parameters"]["mu"].as_array().unwrap();
    for (got, want) in mu.iter().zip([0.0217, 0.0100, 0.0336]) {
        assert!((got.as_f64().unwrap() - want).abs() < 5e-5);
    }
    assert!((r["correlation"][0][1].as_f64().unwrap() + 0.3090).abs() < 5e-4);
    assert!((r["correlation_det"].as_f64().unwrap() - 0.8325).abs() < 5e-4);
    let mvi: Vec<f64> = r["mvi"].as_array().unwrap().iter().map(|e| e["mvi"].as_f64().unwrap()).collect();
    for (got, want) in mvi.iter().zip([0.0720, 0.9857, 0.0155, 0.0634]) {
        assert!((got - want).abs() < 5e-4);
    }
}

#[test]
fn diagnose_exit_status_is_the_decision() {
    let dir = TempDir::new().unwrap();
    let out = orthant(&["diagnose", "--fixture", "waterpumps", "--columns", "X3", "--start", "exp"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let r = json(&dir.path().join("diagnose.json"));
    assert_eq!(r["percent_in_band"].as_f64().unwrap(), 100.0);
    assert_eq!(r["decision"], "parametric");
    assert_eq!(r["sensitivity"].as_array().unwrap().len(), 4);
    let plot = fs::read_to_string(dir.path().join("diagnose_plot.csv")).unwrap();
    assert_eq!(plot.lines().count(), 43);

    let out = orthant(&["diagnose", "--fixture", "waterpumps"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&dir.path().join("diagnose.json"))["percent_in_band"].as_f64().unwrap(), 0.0);
}

#[test]
fn mo_sim_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["mo-sim", "--mu", "1,1", "--mu0", "0", "--n", "1000", "--seed", "7"];
    assert!(orthant(&args, a.path()).status.success());
    let mut with_threads = args.to_vec();
    with_threads.extend(["--threads", "1"]);
    assert!(orthant(&with_threads, b.path()).status.success());
    for f in ["mo_sim.csv", "mo_sim.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let r = json(&a.path().join("mo_sim.json"));
    assert_eq!(r["closed_form_gvi"].as_f64().unwrap(), 1.0);
}

#[test]
fn diagnose_output_does_not_depend_on_thread_count() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["diagnose", "--fixture", "waterpumps", "--columns", "X1,X3"];
    orthant(&[&args[..], &["--threads", "1"]].concat(), a.path());
    orthant(&[&args[..], &["--threads", "3"]].concat(), b.path());
    for f in ["diagnose.json", "diagnose_plot.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn smooth_on_a_grid() {
    let dir = TempDir::new().unwrap();
    let out = orthant(
        &["smooth", "--fixture", "waterpumps", "--columns", "X2", "--grid", "11", "--selector", "global-bayes", "--renormalize"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("smooth.json"));
    assert_eq!(r["density"].as_array().unwrap().len(), 11);
    assert!(r["renormalization"].as_f64().unwrap() > 0.0);
    assert!(r["density"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() >= 0.0));
}

#[test]
fn kernels_probe_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    assert!(orthant(&["kernels-probe", "--kernel", "gamma", "--x", "2", "--h", "0.1"], dir.path()).status.success());
    let r = json(&dir.path().join("kernels_probe.json"));
    assert!((r["a"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((r["b"].as_f64().unwrap() - 0.21).abs() < 1e-12);
    assert!((r["numeric"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-8);
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("nested/out");
    let status = Command::new(env!("CARGO_BIN_EXE_orthant"))
        .args(["fixture", "waterpumps"])
        .env("ORTHANT_OUT", &target)
        .current_dir(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(target.join("waterpumps.csv")).unwrap();
    assert!(text.starts_with("X1,X2,X3\n23,97,26\n"));
    assert_eq!(fs::read_dir(&target).unwrap().count(), 1);
}

#[test]
fn csv_input_round_trips_through_fixture_export() {
    let dir = TempDir::new().unwrap();
    orthant(&["fixture", "waterpumps"], dir.path());
    orthant(&["indexes", "--data", "waterpumps.csv", "--out", "a"], dir.path());
    orthant(&["indexes", "--fixture", "waterpumps", "--out", "b"], dir.path());
    assert_eq!(
        fs::read(dir.path().join("a/indexes.json")).unwrap(),
        fs::read(dir.path().join("b/indexes.json")).unwrap()
    );
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| orthant(args, dir.path()).status.code();
    assert_eq!(code(&["indexes"]), Some(64));
    assert_eq!(code(&["mo-sim", "--mu", "1", "--mu0", "0", "--n", "5"]), Some(64));
    assert_eq!(code(&["diagnose", "--fixture", "waterpumps", "--selector", "fixed"]), Some(64));
    assert_eq!(code(&["diagnose", "--fixture", "waterpumps", "--columns", "X9"]), Some(64));
    assert_eq!(code(&["diagnose", "--fixture", "waterpumps", "--kernel", "gamma,gamma"]), Some(64));
    assert_eq!(code(&["diagnose", "--fixture", "waterpumps", "--kernel", "nope"]), Some(64));
    assert_eq!(code(&["indexes", "--data", "missing.csv"]), Some(65));
    fs::write(dir.path().join("neg.csv"), "x\n1\n-2\n3\n").unwrap();
    assert_eq!(code(&["indexes", "--data", "neg.csv"]), Some(65));
    fs::write(dir.path().join("flat.csv"), "x\n5\n5\n5\n5\n5\n5\n5\n5\n").unwrap();
    assert_eq!(code(&["smooth", "--data", "flat.csv", "--selector", "cv"]), Some(65));
}
