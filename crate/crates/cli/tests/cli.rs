//! End-to-end runs of the `ggwpd` binary on the bundled configs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> PathBuf {
    repo().join("configs").join(format!("{name}.json"))
}

fn ggwpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ggwpd")).args(args).env_remove("GGWPD_OUT").output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

fn files_in(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect()
}

fn manifest_files(dir: &Path) -> BTreeSet<String> {
    read_json(&dir.join("manifest.json"))["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect()
}

#[test]
fn empty_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = read_json(&config("free_particle"));
    cfg["grid"]["x"]["count"] = 0.into();
    let file = dir.path().join("empty.json");
    fs::write(&file, cfg.to_string()).unwrap();
    let out = ggwpd(&["run", path(&file), "--out", path(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("grid.x.count: empty grid"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bundled_configs_match_the_schema_and_validate() {
    let schema = read_json(&repo().join("docs/config.schema.json"));
    let validator = jsonschema::validator_for(&schema).unwrap();
    let names: Vec<String> = fs::read_dir(repo().join("configs"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .map(|p| p.file_stem().unwrap().to_str().unwrap().to_string())
        .collect();
    for figure in ["quartic_fig1", "quartic_fig2", "quartic_fig3", "quartic_fig4", "quartic_fig5", "quartic_fig6_7", "quartic_fig8"] {
        assert!(names.iter().any(|n| n == figure), "missing {figure}");
    }
    for name in &names {
        let value = read_json(&config(name));
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
        let cfg = ggwpd_cli::ScenarioConfig::load(&config(name)).unwrap();
        cfg.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    // the schema agrees with the loader on the cross-field rules
    let mut bad = read_json(&config("free_particle"));
    bad["grid"]["t"] = serde_json::json!({"min": 1.0, "max": 2.0, "count": 3});
    assert!(!validator.is_valid(&bad));
    let mut bad = read_json(&config("free_particle"));
    bad["colour"] = "blue".into();
    assert!(!validator.is_valid(&bad));
}

#[test]
fn free_particle_verifies_against_the_analytic_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = ggwpd(&["verify", path(&config("free_particle")), "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report, read_json(&dir.path().join("verify.json")));
    assert_eq!(report["passed"], true);
    assert_eq!(check(&report, "exactness")["status"], "pass");
    assert_eq!(check(&report, "identity")["status"], "pass");
    assert_eq!(check(&report, "norm")["status"], "pass");
    assert!(files_in(dir.path()).contains("fig2_total.csv"));
}

#[test]
fn harmonic_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = ggwpd(&["verify", path(&config("harmonic")), "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(check(&report, "exactness")["status"], "pass");
}

#[test]
fn runs_are_byte_identical_and_fully_listed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = ggwpd(&["run", path(&config("quartic_fig5")), "--out", path(dir.path()), "--jobs", "3"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let files = files_in(a.path());
    assert_eq!(files, manifest_files(a.path()));
    assert_eq!(files, files_in(b.path()));
    for f in files.iter().filter(|f| *f != "manifest.json") {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
    let (ma, mb) = (read_json(&a.path().join("manifest.json")), read_json(&b.path().join("manifest.json")));
    assert_eq!(ma["config_hash"], mb["config_hash"]);
    assert_eq!(ma["config_hash"].as_str().unwrap().len(), 64);
    for name in ["fig5_contours.csv", "fig5_saddles.csv", "fig6_7_F8_saddle.csv", "fig6_7_F8_seed.csv", "fig8_F6.csv", "fig3_F7_seed.csv"] {
        assert!(files.contains(name), "missing {name}");
    }
    // every CSV has a header and full-precision rows
    let csv = fs::read_to_string(a.path().join("fig5_saddles.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("label,"));
    assert_eq!(lines.count(), 9);
}

#[test]
fn naive_indices_fail_smoothness_where_corrected_ones_pass() {
    let dir = tempfile::tempdir().unwrap();
    let naive = ggwpd(&["verify", path(&config("quartic_fig3")), "--out", path(&dir.path().join("naive")), "--method", "naive"]);
    assert_eq!(naive.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&naive.stdout).unwrap();
    let smooth = check(&report, "smoothness");
    assert_eq!(smooth["status"], "fail");
    assert!(smooth["detail"].as_str().unwrap().contains("family 7 at x = "), "{smooth}");
    assert_eq!(read_json(&dir.path().join("naive/manifest.json"))["method"], "naive");

    let fixed = ggwpd(&["verify", path(&config("quartic_fig3")), "--out", path(&dir.path().join("practical"))]);
    let report: Value = serde_json::from_slice(&fixed.stdout).unwrap();
    assert!(fixed.status.success(), "{report}");
    assert_eq!(check(&report, "foliations")["status"], "pass");
    assert_eq!(check(&report, "agreement")["status"], "pass");

    // the zero map and the critical saddle's phase history are emitted
    let files = files_in(&dir.path().join("practical"));
    assert!(files.contains("fig4_zeros.csv") && files.contains("fig3_F7_x0_saddle.csv"));
    let zeros = fs::read_to_string(dir.path().join("practical/fig4_zeros.csv")).unwrap();
    let crossed = zeros.lines().skip(1).filter(|l| l.ends_with(",1.0000000000000000e0")).count();
    assert_eq!(crossed, 1, "{zeros}");
}

#[test]
fn zeros_reports_the_crossing_near_the_sign_flip() {
    let left = ggwpd(&["zeros", path(&config("quartic_fig2")), "--family", "7", "--x", "-1.9008"]);
    assert!(left.status.success(), "{}", String::from_utf8_lossy(&left.stderr));
    let report: Value = serde_json::from_slice(&left.stdout).unwrap();
    assert_eq!(report["crossed"], 1);
    let t = report["zeros"].as_array().unwrap().iter().find(|z| z["crossed"] == true).unwrap()["time"][0].as_f64().unwrap();
    let tau = report["tau"].as_f64().unwrap();
    assert!(t / tau > 1.5 && t / tau < 2.0, "{}", t / tau);

    let centre = ggwpd(&["zeros", path(&config("quartic_fig2")), "--family", "7", "--x", "0"]);
    let report: Value = serde_json::from_slice(&centre.stdout).unwrap();
    assert_eq!(report["crossed"], 0);

    let missing = ggwpd(&["zeros", path(&config("quartic_fig2")), "--family", "12", "--x", "0"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn foliate_lists_nine_foliations() {
    let out = ggwpd(&["foliate", path(&config("quartic_fig5"))]);
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let counts: Vec<u64> =
        report["foliations"].as_array().unwrap().iter().map(|f| f["turning_points"].as_u64().unwrap()).collect();
    assert_eq!(counts, (0..9).collect::<Vec<_>>());
    let seeds: u64 = report["foliations"].as_array().unwrap().iter().map(|f| f["seeds"].as_u64().unwrap()).sum();
    assert_eq!(seeds, 2048);
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let flag_dir = dir.path().join("from_flag");
    let run = |flag: Option<&Path>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_ggwpd"));
        cmd.args(["run", path(&config("free_particle"))]).env("GGWPD_OUT", &env_dir);
        if let Some(f) = flag {
            cmd.args(["--out", path(f)]);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    run(None);
    assert!(env_dir.join("manifest.json").exists());
    run(Some(&flag_dir));
    assert!(flag_dir.join("manifest.json").exists());

    let mut cfg: ggwpd_cli::ScenarioConfig = serde_json::from_value(read_json(&config("free_particle"))).unwrap();
    assert_eq!(ggwpd_cli::output_dir(&cfg, Some(Path::new("x"))), PathBuf::from("x"));
    std::env::remove_var("GGWPD_OUT");
    assert_eq!(ggwpd_cli::output_dir(&cfg, None), Path::new("out").join("free_particle"));
    cfg.output_dir = Some("elsewhere".into());
    assert_eq!(ggwpd_cli::output_dir(&cfg, None), PathBuf::from("elsewhere"));
}

#[test]
fn transport_scenario_writes_fig1() {
    let dir = tempfile::tempdir().unwrap();
    let out = ggwpd(&["verify", path(&config("quartic_fig1")), "--out", path(dir.path())]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(out.status.success(), "{report}");
    assert_eq!(check(&report, "smoothness")["status"], "pass");
    let csv = fs::read_to_string(dir.path().join("fig1_total.csv")).unwrap();
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (c[0], c[3])
        })
        .collect();
    // the autocorrelation revives around one period
    let tau = 2.08524562206917;
    let peak = rows.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((peak.0 / tau - 1.0).abs() < 0.02, "peak at {}τ", peak.0 / tau);
    assert!(peak.1 > 1.5 * rows[0].1.max(rows[rows.len() - 1].1));
}
