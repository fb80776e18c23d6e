use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_confdim"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path, workers: &str) -> Output {
    bin().args(args).arg("--out").arg(out).env("CONFDIM_WORKERS", workers).output().unwrap()
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

/// Compares against the checked-in file; `CONFDIM_BLESS=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = golden(name);
    if std::env::var_os("CONFDIM_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    assert_eq!(actual, read(path), "{name} drifted from its golden copy");
}

#[test]
fn covering_report_matches_golden() {
    let out = scratch("covering");
    let o = run(&["covering", "--space", "interval", "--depth", "4"], &out, "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_golden("covering_interval_d4.json", &read(out.join("report.json")));
}

#[test]
fn modulus_outputs_match_golden() {
    let out = scratch("modulus");
    let o = run(&["modulus", "--space", "interval", "--depth", "6", "--p", "1.5,2", "--L", "2", "--kmax", "2"], &out, "1");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_golden("modulus_interval_d6.csv", &read(out.join("modulus_curves.csv")));
    assert_golden("modulus_interval_d6.json", &read(out.join("report.json")));
}

#[test]
fn modulus_row_matches_library_call() {
    use confdim_core::exponent::{auto_base_levels, modulus_curve, Variant};
    use confdim_core::modulus::SolverOptions;
    use confdim_core::{make_space, Generator, Hierarchy, Sequential};
    let out = scratch("modulus_row");
    let o = run(&["modulus", "--space", "interval", "--p", "2", "--L", "2", "--k", "3"], &out, "2");
    assert!(o.status.success());
    let csv = read(out.join("modulus_curves.csv"));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 2.0);
    assert_eq!(row[1].parse::<f64>().unwrap(), 2.0);
    assert_eq!(row[2], "3");
    assert_eq!(row[4], "standard");
    let h = Hierarchy::build(make_space(&Generator::Interval, 6).unwrap(), 2.0, 3.0, 6).unwrap();
    let base = auto_base_levels(&h, 3, usize::MAX).unwrap();
    let c = modulus_curve(&h, 2.0, 2.0, (3, 3), &base, Variant::Standard, &SolverOptions::default(), &Sequential).unwrap();
    assert_eq!(row[3].parse::<f64>().unwrap().to_bits(), c.entries[0].value.to_bits());
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let args = ["gauge", "--space", "interval", "--depth", "6", "--p", "1.2", "--pairs", "2000"];
    let a = scratch("det_a");
    let b = scratch("det_b");
    assert!(run(&args, &a, "1").status.success());
    assert!(run(&args, &b, "3").status.success());
    for f in ["report.json", "gauge_report.json"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
    let args = ["exponent", "--space", "cantor", "--a", "3", "--depth", "6", "--kmax", "4"];
    let a = scratch("det_c");
    let b = scratch("det_d");
    assert!(run(&args, &a, "1").status.success());
    assert!(run(&args, &b, "2").status.success());
    for f in ["report.json", "exponent.json", "modulus_curves.csv"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f}");
    }
}

#[test]
fn cantor_exponent_bracket_is_near_zero() {
    let out = scratch("cantor");
    let o = run(&["exponent", "--space", "cantor", "--a", "3", "--depth", "6", "--kmax", "4"], &out, "1");
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(out.join("exponent.json"))).unwrap();
    assert_eq!(v["q_lo"].as_f64().unwrap(), 0.0);
    assert!(v["q_hi"].as_f64().unwrap() <= 0.05);
}

#[test]
fn gauge_report_has_unit_k2() {
    let out = scratch("gauge");
    let o = run(&["gauge", "--space", "interval", "--p", "1.2", "--pairs", "1000"], &out, "1");
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(out.join("gauge_report.json"))).unwrap();
    let h4 = &v["hypotheses"]["h4"];
    assert!(h4["passed"].as_bool().unwrap());
    assert!((h4["k2"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    let summary = String::from_utf8(o.stdout).unwrap();
    assert!(summary.lines().count() <= 24, "{summary}");
}

#[test]
fn precondition_errors_exit_with_2_and_name_the_operation() {
    let out = scratch("precondition");
    let o = run(&["covering", "--space", "interval", "--depth", "3", "--n-max", "9"], &out, "1");
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["module"], "coverings");
    assert_eq!(v["error"]["operation"], "build_covering");
    assert_eq!(v["error"]["kind"], "precondition");
    assert!(String::from_utf8_lossy(&o.stderr).contains("coverings::build_covering"));
}

#[test]
fn inconclusive_estimate_exits_with_3() {
    let out = scratch("inconclusive");
    let args = ["exponent", "--space", "interval", "--depth", "8", "--base-levels", "3", "--kmax", "5", "--p", "1.1"];
    let o = run(&args, &out, "1");
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    assert_eq!(v["error"]["module"], "critical_exponent");
    assert_eq!(v["error"]["kind"], "inconclusive");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let out = scratch("config");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("run.toml");
    std::fs::write(&cfg, "seed = 5\n[space]\ngenerator = \"cantor\"\ndepth = 5\n[hierarchy]\na = 3\n").unwrap();
    let o = bin()
        .args(["space-stats", "--config"])
        .arg(&cfg)
        .args(["--depth", "4", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["space"]["depth"], 4);
    assert_eq!(v["result"]["points"], 16);
}

#[test]
fn unknown_config_keys_exit_with_2() {
    let out = scratch("unknown_key");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "[space]\ngenrator = \"cantor\"\n").unwrap();
    let o = bin().args(["space-stats", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cli::load_config"));
}

#[test]
fn nerve_check_reports_properties() {
    let out = scratch("nerve");
    let o = run(&["nerve-check", "--space", "interval", "--depth", "5"], &out, "1");
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&read(out.join("report.json"))).unwrap();
    let items = v["result"]["properties"]["items"].as_array().unwrap();
    assert_eq!(items.len(), 4);
    assert!(v["result"]["hyperbolicity_delta"].as_f64().unwrap() >= 0.0);
}
