use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(format!("{name}.toml"))
}

fn clear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vlb-clear")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn structured(args: &[&str]) -> serde_json::Value {
    let out = clear(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const GOLDEN_VLB_TABLE: &str = "\
MI  t  d  p1  p2  pC  pDe  ea  ee  λ  λ range
 1  1  0   1   0   1    0   1   0  5   [5, 5]
 2  1  3   2   0   0    1   0   0  5   [5, 9]
";

#[test]
fn vlb_table_matches_golden_output() {
    let path = fixture("table1");
    let out = clear(&["--scenario", path.to_str().unwrap(), "--mode", "vlb"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let dispatch: String = text.lines().skip(2).take(3).map(|l| format!("{l}\n")).collect();
    assert_eq!(dispatch, GOLDEN_VLB_TABLE);
}

#[test]
fn structured_output_is_deterministic() {
    let path = fixture("table5_discount");
    let args = ["--scenario", path.to_str().unwrap(), "--format", "structured"];
    let first = clear(&args);
    let second = clear(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn adversarial_audit_flags_the_split_cycle() {
    let path = fixture("table1");
    let report = structured(&[
        "--scenario",
        path.to_str().unwrap(),
        "--mode",
        "split_end_level",
        "--price-selection",
        "range_min",
        "--format",
        "structured",
    ]);
    let cycle = &report["cycles"][0];
    assert_eq!(cycle["verdict"], "fail");
    assert!((cycle["storage_surplus"].as_f64().unwrap() + 3.0).abs() < 1e-6);
}

#[test]
fn compare_lists_modes_in_request_order() {
    let path = fixture("table4");
    let report = structured(&[
        "--scenario",
        path.to_str().unwrap(),
        "--compare",
        "ideal,split_end_level,vlb",
        "--format",
        "structured",
    ]);
    let runs = report["runs"].as_array().unwrap();
    let welfare: Vec<(String, f64)> = runs
        .iter()
        .map(|r| (r["mode"].as_str().unwrap().to_string(), r["report"]["totals"]["social_welfare"].as_f64().unwrap()))
        .collect();
    let expected = [("ideal", 21.0), ("split_end_level", -1.0), ("vlb", 16.0)];
    for ((mode, sw), (want_mode, want_sw)) in welfare.iter().zip(expected) {
        assert_eq!(mode, want_mode);
        assert!((sw - want_sw).abs() < 1e-6, "{mode}: {sw}");
    }
}

#[test]
fn output_file_and_lp_dump() {
    let dir = tempfile::tempdir().unwrap();
    let lp_dir = dir.path().join("lp");
    let out_path = dir.path().join("report.json");
    let path = fixture("table1");
    let out = clear(&[
        "--scenario",
        path.to_str().unwrap(),
        "--mode",
        "vlb",
        "--format",
        "structured",
        "--dump-lp",
        lp_dir.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["intervals"].as_array().unwrap().len(), 2);

    let mut files: Vec<String> =
        std::fs::read_dir(&lp_dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["vlb-mi0-clearing.lp", "vlb-mi0-valuation.lp", "vlb-mi1-clearing.lp"]);
    let text = std::fs::read_to_string(lp_dir.join("vlb-mi0-clearing.lp")).unwrap();
    assert!(text.starts_with("Maximize"));
    assert!(text.contains("balance_0_:"));
}

#[test]
fn invalid_scenario_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text =
        std::fs::read_to_string(fixture("table1")).unwrap().replace("discount_rate = 0.0", "discount_rate = 1.5");
    assert!(text.contains("1.5"), "fixture layout changed");
    std::fs::write(&path, text).unwrap();
    let out = clear(&["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("discount_rate"));
}

#[test]
fn syntax_error_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "storage = [").unwrap();
    let out = clear(&["--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn range_selection_without_ranges_exits_with_2() {
    let path = fixture("table1");
    let out = clear(&["--scenario", path.to_str().unwrap(), "--price-selection", "range_min", "--no-price-ranges"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_end_level_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stuck.toml");
    let text = std::fs::read_to_string(fixture("table1")).unwrap();
    // The first interval must store 1 MWh; offer nothing to store.
    let text = text.replacen("max = [2.0]", "max = [0.0]", 2);
    std::fs::write(&path, &text).unwrap();
    let out = clear(&["--scenario", path.to_str().unwrap(), "--mode", "split_end_level"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("interval 0"));
}

#[test]
fn missing_file_exits_with_1() {
    let out = clear(&["--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
