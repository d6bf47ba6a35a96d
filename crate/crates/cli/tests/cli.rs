use std::fs;
use std::path::{Path, PathBuf};

use assert_cmd::Command;
use predicates::str::contains;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cli() -> Command {
    Command::cargo_bin("mchain-rel").unwrap()
}

fn run(cmd: &str, config: &str, out: &Path) -> assert_cmd::assert::Assert {
    cli().arg(cmd).arg(fixture(config)).arg("--out-dir").arg(out).assert()
}

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn reliability_five_stages() {
    let dir = TempDir::new().unwrap();
    run("reliability", "five_stage.json", dir.path()).success();
    let csv = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("stage,pf,safe_mean,safe_sd,safe_cov\n"));
    let rows = parse_csv(&csv);
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], (k + 1).to_string());
        assert_eq!(row.len(), 5);
    }
    let report = fs::read_to_string(dir.path().join("reliability_report.txt")).unwrap();
    assert!(report.contains("states (N): 53"), "{report}");
    assert!(report.contains("\"allowable\": 19.0"), "config is echoed");
    assert!(report.contains("row set to a point mass"), "warnings are listed");
}

#[test]
fn reliability_matches_golden_profile() {
    let dir = TempDir::new().unwrap();
    run("reliability", "five_stage.json", dir.path()).success();
    let got = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let want = fs::read_to_string(fixture("golden/five_stage_profile.csv")).unwrap();
    let (got, want) = (parse_csv(&got), parse_csv(&want));
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(&want) {
        for (a, b) in g.iter().zip(w) {
            let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
        }
    }
}

#[test]
fn mode_flag_overrides_config() {
    let dir = TempDir::new().unwrap();
    cli()
        .args(["reliability", "--mode", "instantaneous"])
        .arg(fixture("five_stage.json"))
        .arg("--out-dir")
        .arg(dir.path())
        .assert()
        .success();
    let rows = parse_csv(&fs::read_to_string(dir.path().join("profile.csv")).unwrap());
    let golden = parse_csv(&fs::read_to_string(fixture("golden/five_stage_profile.csv")).unwrap());
    let pf = |r: &Vec<Vec<String>>| r[4][1].parse::<f64>().unwrap();
    assert!(pf(&rows) < pf(&golden));
}

#[test]
fn zero_sigma_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    run("reliability", "sigma_zero.json", dir.path())
        .code(1)
        .stderr(contains("stages[2].sigma"))
        .stderr(contains("stage 3"));
}

#[test]
fn unit_correlation_is_numerical() {
    let dir = TempDir::new().unwrap();
    run("reliability", "rho_one.json", dir.path())
        .code(2)
        .stderr(contains("degenerate correlation"));
}

#[test]
fn missing_config_is_a_config_error() {
    cli().args(["reliability", "no/such/file.json"]).assert().code(1);
}

#[test]
fn usage_errors() {
    cli().assert().code(1);
    cli()
        .args(["reliability", "--mode", "sometimes", "x.json"])
        .assert()
        .code(1);
    cli().arg("--help").assert().success();
}

#[test]
fn stationary_outputs() {
    let dir = TempDir::new().unwrap();
    run("stationary", "stationary_symmetric.json", dir.path()).success();
    assert_eq!(
        fs::read_to_string(dir.path().join("stationary.csv")).unwrap(),
        "state,pi\n1,0.5\n2,0.5\n"
    );
    run("stationary", "stationary_matrix.json", dir.path()).success();
    assert_eq!(
        fs::read_to_string(dir.path().join("stationary.csv")).unwrap(),
        "state,pi\n1,0.6\n2,0.4\n"
    );
    let report = fs::read_to_string(dir.path().join("stationary_report.txt")).unwrap();
    assert!(report.contains("residual"));
}

#[test]
fn reducible_chain_is_numerical() {
    let dir = TempDir::new().unwrap();
    run("stationary", "stationary_reducible.json", dir.path())
        .code(2)
        .stderr(contains("not ergodic"));
}

#[test]
fn stationary_requires_its_block() {
    let dir = TempDir::new().unwrap();
    run("stationary", "five_stage.json", dir.path())
        .code(1)
        .stderr(contains("stationary"));
}

#[test]
fn validate_full_fixture_passes() {
    let dir = TempDir::new().unwrap();
    run("validate", "five_stage.json", dir.path()).success();
    let report = fs::read_to_string(dir.path().join("validation_report.txt")).unwrap();
    assert!(report.contains("max TPM cell deviation"));
    assert!(report.contains("overall: PASS"));
    let csv = fs::read_to_string(dir.path().join("validation.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("pf,")).count(), 10);
}

#[test]
fn validate_few_paths_passes() {
    let dir = TempDir::new().unwrap();
    run("validate", "validate_tiny.json", dir.path()).success();
}

#[test]
fn validate_detects_corrupted_correlation() {
    let dir = TempDir::new().unwrap();
    run("validate", "validate_corrupted.json", dir.path()).code(3);
    let report = fs::read_to_string(dir.path().join("validation_report.txt")).unwrap();
    assert!(report.contains("overall: FAIL"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for dir in [&a, &b] {
        run("validate", "validate_corrupted.json", dir.path()).code(3);
        run("reliability", "five_stage.json", dir.path()).success();
    }
    for name in [
        "validation.csv",
        "validation_report.txt",
        "profile.csv",
        "reliability_report.txt",
    ] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_changes_simulation() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run("validate", "validate_corrupted.json", a.path()).code(3);
    cli()
        .args(["validate", "--seed", "6"])
        .arg(fixture("validate_corrupted.json"))
        .arg("--out-dir")
        .arg(b.path())
        .assert()
        .code(3);
    assert_ne!(
        fs::read(a.path().join("validation.csv")).unwrap(),
        fs::read(b.path().join("validation.csv")).unwrap()
    );
}

#[test]
fn distance_command() {
    cli()
        .arg("distance")
        .arg(fixture("p_uniform.csv"))
        .arg(fixture("q_point.csv"))
        .assert()
        .success()
        .stdout("1.57079632679\n");
    cli()
        .arg("distance")
        .arg(fixture("p_uniform.csv"))
        .arg(fixture("p_uniform.csv"))
        .assert()
        .success()
        .stdout("0\n");
}

#[test]
fn distance_rejects_bad_vectors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0.5\n0.6\n").unwrap();
    cli()
        .arg("distance")
        .arg(&bad)
        .arg(fixture("p_uniform.csv"))
        .assert()
        .code(1);
    let short = dir.path().join("short.csv");
    fs::write(&short, "1.0\n").unwrap();
    cli()
        .arg("distance")
        .arg(&short)
        .arg(fixture("p_uniform.csv"))
        .assert()
        .code(1);
}
