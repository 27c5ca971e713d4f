use std::fs;
use std::process::Command;

fn prequant() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prequant"))
}

#[test]
fn list_names_every_scenario() {
    let out = prequant().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in prequant::scenarios::scenario_names() {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn passing_run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let status = prequant()
        .args(["run", "bs-sphere", "--set", "params.k=1", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("report.toml")).unwrap();
    let parsed = prequant::scenarios::Report::from_toml(&report).unwrap();
    assert!(parsed.pass);
    let csv = fs::read_to_string(dir.path().join("sphere-k1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "level,holonomy_re,holonomy_im,residual");
    assert_eq!(lines.len(), 4);
    assert!(dir.path().join("sphere-k1.dat").exists());
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // an absurdly strict tolerance turns a passing check red
    let status = prequant()
        .args(["run", "bs-sphere", "--set", "params.k=1", "--set", "tolerances.holonomy=1e-300", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    let status = prequant().args(["run", "no-such-scenario"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = prequant().args(["run", "bs-sphere", "--set", "params.bogus=1"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = prequant().args(["run", "bs-sphere", "--set", "tolerances.level=-1"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn config_file_and_env_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "# small run\nparams.k = 2\n\nrun.seed = 5  # fixed\n").unwrap();
    let root = dir.path().join("root");
    let status = prequant()
        .args(["run", "bs-sphere", "--config"])
        .arg(&cfg)
        .env("PREQUANT_OUT", &root)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report = fs::read_to_string(root.join("bs-sphere").join("report.toml")).unwrap();
    let parsed = prequant::scenarios::Report::from_toml(&report).unwrap();
    assert_eq!(parsed.seed, 5);
    assert!(root.join("bs-sphere").join("sphere-k2.csv").exists());
}
