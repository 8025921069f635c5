use std::fs;
use std::process::Command;

fn splash() -> Command {
    Command::new(env!("CARGO_BIN_EXE_splash"))
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let out = splash().arg("explode").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("usage: splash"), "{err}");
    assert!(err.contains("general-splash"));
}

#[test]
fn invalid_config_exits_2_with_json_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.cfg");
    fs::write(&cfg, "mode = simulate\ndomain.epsilon = -1\n").unwrap();
    let out_dir = dir.path().join("out");
    let st = splash()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("error.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "config");
    assert_eq!(v["line"], 2);
}

#[test]
fn build_domain_writes_domain_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let st = splash()
        .args(["build-domain", "--override", "domain.epsilon=0.1", "--override", "run.mesh_size=0.3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["domain.json", "mesh.txt", "domain.svg", "domain_summary.json", "config_echo.cfg"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
}

#[test]
fn simulate_with_short_window_reports_no_splash() {
    let dir = tempfile::tempdir().unwrap();
    let st = splash()
        .args(["simulate", "--override", "domain.epsilon=0.1", "--override", "run.mesh_size=0.3"])
        .args(["--override", "run.t_max_factor=0.2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(4));
    assert!(dir.path().join("series.csv").exists());
    assert!(!dir.path().join("splash_event.json").exists());
}
