//! End-to-end checks: the binary's exit codes, CSV determinism, and the
//! documented error diagnostics.

use std::path::PathBuf;
use std::process::Command;

use isac_core::scenario::{Scenario, ScenarioConfig, ScenarioFile};
use isac_lab::experiment::{run_on, ExperimentKind};
use isac_lab::sweep::SweepAxis;

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("isac_lab_test_{}_{name}", std::process::id()));
    p
}

fn tiny_scenario_text() -> String {
    let mut f = ScenarioFile::baseline();
    f.tx_antennas = 4;
    f.rx_antennas = 4;
    f.symbols = 64;
    f.grid.points = Some(3);
    f.sinr_min_db = 5.0;
    f.to_toml_string()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-lab"))
}

#[test]
fn binary_runs_and_is_deterministic() {
    let scenario = tmp_path("scn.toml");
    std::fs::write(&scenario, tiny_scenario_text()).unwrap();
    let out1 = tmp_path("run1.csv");
    let out2 = tmp_path("run2.csv");
    for out in [&out1, &out2] {
        let status = bin()
            .args(["pd-vs-l", "--scenario"])
            .arg(&scenario)
            .arg("--out")
            .arg(out)
            .args(["--sweep", "l=16:1024:7:log"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed and config must give byte-identical CSV");
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# kind = pd-vs-l\n"));
    assert!(text.contains("\nl,pd_gamma_c_5db"));
    for p in [&scenario, &out1, &out2] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn config_errors_exit_one_with_diagnostics() {
    let scenario = tmp_path("bad.toml");
    std::fs::write(&scenario, "tx_antennas = \"lots\"\n").unwrap();
    let out = tmp_path("never.csv");
    let output = bin()
        .args(["pd-surface", "--scenario"])
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(
        err.contains("error"),
        "stderr should carry diagnostics: {err}"
    );
    // toml errors point at the offending line
    assert!(
        err.contains("line 1") || err.contains("tx_antennas"),
        "{err}"
    );
    let _ = std::fs::remove_file(&scenario);
}

#[test]
fn missing_scenario_exits_one() {
    let output = bin()
        .args([
            "pd-surface",
            "--scenario",
            "/nonexistent/nope.toml",
            "--out",
            "/tmp/x.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bad_sweep_exits_one() {
    let output = bin()
        .args([
            "pd-vs-l",
            "--scenario",
            "/tmp/whatever.toml",
            "--out",
            "/tmp/x.csv",
            "--sweep",
            "l=1:2:1:lin",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn mc_validate_flags_agreement() {
    let scn = Scenario::new(
        ScenarioConfig::from_file(&{
            let mut f = ScenarioFile::baseline();
            f.tx_antennas = 4;
            f.rx_antennas = 4;
            f.symbols = 128;
            f.grid.points = Some(3);
            f
        })
        .unwrap(),
    )
    .unwrap();
    let sweeps = [
        SweepAxis::parse("gamma_c_db=-8:-5:2:db").unwrap(),
        SweepAxis::parse("gamma_s_db=-16:-12:2:db").unwrap(),
    ];
    let out = run_on(ExperimentKind::McValidate, &scn, &sweeps, 20_000).unwrap();
    let pfa_ok = out.table.column_index("pfa_ok").unwrap();
    let pd_ok = out.table.column_index("pd_ok").unwrap();
    for row in &out.table.rows {
        assert_eq!(row[pfa_ok], "1", "false-alarm calibration off: {row:?}");
        assert_eq!(row[pd_ok], "1", "detection probability off: {row:?}");
    }
}

#[test]
fn qq_approx_emits_probabilities() {
    let scn = Scenario::new(
        ScenarioConfig::from_file(&{
            let mut f = ScenarioFile::baseline();
            f.tx_antennas = 4;
            f.rx_antennas = 4;
            f.grid.points = Some(3);
            f
        })
        .unwrap(),
    )
    .unwrap();
    let out = run_on(ExperimentKind::QqApprox, &scn, &[], 0).unwrap();
    assert_eq!(out.table.rows.len(), 4 * 21 * 21);
    for row in &out.table.rows {
        for col in 3..6 {
            let v: f64 = row[col].parse().unwrap();
            assert!((0.0..=1.0).contains(&v), "{row:?}");
        }
    }
}
