//! End-to-end checks of the `qmem` binary: exit codes, determinism and the
//! file-control path.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qmem(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmem"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_demo(dir: &Path, name: &str, extra: &str) -> String {
    let body = if extra.is_empty() {
        r#"{"preset": "single-qubit-demo"}"#.to_string()
    } else {
        format!(r#"{{"preset": "single-qubit-demo", {extra}}}"#)
    };
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn validate_passes_on_the_preset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "demo.json", "");
    let out = qmem(&["validate", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for check in ["closure", "ccr", "state-admissibility", "oracle-drift"] {
        assert!(text.contains(check), "missing {check} in {text}");
    }
}

#[test]
fn validate_names_the_failing_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "bad.json", r#""initial_state": {"mu0": [0, 0, 1.5]}"#);
    let out = qmem(&["validate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("state-admissibility"), "{text}");

    let cfg = write_demo(
        dir.path(),
        "rank.json",
        r#""f": [[1, 0, 0], [2, 0, 0]]"#,
    );
    let out = qmem(&["validate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("selection-rank"), "{text}");
}

#[test]
fn malformed_config_reports_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "step.json", r#""step": 0.5"#);
    let out = qmem(&["simulate", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmem(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "demo.json", "");
    let out1 = qmem(&["simulate", &cfg, "--out", "a"], dir.path());
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    let out2 = qmem(&["simulate", &cfg, "--out", "b"], dir.path());
    assert!(out2.status.success());
    let a = fs::read(dir.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trajectory.csv")).unwrap();
    assert_eq!(a, b, "identical configs must produce byte-identical output");
}

#[test]
fn zero_valued_control_file_matches_zero_control() {
    let dir = tempfile::tempdir().unwrap();
    // Zero-control run.
    let cfg_zero = write_demo(dir.path(), "zero.json", r#""control": "zero""#);
    let out = qmem(&["simulate", &cfg_zero, "--out", "zero_out"], dir.path());
    assert!(out.status.success());

    // A control file with all-zero samples.
    let mut file = String::from("t,U_1,U_2,U_3\n");
    for i in 0..=100 {
        file.push_str(&format!("{},0,0,0\n", i as f64 * 0.01));
    }
    fs::write(dir.path().join("u.csv"), file).unwrap();
    let cfg_file = write_demo(dir.path(), "file.json", r#""control": "file:u.csv""#);
    let out = qmem(&["simulate", &cfg_file, "--out", "file_out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let a = fs::read(dir.path().join("zero_out/trajectory.csv")).unwrap();
    let b = fs::read(dir.path().join("file_out/trajectory.csv")).unwrap();
    assert_eq!(a, b, "zero-valued file control must match the zero control byte for byte");
}

#[test]
fn blow_up_writes_partial_file_and_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Astronomically large control drives the linear ODE past f64 range.
    let mut file = String::from("t,U_1,U_2,U_3\n");
    for i in 0..=10 {
        file.push_str(&format!("{},1e155,0,0\n", i as f64 * 0.1));
    }
    fs::write(dir.path().join("boom.csv"), file).unwrap();
    let cfg = write_demo(dir.path(), "boom.json", r#""control": "file:boom.csv""#);
    let out = qmem(&["simulate", &cfg, "--out", "boom_out"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("overflow"));
    let partial = fs::read_to_string(dir.path().join("boom_out/trajectory.csv")).unwrap();
    let rows = partial.lines().count();
    assert!(rows >= 2, "header plus at least the initial sample, got {rows}");
    assert!(rows < 2002, "blow-up must truncate the file, got {rows}");
}

#[test]
fn compare_rows_satisfy_the_accounting_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "demo.json", r#""step": 1e-3"#);
    let out = qmem(&["compare", &cfg, "--out", "cmp"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("cmp/compare.csv")).unwrap();
    let mut seen = 0;
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if ["zero", "pointwise", "hjb1"].contains(&cells[0]) {
            let delta: f64 = cells[1].parse().unwrap();
            let pen: f64 = cells[2].parse().unwrap();
            let phi: f64 = cells[3].parse().unwrap();
            assert!((phi - (delta + pen)).abs() <= 1e-10, "{line}");
            seen += 1;
        }
    }
    assert_eq!(seen, 3);
}

#[test]
fn oracle_command_reports_four_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_demo(dir.path(), "demo.json", r#""step": 1e-3"#);
    let out = qmem(&["oracle", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    for check in ["drift", "diffusion", "mean-path", "two-point-path"] {
        assert!(text.contains(check), "missing {check}");
    }
}

#[test]
fn hjb_command_emits_expansion_values_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    // Reduced control authority keeps the configured scale inside the
    // asymptotic regime.
    let cfg = write_demo(
        dir.path(),
        "mild.json",
        r#""k": [[0.3, 0, 0], [0, 0.3, 0], [0, 0, 0.3]], "step": 1e-3"#,
    );
    let out = qmem(&["hjb", &cfg, "--out", "hjb_out"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Psi0(0,z0)"));
    assert!(text.contains("Psi1(0,z0)"));
    // Residual ratios sit in the quadratic-scaling window.
    let csv = fs::read_to_string(dir.path().join("hjb_out/hjb.csv")).unwrap();
    let mut ratio_count = 0;
    for line in csv.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() == 4 && cells[0].parse::<f64>().is_ok() {
            let ratio: f64 = cells[3].parse().unwrap();
            assert!((3.5..=4.5).contains(&ratio), "residual ratio {ratio} out of window");
            ratio_count += 1;
        }
    }
    assert_eq!(ratio_count, 4);
}

#[test]
fn config_canonical_form_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_text = r#"{"preset": "single-qubit-demo", "control": "hjb1"}"#;
    fs::write(dir.path().join("one.json"), cfg_text).unwrap();
    let sc = qmem_cli::Scenario::from_json(cfg_text).unwrap();
    let canon = serde_json::to_string_pretty(sc.canonical()).unwrap();
    let sc2 = qmem_cli::Scenario::from_json(&canon).unwrap();
    assert_eq!(sc.canonical(), sc2.canonical());
}
