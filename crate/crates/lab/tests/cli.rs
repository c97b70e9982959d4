use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleman-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(lab(&[]).status.code(), Some(2));
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        lab(&["constants", "--format", "yaml"]).status.code(),
        Some(2)
    );
    assert_eq!(
        lab(&["constants", "--seed", "9223372036854775808"])
            .status
            .code(),
        Some(2)
    );
    let missing = lab(&["constants", "--config", "/nonexistent/x.toml"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("/nonexistent/x.toml"));
}

#[test]
fn config_errors_name_the_key_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[problem]\nd = 2\n\n[field]\na0 = [[1.0, 0.5], [0.0, 1.0]]\n",
    )
    .unwrap();
    let o = lab(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field.a0"), "{}", stderr(&o));

    std::fs::write(&path, "[problem]\nd = 2\nmue = 1.0\n").unwrap();
    let o = lab(&["constants", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("mue") && stderr(&o).contains("line 3"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn constants_of_the_laplacian_pass() {
    let o = lab(&["constants", "--config", &config("laplacian.toml")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[PASS] constants") && text.contains("overall: PASS"));
}

#[test]
fn inadmissible_mu_fails_and_skips_later_stages() {
    let o = lab(&[
        "suite",
        "--config",
        &config("inadmissible.toml"),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("admissibility_margin"),
        "{}",
        stderr(&o)
    );
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let stages = report["stages"].as_array().unwrap();
    assert_eq!(stages[0]["status"], "failed");
    assert!(stages[1..].iter().all(|s| s["status"] == "skipped"));
    assert!(stages[1]["note"].as_str().unwrap().contains("mu"));
}

fn sweep_with_c_factor(dir: &Path, c_factor: f64) -> Output {
    let path = dir.join(format!("c{c_factor}.toml"));
    std::fs::write(
        &path,
        format!("[problem]\nd = 2\n\n[sweep]\npoints = 3\nc_factor = {c_factor:e}\n"),
    )
    .unwrap();
    lab(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--format",
        "csv",
    ])
}

/// The Laplacian ratios exceed `10^10`, so `C/10` still passes while a
/// `10^{-12}` factor must be reported against a named check.
#[test]
fn shrinking_c_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(sweep_with_c_factor(dir.path(), 0.1).status.code(), Some(0));
    let o = sweep_with_c_factor(dir.path(), 1e-12);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("failed: carleman: u0 alpha=") && stderr(&o).contains("ratio"),
        "{}",
        stderr(&o)
    );
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv
        .lines()
        .any(|l| l.starts_with("carleman,") && l.contains(",false,")));
}

#[test]
fn sweep_writes_report_and_csv_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = lab(&[
        "sweep",
        "--config",
        &config("laplacian_d1.toml"),
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("report.txt")).unwrap(), o.stdout);
    let csv = std::fs::read_to_string(out.join("sweep_u0.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("alpha,lhs_grad,lhs_u,rhs,ratio,log10_scale")
    );
    assert_eq!(lines.count(), 8);
}
