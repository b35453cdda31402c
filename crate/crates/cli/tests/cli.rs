use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gapcert::eigen::smallest_eigenpairs;
use gapcert::geometry::{admissible_nodes, build_grid, DomainSpec};
use gapcert::operator::{assemble_dirichlet, Potential};
use gapcert_cli::emit::{from_json, to_json};
use gapcert_cli::RunReport;

const GAP_ONLY: &str = r#"
name = "interval-gap"
h = [0.00390625, 0.001953125]
checks = ["gap"]

[domain]
kind = "interval"
a = -0.5
b = 0.5
"#;

fn gapcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gapcert"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn unknown_check_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &GAP_ONLY.replace(r#"["gap"]"#, r#"["gap", "spectral-gap"]"#),
    );
    let out_dir = dir.path().join("out");
    let out = gapcert(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spectral-gap"));
    // Rejected before anything was computed or written.
    assert!(!out_dir.exists());
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        GAP_ONLY.replace("0.001953125", "0.0078125"),
        GAP_ONLY.replace("checks", "delta = 2.0\nchecks"),
        GAP_ONLY.replace("b = 0.5", "b = -0.5"),
        GAP_ONLY.replace("checks", "colour = 1\nchecks"),
    ] {
        let cfg = write_config(dir.path(), &bad);
        assert_eq!(gapcert(&["run", &cfg]).status.code(), Some(2), "{bad}");
    }
    assert_eq!(
        gapcert(&["run", "/nonexistent/run.toml"]).status.code(),
        Some(2)
    );
    assert_eq!(gapcert(&["run"]).status.code(), Some(2));
}

#[test]
fn gap_only_table_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GAP_ONLY);
    let out_dir = dir.path().join("out");
    let out = gapcert(&[
        "run",
        &cfg,
        "--formats",
        "table-csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = fs::read_to_string(out_dir.join("checks.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "id,computed,bound,slack,verdict");
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[0], "gap");
    let slack: f64 = cells[3].parse().unwrap();
    assert!(slack.abs() <= 1e-6, "{slack}");
    assert!(cells[4] == "marginal" || cells[4] == "pass");
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn field_table_lists_admissible_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let text = GAP_ONLY
        .replace(r#"["gap"]"#, r#"["logconcavity"]"#)
        .replace("0.00390625, ", "");
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = gapcert(&[
        "run",
        &cfg,
        "--formats",
        "field-csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let field = fs::read_to_string(out_dir.join("field.csv")).unwrap();
    assert_eq!(
        field.lines().next(),
        Some("x,y,phi0,grad_log_phi0_norm,heat")
    );

    let g = build_grid(&DomainSpec::interval(-0.5, 0.5), 1.0 / 512.0).unwrap();
    let s = smallest_eigenpairs(&assemble_dirichlet(&g, &Potential::zero()).unwrap(), 1).unwrap();
    let nodes = admissible_nodes(&g, s.ground_state(), 1e-2, false).unwrap();
    assert_eq!(field.lines().count() - 1, nodes.len());
}

#[test]
fn report_round_trips_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &GAP_ONLY.replace(r#"["gap"]"#, r#"["eigen", "gap", "modulus"]"#),
    );
    let first = gapcert(&["run", &cfg, "--seed", "3"]);
    assert_eq!(first.status.code(), Some(0));
    let text = String::from_utf8(first.stdout).unwrap();

    let report: RunReport = from_json(&text).unwrap();
    assert_eq!(to_json(&report), text);
    assert_eq!(report.config.seed, 3);

    let second = gapcert(&["run", &cfg, "--seed", "3"]);
    assert_eq!(second.stdout, text.as_bytes());

    // The echoed config reproduces the report.
    let echoed = dir.path().join("report.json");
    fs::write(&echoed, &text).unwrap();
    let third = gapcert(&["run", echoed.to_str().unwrap()]);
    assert_eq!(third.stdout, text.as_bytes());
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // λ̃₁ ≈ π² cannot reach 2ε + π² with ε = 100.
    let text = GAP_ONLY.replace(r#"["gap"]"#, r#"["neumann"]"#) + "\n[neumann]\nepsilon = 100.0\n";
    let cfg = write_config(dir.path(), &text);
    let out = gapcert(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let report: RunReport = from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.outcome, gapcert_cli::Outcome::Fail);
}

#[test]
fn list_checks_names_every_id() {
    let out = gapcert(&["list-checks"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for id in gapcert_cli::CheckId::ALL {
        assert!(text.lines().any(|l| l.starts_with(id.as_str())), "{id}");
    }
}

#[test]
fn unknown_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), GAP_ONLY);
    assert_eq!(
        gapcert(&["run", &cfg, "--formats", "xml"]).status.code(),
        Some(2)
    );
}
